//! Distance `γ` between an ensemble's ideal twirl and the Haar twirl.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Result, UrbError};
use crate::linalg::{max_abs_diff_r, spectral_norm};
use crate::twirling::beta::{beta_haar, BetaTensor};
use crate::twirling::ensemble::GateEnsemble;
use crate::twirling::twirl::{haar_twirl, ideal_twirl, SubspaceProjector};

/// Trivial bound from the data processing inequality.
pub const TRIVIAL_GAMMA: f64 = 2.0;
/// Ensembles with `gamma_exact_so` below this are certified 2-designs.
pub const DESIGN_TOL: f64 = 1e-9;

/// `|||Λ*_R − Λ*|||₂` on the chosen subspace, by dense SVD.
pub fn gamma_exact_so(e: &GateEnsemble, sub: &SubspaceProjector) -> Result<f64> {
    if sub.dim() != e.dim() {
        return Err(UrbError::DimensionMismatch {
            expected: e.dim(),
            got: sub.dim(),
        });
    }
    let diff = ideal_twirl(e)?.sub(&haar_twirl(e.dim())?)?;
    Ok(diff.so_norm_on(sub))
}

pub fn is_two_design(e: &GateEnsemble) -> Result<bool> {
    Ok(gamma_exact_so(e, &SubspaceProjector::channels(e.dim())?)? < DESIGN_TOL)
}

/// `√( Σ_{kl,k'l'} | Σ_{ij} D_{ij}^{kl} D_{ij}^{k'l'} | )` with `D = β − β(η)`.
pub fn gamma_bound_l2(b: &BetaTensor) -> Result<f64> {
    let diff = b.sub(&beta_haar(b.dim())?)?;
    let m = diff.matrix();
    let gram = m * m.transpose();
    Ok(gram.iter().map(|x| x.abs()).sum::<f64>().sqrt())
}

/// `max_i Σ_{kl} |β_{ii}^{kl} − β_{ii}^{kl}(η)|`, valid when the twirl is
/// right-invariant under the Pauli twirl.
pub fn gamma_bound_induced_l1(b: &BetaTensor) -> Result<f64> {
    let off = b.off_diagonal_input_weight();
    if off > 1e-10 {
        return Err(UrbError::Hypothesis(format!(
            "right invariance Λ(μ) = Λ(μ)∘Λ(μ_P) fails (β_ij^kl up to {off:.3e} for i != j)"
        )));
    }
    let diff = b.sub(&beta_haar(b.dim())?)?;
    let n = b.dim() * b.dim();
    let m = diff.matrix();
    Ok((0..n)
        .map(|i| m.column(i + n * i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max))
}

fn channel_key(ptm: &crate::linalg::RMat) -> Vec<i64> {
    ptm.iter().map(|x| (x * 1e7).round() as i64).collect()
}

/// Aggregated weight per distinct ideal unitary channel.
fn weights_by_channel(e: &GateEnsemble) -> (HashMap<Vec<i64>, f64>, Vec<(crate::linalg::RMat, f64)>) {
    let mut map: HashMap<Vec<i64>, f64> = HashMap::new();
    let mut list: Vec<(crate::linalg::RMat, f64)> = Vec::new();
    for g in e.elements() {
        let key = channel_key(g.ideal.ptm());
        *map.entry(key).or_insert(0.0) += g.probability;
        list.push((g.ideal.ptm().clone(), g.probability));
    }
    (map, list)
}

fn lookup_weight(
    ptm: &crate::linalg::RMat,
    map: &HashMap<Vec<i64>, f64>,
    list: &[(crate::linalg::RMat, f64)],
) -> Option<f64> {
    if let Some(&w) = map.get(&channel_key(ptm)) {
        return Some(w);
    }
    // rounding boundary: fall back to a tolerance scan
    let matches: Vec<f64> = list
        .iter()
        .filter(|(p, _)| max_abs_diff_r(p, ptm) <= 1e-10)
        .map(|(_, w)| *w)
        .collect();
    if matches.is_empty() {
        None
    } else {
        Some(matches.iter().sum())
    }
}

/// `2(1 − m_S(μ)/M_S(ν))` where `ν` is a 2-design supported on `S`.
pub fn gamma_bound_convex(e: &GateEnsemble, design: &GateEnsemble) -> Result<f64> {
    if e.dim() != design.dim() {
        return Err(UrbError::DimensionMismatch {
            expected: e.dim(),
            got: design.dim(),
        });
    }
    let (emap, elist) = weights_by_channel(e);
    let (dmap, _) = weights_by_channel(design);
    let big_m = dmap.values().cloned().fold(0.0, f64::max);
    let mut small_m = f64::INFINITY;
    for (idx, g) in design.elements().iter().enumerate() {
        let w = lookup_weight(g.ideal.ptm(), &emap, &elist)
            .ok_or_else(|| UrbError::Hypothesis(format!("design element {idx} is not in the ensemble's support")))?;
        small_m = small_m.min(w);
    }
    Ok((2.0 * (1.0 - small_m / big_m)).max(0.0))
}

/// Which norm a reported `γ` refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaNorm {
    /// Exact induced SO norm.
    So,
    /// Upper estimate of the induced trace norm, `d^{3/2}` times the SO value.
    TrEstimate,
    /// Certified upper bound on the induced diamond norm.
    DiamondBound,
}

impl std::fmt::Display for GammaNorm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GammaNorm::So => "so",
            GammaNorm::TrEstimate => "tr-estimate",
            GammaNorm::DiamondBound => "diamond-bound",
        })
    }
}

impl std::str::FromStr for GammaNorm {
    type Err = UrbError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "so" => Ok(GammaNorm::So),
            "tr-estimate" => Ok(GammaNorm::TrEstimate),
            "diamond-bound" => Ok(GammaNorm::DiamondBound),
            other => Err(UrbError::Unsupported(format!("unknown norm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaReport {
    pub dim: usize,
    /// `|||Λ*_R − Λ*|||₂` on differences of channels.
    pub exact_so_v0: f64,
    /// Same on the span of channels.
    pub exact_so_v: f64,
    /// `d^{3/2}` times the SO value: bounds the induced trace norm.
    pub tr_chain: f64,
    /// `d²` times the SO value: bounds the induced diamond norm.
    pub diamond_chain: f64,
    pub l2_bound: f64,
    /// `None` when right invariance under the Pauli twirl fails.
    pub induced_l1_bound: Option<f64>,
    pub convex_bound: Option<f64>,
    pub trivial_bound: f64,
    /// Minimum over the diamond-valid family.
    pub certified_diamond: f64,
    pub is_two_design: bool,
}

impl GammaReport {
    pub fn value(&self, norm: GammaNorm) -> f64 {
        match norm {
            GammaNorm::So => self.exact_so_v0,
            GammaNorm::TrEstimate => self.tr_chain,
            GammaNorm::DiamondBound => self.certified_diamond,
        }
    }
}

/// Evaluates every γ bound; `design` enables the convex-combination bound.
pub fn gamma_report(e: &GateEnsemble, design: Option<&GateEnsemble>) -> Result<GammaReport> {
    let d = e.dim();
    let diff = ideal_twirl(e)?.sub(&haar_twirl(d)?)?;
    let exact_so_v0 = spectral_norm(&diff.restrict(&SubspaceProjector::differences(d)?));
    let exact_so_v = spectral_norm(&diff.restrict(&SubspaceProjector::channels(d)?));
    let df = d as f64;
    let tr_chain = df.powf(1.5) * exact_so_v0;
    let diamond_chain = df * df * exact_so_v0;
    let beta = crate::twirling::beta::beta_tensor(e)?;
    let l2_bound = gamma_bound_l2(&beta)?;
    let induced_l1_bound = match gamma_bound_induced_l1(&beta) {
        Ok(v) => Some(v),
        Err(UrbError::Hypothesis(_)) => None,
        Err(other) => return Err(other),
    };
    let convex_bound = match design.map(|ds| gamma_bound_convex(e, ds)) {
        None | Some(Err(UrbError::Hypothesis(_))) => None,
        Some(Ok(v)) => Some(v),
        Some(Err(other)) => return Err(other),
    };
    let mut certified = TRIVIAL_GAMMA.min(diamond_chain).min(l2_bound);
    if let Some(v) = induced_l1_bound {
        certified = certified.min(v);
    }
    if let Some(v) = convex_bound {
        certified = certified.min(v);
    }
    Ok(GammaReport {
        dim: d,
        exact_so_v0,
        exact_so_v,
        tr_chain,
        diamond_chain,
        l2_bound,
        induced_l1_bound,
        convex_bound,
        trivial_bound: TRIVIAL_GAMMA,
        certified_diamond: certified,
        is_two_design: exact_so_v < DESIGN_TOL,
    })
}
