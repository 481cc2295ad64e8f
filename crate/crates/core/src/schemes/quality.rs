use std::collections::HashMap;

use rand::Rng;
use serde::Serialize;

use crate::error::{Result, UrbError};
use crate::linalg::{hermitian_eigvals, RMat};
use crate::perturbation::CHECK_SLACK;
use crate::schemes::decay::{check_budget_ok, enumerate_sequences, exact_decay, sequence_rng};
use crate::schemes::scheme::UrbScheme;
use crate::superops::{diamond_norm, HermitianOperator, Superoperator};
use crate::twirling::twirl::MAX_TWIRL_DIM;
use crate::twirling::{gamma_report, GammaNorm, GammaReport, GateEnsemble};

/// Default truncation of the supremum over sequence lengths in `ε`.
pub const DEFAULT_M_CUTOFF: u32 = 8;
/// Sequences drawn per length when exhaustive evaluation of `ε` is too large.
pub const EPSILON_SAMPLES: usize = 4000;
const EPSILON_SEED: u64 = 0x5eed_e751;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonTerm {
    pub m: u32,
    pub value: f64,
    /// Zero when the expectation was enumerated exactly.
    pub std_error: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeQuality {
    pub epsilon: f64,
    /// `true` when `ε = 0` holds by construction of the POVM rule.
    pub epsilon_analytic: bool,
    pub epsilon_terms: Vec<EpsilonTerm>,
    /// Set when some length had to be sampled instead of enumerated.
    pub epsilon_sampled: bool,
    pub delta: f64,
    /// Absent for dimensions beyond the twirl-matrix limit.
    pub gamma: Option<GammaReport>,
    pub m_cutoff: u32,
}

/// Spectral norm of the Hermitian operator with the given Pauli coordinates.
fn coords_spectral_norm(d: usize, coords: &nalgebra::DVector<f64>) -> Result<f64> {
    let h = HermitianOperator::from_pauli_coords(d, coords)?;
    Ok(hermitian_eigvals(h.entries())
        .iter()
        .fold(0.0_f64, |a, x| a.max(x.abs())))
}

fn factoring_deviation(s: &UrbScheme, seq: &[usize]) -> Result<f64> {
    let diff = s.povm_coords(seq)? - s.factored_coords(seq)?;
    coords_spectral_norm(s.dim(), &diff)
}

/// `E_g ‖M(g⃗) − M₀·φ*(g₁)∘…∘φ*(g_m)∘ℐ‖_∞` for one length.
pub fn epsilon_at(s: &UrbScheme, m: u32) -> Result<EpsilonTerm> {
    if s.povm.is_factored() {
        return Ok(EpsilonTerm {
            m,
            value: 0.0,
            std_error: 0.0,
            exact: true,
        });
    }
    if check_budget_ok(s.ensemble.len(), m) {
        let value = enumerate_sequences(s, m, |seq, _| factoring_deviation(s, seq))?;
        return Ok(EpsilonTerm {
            m,
            value,
            std_error: 0.0,
            exact: true,
        });
    }
    let mut cdf = Vec::with_capacity(s.ensemble.len());
    let mut acc = 0.0;
    for g in s.ensemble.elements() {
        acc += g.probability;
        cdf.push(acc);
    }
    let mut values = Vec::with_capacity(EPSILON_SAMPLES);
    for k in 0..EPSILON_SAMPLES {
        let mut rng = sequence_rng(EPSILON_SEED, m, k);
        let seq: Vec<usize> = (0..m)
            .map(|_| {
                let u: f64 = rng.random();
                cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
            })
            .collect();
        values.push(factoring_deviation(s, &seq)?);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(EpsilonTerm {
        m,
        value: mean,
        std_error: (var / n).sqrt(),
        exact: false,
    })
}

fn key(m: &RMat) -> Vec<i64> {
    m.iter().map(|x| (x * 1e10).round() as i64).collect()
}

/// `Σ_g p_g (‖φ(g) − ω(g)‖_⋄ + ‖φ*(g) − ω(g)†‖_⋄)`, using certified upper
/// bounds. Unitary invariance reduces each term to `‖ω†∘φ − id‖_⋄` or
/// `‖φ*∘ω − id‖_⋄`, which repeat across gates and are memoized.
pub fn near_ideal_delta(e: &GateEnsemble) -> Result<f64> {
    let d = e.dim();
    let id = Superoperator::identity(d)?;
    let mut memo: HashMap<Vec<i64>, f64> = HashMap::new();
    let mut norm_of = |left: Superoperator, right: Superoperator| -> Result<f64> {
        let (kl, kr) = (key(left.ptm()), key(right.ptm()));
        if let Some(&v) = memo.get(&kl).or_else(|| memo.get(&kr)) {
            return Ok(v);
        }
        let v = if left.ptm().iter().all(|x| x.abs() < 1e-15) {
            0.0
        } else {
            diamond_norm(&left)?.upper
        };
        memo.insert(kl, v);
        memo.insert(kr, v);
        Ok(v)
    };
    let mut delta = 0.0;
    for g in e.elements() {
        let adj = g.ideal.adjoint();
        let a = norm_of(
            adj.compose(&g.implementation)?.sub(&id)?,
            g.implementation.compose(&adj)?.sub(&id)?,
        )?;
        let b = norm_of(
            g.inverting.compose(&g.ideal)?.sub(&id)?,
            g.ideal.compose(&g.inverting)?.sub(&id)?,
        )?;
        delta += g.probability * (a + b);
    }
    Ok(delta)
}

/// Uniform Clifford ensemble used as the reference design for the convex bound.
fn reference_design(d: usize) -> Result<Option<GateEnsemble>> {
    Ok(match d {
        2 => Some(GateEnsemble::uniform_clifford(1)?),
        4 => Some(GateEnsemble::uniform_clifford(2)?),
        _ => None,
    })
}

/// `ε` (truncated at `m_cutoff`), `δ` and the `γ` bounds of a scheme.
pub fn scheme_quality(s: &UrbScheme, m_cutoff: u32) -> Result<SchemeQuality> {
    if m_cutoff == 0 {
        return Err(UrbError::invariant("m_cutoff must be at least 1"));
    }
    let epsilon_analytic = s.povm.is_factored();
    let epsilon_terms = if epsilon_analytic {
        Vec::new()
    } else {
        (1..=m_cutoff).map(|m| epsilon_at(s, m)).collect::<Result<Vec<_>>>()?
    };
    let epsilon = epsilon_terms.iter().map(|t| t.value).fold(0.0, f64::max);
    let epsilon_sampled = epsilon_terms.iter().any(|t| !t.exact);
    let delta = near_ideal_delta(&s.ensemble)?;
    let gamma = if s.dim() <= MAX_TWIRL_DIM {
        let design = reference_design(s.dim())?;
        Some(gamma_report(&s.ensemble, design.as_ref())?)
    } else {
        None
    };
    Ok(SchemeQuality {
        epsilon,
        epsilon_analytic,
        epsilon_terms,
        epsilon_sampled,
        delta,
        gamma,
        m_cutoff,
    })
}

/// Parameters of the single-exponential bound for one choice of norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundParameters {
    pub norm: GammaNorm,
    pub gamma: f64,
    /// `δ` for the diamond and trace forms, `d·δ` for the SO form.
    pub delta_eff: f64,
    /// `16` for the diamond and trace forms, `16 d^{3/2}` for the SO form.
    pub prefactor: f64,
}

impl BoundParameters {
    pub fn new(norm: GammaNorm, gamma: &GammaReport, delta: f64) -> Self {
        let d = gamma.dim as f64;
        match norm {
            GammaNorm::So => Self {
                norm,
                gamma: gamma.exact_so_v0,
                delta_eff: d * delta,
                prefactor: 16.0 * d.powf(1.5),
            },
            GammaNorm::TrEstimate => Self {
                norm,
                gamma: gamma.tr_chain,
                delta_eff: delta,
                prefactor: 16.0,
            },
            GammaNorm::DiamondBound => Self {
                norm,
                gamma: gamma.certified_diamond,
                delta_eff: delta,
                prefactor: 16.0,
            },
        }
    }

    /// `γ < 1` and `δ ≤ (1 − γ)/11`.
    pub fn hypothesis_ok(&self) -> bool {
        self.gamma < 1.0 && self.delta_eff <= (1.0 - self.gamma) / 11.0
    }

    pub fn tail(&self, m: u32) -> f64 {
        self.prefactor * (self.gamma + 6.0 * self.delta_eff).powi(m as i32)
    }

    /// Window `[1 − 2δ, 1]` for the decay exponent.
    pub fn p_window(&self) -> (f64, f64) {
        (1.0 - 2.0 * self.delta_eff, 1.0)
    }
}

/// Any single-exponential model `A + B·p^m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentialModel {
    pub a: f64,
    pub b: f64,
    pub p: f64,
}

impl ExponentialModel {
    pub fn eval(&self, m: u32) -> f64 {
        self.a + self.b * self.p.powi(m as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub m: u32,
    pub exact: f64,
    pub model: f64,
    pub residual: f64,
    pub bound: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremCheck {
    pub params: BoundParameters,
    pub epsilon: f64,
    pub hypothesis_ok: bool,
    pub p: f64,
    pub p_in_window: bool,
    pub rows: Vec<BoundRow>,
    pub residuals_ok: bool,
    /// All of the above: the single exponential is certified.
    pub certified: bool,
}

/// Compares `|p_R(m) − (A + Bp^m)|` with `ε + 16(γ + 6δ)^m` (or its SO form),
/// allowing `CHECK_SLACK` for round-off.
pub fn theorem_bound_check(
    s: &UrbScheme,
    q: &SchemeQuality,
    model: ExponentialModel,
    m_list: &[u32],
    norm: GammaNorm,
) -> Result<TheoremCheck> {
    let gamma = q
        .gamma
        .as_ref()
        .ok_or_else(|| UrbError::Unsupported(format!("γ is unavailable at dimension {}", s.dim())))?;
    let params = BoundParameters::new(norm, gamma, q.delta);
    let exact = exact_decay(s, m_list)?;
    let rows: Vec<BoundRow> = m_list
        .iter()
        .zip(exact)
        .map(|(&m, e)| {
            let value = model.eval(m);
            let residual = (e - value).abs();
            let bound = q.epsilon + params.tail(m);
            BoundRow {
                m,
                exact: e,
                model: value,
                residual,
                bound,
                ok: residual <= bound + CHECK_SLACK,
            }
        })
        .collect();
    let residuals_ok = rows.iter().all(|r| r.ok);
    let (lo, hi) = params.p_window();
    let p_in_window = model.p >= lo - CHECK_SLACK && model.p <= hi + CHECK_SLACK;
    let hypothesis_ok = params.hypothesis_ok();
    Ok(TheoremCheck {
        params,
        epsilon: q.epsilon,
        hypothesis_ok,
        p: model.p,
        p_in_window,
        rows,
        residuals_ok,
        certified: hypothesis_ok && residuals_ok && p_in_window,
    })
}
