use std::sync::{Arc, OnceLock};

use crate::error::{Result, UrbError};
use crate::linalg::{to_complex, CMat, RMat};
use crate::superops::pauli::{n_qubits_for_dim, PauliBasis, MAX_QUBITS};
use crate::twirling::ensemble::GateEnsemble;
use crate::twirling::twirl::{check_twirl_dim, TwirlingMatrix};

/// Coefficients of a twirling map in the α representation:
/// `Λ(P_i·P_j) = Σ_{k,l} β_{ij}^{kl} P_k·P_l`.
///
/// Stored as a `d⁴ x d⁴` matrix with row `k + d²·l` and column `i + d²·j`, so
/// that it acts on column-stacked α matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaTensor {
    dim: usize,
    values: RMat,
}

impl BetaTensor {
    pub fn from_matrix(dim: usize, values: RMat) -> Result<Self> {
        check_twirl_dim(dim)?;
        let n = dim.pow(4);
        if values.nrows() != n || values.ncols() != n {
            return Err(UrbError::DimensionMismatch {
                expected: n,
                got: values.nrows(),
            });
        }
        Ok(Self { dim, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &RMat {
        &self.values
    }

    /// `β_{ij}^{kl}` with zero-based indices.
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.dim * self.dim;
        self.values[(k + n * l, i + n * j)]
    }

    pub fn sub(&self, other: &BetaTensor) -> Result<BetaTensor> {
        if self.dim != other.dim {
            return Err(UrbError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(Self {
            dim: self.dim,
            values: &self.values - &other.values,
        })
    }

    /// `max |β_{ij}^{kl} − β_{ji}^{lk}|`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.dim * self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        worst = worst.max((self.get(i, j, k, l) - self.get(j, i, l, k)).abs());
                    }
                }
            }
        }
        worst
    }

    /// Deviation from `Λ(I·I) = I·I`.
    pub fn identity_defect(&self) -> f64 {
        let n = self.dim * self.dim;
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for l in 0..n {
                let expected = if k == 0 && l == 0 { 1.0 } else { 0.0 };
                worst = worst.max((self.get(0, 0, k, l) - expected).abs());
            }
        }
        worst
    }

    /// `max_{i≠j} |β_{ij}^{kl}|`; zero exactly when `Λ = Λ ∘ Λ(μ_P)`.
    pub fn off_diagonal_input_weight(&self) -> f64 {
        let n = self.dim * self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let col = i + n * j;
                worst = self.values.column(col).iter().fold(worst, |a, x| a.max(x.abs()));
            }
        }
        worst
    }
}

/// `u(g)_{ik}` from `U† P_i U = Σ_k u_{ik} P_k`.
pub fn conjugation_coefficients(u: &CMat) -> Result<RMat> {
    let d = u.nrows();
    let basis = PauliBasis::for_dim(d)?;
    let n = basis.len();
    let ud = u.adjoint();
    let mut out = RMat::zeros(n, n);
    for i in 0..n {
        let m = &ud * basis.element(i) * u;
        let coords = basis.coords_complex(&m);
        for (k, z) in coords.iter().enumerate() {
            if z.im.abs() > 1e-10 {
                return Err(UrbError::invariant("conjugated Pauli has complex coefficients"));
            }
            out[(i, k)] = z.re;
        }
    }
    Ok(out)
}

/// `β_{ij}^{kl}(μ) = Σ_g p_g u(g)_{ik} u(g)_{jl}`.
pub fn beta_tensor(e: &GateEnsemble) -> Result<BetaTensor> {
    let d = e.dim();
    check_twirl_dim(d)?;
    let n = d * d;
    let mut values = RMat::zeros(n * n, n * n);
    for g in e.elements() {
        let u = conjugation_coefficients(&g.unitary)?;
        for i in 0..n {
            let row_norm: f64 = (0..n).map(|k| u[(i, k)] * u[(i, k)]).sum();
            if (row_norm - 1.0).abs() > 1e-10 {
                return Err(UrbError::invariant("ideal gate is not unitary"));
            }
        }
        let p = g.probability;
        for j in 0..n {
            for i in 0..n {
                let col = i + n * j;
                for l in 0..n {
                    let ujl = u[(j, l)];
                    if ujl == 0.0 {
                        continue;
                    }
                    for k in 0..n {
                        let uik = u[(i, k)];
                        if uik != 0.0 {
                            values[(k + n * l, col)] += p * uik * ujl;
                        }
                    }
                }
            }
        }
    }
    BetaTensor::from_matrix(d, values)
}

/// β of the Haar measure: `β_{11}^{11} = 1`, `β_{ii}^{kk} = 1/(d²−1)` for
/// non-identity `i`, `k`, zero elsewhere.
pub fn beta_haar(dim: usize) -> Result<BetaTensor> {
    check_twirl_dim(dim)?;
    let n = dim * dim;
    let mut values = RMat::zeros(n * n, n * n);
    values[(0, 0)] = 1.0;
    let w = 1.0 / (n as f64 - 1.0);
    for i in 1..n {
        for k in 1..n {
            values[(k + n * k, i + n * i)] = w;
        }
    }
    BetaTensor::from_matrix(dim, values)
}

/// β of the uniform Pauli measure: `β_{ij}^{kl} = δ_ij δ_ik δ_jl`.
pub fn beta_pauli(dim: usize) -> Result<BetaTensor> {
    check_twirl_dim(dim)?;
    let n = dim * dim;
    let mut values = RMat::zeros(n * n, n * n);
    for i in 0..n {
        values[(i + n * i, i + n * i)] = 1.0;
    }
    BetaTensor::from_matrix(dim, values)
}

/// Change of coordinates from column-stacked α to column-stacked ptm:
/// `C[(a + d²b), (i + d²j)] = tr[P_a P_i P_b P_j] / d`. Satisfies `C†C = d² I`.
pub fn alpha_to_ptm_matrix(dim: usize) -> Result<Arc<CMat>> {
    static CACHE: OnceLock<Vec<OnceLock<Arc<CMat>>>> = OnceLock::new();
    let nq = n_qubits_for_dim(dim)?;
    let slots = CACHE.get_or_init(|| (0..=MAX_QUBITS).map(|_| OnceLock::new()).collect());
    if let Some(m) = slots[nq].get() {
        return Ok(m.clone());
    }
    let basis = PauliBasis::for_dim(dim)?;
    let n = basis.len();
    let mut cm = CMat::zeros(n * n, n * n);
    for j in 0..n {
        for i in 0..n {
            for b in 0..n {
                let a = i ^ b ^ j;
                cm[(a + n * b, i + n * j)] = basis.quad_trace(a, i, b, j);
            }
        }
    }
    let built = Arc::new(cm);
    Ok(slots[nq].get_or_init(|| built).clone())
}

/// Twirling matrix in ptm coordinates from a β tensor: `C B C† / d²`.
pub fn twirl_from_beta(beta: &BetaTensor) -> Result<TwirlingMatrix> {
    let d = beta.dim();
    let cm = alpha_to_ptm_matrix(d)?;
    let b = to_complex(beta.matrix());
    let full = &*cm * b * cm.adjoint();
    let d2 = (d * d) as f64;
    let worst_im = full.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
    if worst_im > 1e-10 * d2 {
        return Err(UrbError::invariant(format!(
            "β tensor does not define a real twirling map (imag {worst_im:.3e})"
        )));
    }
    TwirlingMatrix::from_matrix(d, full.map(|z| z.re / d2))
}
