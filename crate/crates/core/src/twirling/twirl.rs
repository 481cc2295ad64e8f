use rayon::prelude::*;

use crate::error::{Result, UrbError};
use crate::linalg::{max_abs_diff_r, spectral_norm, vec_cols, RMat};
use crate::superops::pauli::n_qubits_for_dim;
use crate::superops::Superoperator;
use crate::twirling::beta::{beta_haar, beta_pauli, twirl_from_beta};
use crate::twirling::ensemble::GateEnsemble;

/// Twirl-space operations are limited to two qubits: the matrices are
/// `d⁴ x d⁴` and are decomposed densely.
pub const MAX_TWIRL_DIM: usize = 4;

pub(crate) fn check_twirl_dim(d: usize) -> Result<()> {
    n_qubits_for_dim(d)?;
    if d > MAX_TWIRL_DIM {
        return Err(UrbError::Size(format!(
            "twirling maps are supported for d <= {MAX_TWIRL_DIM}, got {d}"
        )));
    }
    Ok(())
}

/// Linear map on superoperators, acting on column-stacked ptms: the ptm entry
/// `(k, i)` sits at index `k + d²·i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwirlingMatrix {
    dim: usize,
    mat: RMat,
}

impl TwirlingMatrix {
    pub fn from_matrix(dim: usize, mat: RMat) -> Result<Self> {
        check_twirl_dim(dim)?;
        let n = dim.pow(4);
        if mat.nrows() != n || mat.ncols() != n {
            return Err(UrbError::DimensionMismatch {
                expected: n,
                got: mat.nrows(),
            });
        }
        Ok(Self { dim, mat })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let n = dim.pow(4);
        Self::from_matrix(dim, RMat::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &RMat {
        &self.mat
    }

    pub fn apply(&self, t: &Superoperator) -> Result<Superoperator> {
        if t.dim() != self.dim {
            return Err(UrbError::DimensionMismatch {
                expected: self.dim,
                got: t.dim(),
            });
        }
        let n = self.dim * self.dim;
        let v = &self.mat * vec_cols(t.ptm());
        Superoperator::from_ptm(RMat::from_column_slice(n, n, v.as_slice()))
    }

    fn check(&self, other: &TwirlingMatrix) -> Result<()> {
        if self.dim != other.dim {
            return Err(UrbError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(())
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &TwirlingMatrix) -> Result<Self> {
        self.check(other)?;
        Ok(Self {
            dim: self.dim,
            mat: &self.mat * &other.mat,
        })
    }

    pub fn sub(&self, other: &TwirlingMatrix) -> Result<Self> {
        self.check(other)?;
        Ok(Self {
            dim: self.dim,
            mat: &self.mat - &other.mat,
        })
    }

    pub fn power(&self, m: u32) -> Self {
        let n = self.mat.nrows();
        let mut result = RMat::identity(n, n);
        let mut base = self.mat.clone();
        let mut e = m;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        Self {
            dim: self.dim,
            mat: result,
        }
    }

    /// Matrix restricted to a coordinate subspace.
    pub fn restrict(&self, sub: &SubspaceProjector) -> RMat {
        sub.restrict(&self.mat)
    }

    /// Spectral norm (induced SO norm) on the subspace.
    pub fn so_norm_on(&self, sub: &SubspaceProjector) -> f64 {
        spectral_norm(&self.restrict(sub))
    }

    pub fn max_abs_diff(&self, other: &TwirlingMatrix) -> f64 {
        max_abs_diff_r(&self.mat, &other.mat)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subspace {
    /// All Hermiticity-preserving maps.
    Full,
    /// Span of channels: ptms whose first row is `(c, 0, …, 0)`.
    Channels,
    /// Differences of channels: ptms with zero first row.
    ChannelDifferences,
}

/// Coordinate subspace of vectorized ptms; the basis is a subset of the
/// standard unit vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceProjector {
    dim: usize,
    which: Subspace,
    indices: Vec<usize>,
}

impl SubspaceProjector {
    pub fn new(dim: usize, which: Subspace) -> Result<Self> {
        n_qubits_for_dim(dim)?;
        let n = dim * dim;
        let indices = (0..n * n)
            .filter(|&idx| {
                let (k, i) = (idx % n, idx / n);
                match which {
                    Subspace::Full => true,
                    Subspace::Channels => !(k == 0 && i > 0),
                    Subspace::ChannelDifferences => k != 0,
                }
            })
            .collect();
        Ok(Self { dim, which, indices })
    }

    pub fn full(dim: usize) -> Result<Self> {
        Self::new(dim, Subspace::Full)
    }

    pub fn channels(dim: usize) -> Result<Self> {
        Self::new(dim, Subspace::Channels)
    }

    pub fn differences(dim: usize) -> Result<Self> {
        Self::new(dim, Subspace::ChannelDifferences)
    }

    pub fn which(&self) -> Subspace {
        self.which
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Orthonormal basis vectors as columns.
    pub fn basis(&self) -> RMat {
        let n = self.dim.pow(4);
        let mut b = RMat::zeros(n, self.indices.len());
        for (col, &idx) in self.indices.iter().enumerate() {
            b[(idx, col)] = 1.0;
        }
        b
    }

    pub fn projector(&self) -> RMat {
        let n = self.dim.pow(4);
        let mut p = RMat::zeros(n, n);
        for &idx in &self.indices {
            p[(idx, idx)] = 1.0;
        }
        p
    }

    pub fn restrict(&self, m: &RMat) -> RMat {
        let r = self.indices.len();
        RMat::from_fn(r, r, |a, b| m[(self.indices[a], self.indices[b])])
    }

    /// Embeds a restricted matrix back into the full space (zero elsewhere).
    pub fn extend(&self, m: &RMat) -> RMat {
        let n = self.dim.pow(4);
        let mut out = RMat::zeros(n, n);
        for (a, &ia) in self.indices.iter().enumerate() {
            for (b, &ib) in self.indices.iter().enumerate() {
                out[(ia, ib)] = m[(a, b)];
            }
        }
        out
    }
}

/// `Σ_g p_g · (ptm(B_g)ᵀ ⊗ ptm(A_g))`, the matrix of `N ↦ Σ p_g A_g ∘ N ∘ B_g`.
/// Row strips are computed in parallel; each strip sums the gates in order.
pub fn conjugation_sum(dim: usize, terms: &[(f64, &RMat, &RMat)]) -> Result<TwirlingMatrix> {
    check_twirl_dim(dim)?;
    let n = dim * dim;
    let strips: Vec<RMat> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut strip = RMat::zeros(n, n * n);
            for &(p, a, b) in terms {
                for ip in 0..n {
                    let w = p * b[(ip, i)];
                    if w == 0.0 {
                        continue;
                    }
                    for col in 0..n {
                        for row in 0..n {
                            strip[(row, ip * n + col)] += w * a[(row, col)];
                        }
                    }
                }
            }
            strip
        })
        .collect();
    let mut mat = RMat::zeros(n * n, n * n);
    for (i, strip) in strips.into_iter().enumerate() {
        mat.view_mut((i * n, 0), (n, n * n)).copy_from(&strip);
    }
    TwirlingMatrix::from_matrix(dim, mat)
}

/// `Λ*_R : N ↦ Σ p_g ω(g)† ∘ N ∘ ω(g)`.
pub fn ideal_twirl(e: &GateEnsemble) -> Result<TwirlingMatrix> {
    let adj: Vec<RMat> = e.elements().iter().map(|g| g.ideal.ptm().transpose()).collect();
    let terms: Vec<(f64, &RMat, &RMat)> = e
        .elements()
        .iter()
        .zip(adj.iter())
        .map(|(g, a)| (g.probability, a, g.ideal.ptm()))
        .collect();
    conjugation_sum(e.dim(), &terms)
}

/// `Λ_R : N ↦ Σ p_g φ*(g) ∘ N ∘ φ(g)`.
pub fn physical_twirl(e: &GateEnsemble) -> Result<TwirlingMatrix> {
    let terms: Vec<(f64, &RMat, &RMat)> = e
        .elements()
        .iter()
        .map(|g| (g.probability, g.inverting.ptm(), g.implementation.ptm()))
        .collect();
    conjugation_sum(e.dim(), &terms)
}

/// Haar twirl `Λ*` built from the analytic β tensor.
pub fn haar_twirl(dim: usize) -> Result<TwirlingMatrix> {
    check_twirl_dim(dim)?;
    twirl_from_beta(&beta_haar(dim)?)
}

/// Uniform Pauli twirl `Λ(μ_P)`, which keeps only the α diagonal.
pub fn pauli_twirl(dim: usize) -> Result<TwirlingMatrix> {
    check_twirl_dim(dim)?;
    twirl_from_beta(&beta_pauli(dim)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMat;

    #[test]
    fn identity_gate_twirl_is_identity() {
        let e = GateEnsemble::uniform(&[CMat::identity(2, 2)]).unwrap();
        let t = ideal_twirl(&e).unwrap();
        assert!(t.max_abs_diff(&TwirlingMatrix::identity(2).unwrap()) < 1e-14);
    }

    #[test]
    fn subspace_ranks() {
        for d in [2usize, 4] {
            let n4 = d.pow(4);
            let n2 = d * d;
            assert_eq!(SubspaceProjector::full(d).unwrap().rank(), n4);
            assert_eq!(SubspaceProjector::channels(d).unwrap().rank(), n4 - n2 + 1);
            assert_eq!(SubspaceProjector::differences(d).unwrap().rank(), n4 - n2);
        }
    }

    #[test]
    fn rejects_large_dims() {
        assert!(matches!(haar_twirl(8), Err(UrbError::Size(_))));
    }
}
