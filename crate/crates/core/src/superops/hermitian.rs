use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Result, UrbError};
use crate::linalg::{c, hermitian_eigvals, hermiticity_defect, CMat};
use crate::superops::pauli::{n_qubits_for_dim, PauliBasis};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const STATE_TOL: f64 = 1e-10;

/// A `d x d` Hermitian matrix with `d` a power of two.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    dim: usize,
    entries: CMat,
}

impl HermitianOperator {
    pub fn new(entries: CMat) -> Result<Self> {
        let dim = entries.nrows();
        if entries.ncols() != dim {
            return Err(UrbError::Size(format!(
                "operator must be square, got {}x{}",
                dim,
                entries.ncols()
            )));
        }
        n_qubits_for_dim(dim)?;
        let defect = hermiticity_defect(&entries);
        if defect > HERMITIAN_TOL {
            return Err(UrbError::invariant(format!(
                "matrix is not Hermitian (defect {defect:.3e})"
            )));
        }
        Ok(Self { dim, entries })
    }

    /// Builds from a matrix that is Hermitian up to round-off; the
    /// anti-Hermitian part is discarded.
    pub(crate) fn from_hermitized(entries: CMat) -> Self {
        let dim = entries.nrows();
        let entries = crate::linalg::hermitize(&entries);
        Self { dim, entries }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        let d = diag.len();
        let mut m = CMat::zeros(d, d);
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = c(x, 0.0);
        }
        Self::new(m)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(CMat::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn into_entries(self) -> CMat {
        self.entries
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        hermitian_eigvals(&self.entries)
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    pub fn trace_norm(&self) -> f64 {
        self.eigenvalues().iter().map(|x| x.abs()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm()
    }

    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    /// Real coordinates `x_k = tr[P_k X]/d` in the Pauli basis.
    pub fn pauli_coords(&self) -> Result<DVector<f64>> {
        let basis = PauliBasis::for_dim(self.dim)?;
        Ok(DVector::from_iterator(
            basis.len(),
            basis.coords_complex(&self.entries).into_iter().map(|z| z.re),
        ))
    }

    pub fn from_pauli_coords(dim: usize, coords: &DVector<f64>) -> Result<Self> {
        let basis = PauliBasis::for_dim(dim)?;
        if coords.len() != basis.len() {
            return Err(UrbError::DimensionMismatch {
                expected: basis.len(),
                got: coords.len(),
            });
        }
        Ok(Self::from_hermitized(basis.from_coords_real(coords.as_slice())))
    }

    /// `tr[A B]` for Hermitian `A`, `B` (real).
    pub fn hs_inner(&self, other: &HermitianOperator) -> Result<f64> {
        if self.dim != other.dim {
            return Err(UrbError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += self.entries[(i, j)] * other.entries[(j, i)];
            }
        }
        Ok(acc.re)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.map(|z| z * s),
        }
    }

    pub fn add(&self, other: &HermitianOperator) -> Result<Self> {
        if self.dim != other.dim {
            return Err(UrbError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(Self {
            dim: self.dim,
            entries: &self.entries + &other.entries,
        })
    }

    pub fn sub(&self, other: &HermitianOperator) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }
}

/// Positive semidefinite, unit-trace Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    base: HermitianOperator,
}

impl DensityMatrix {
    pub fn new(base: HermitianOperator) -> Result<Self> {
        let ev = base.eigenvalues();
        let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -STATE_TOL {
            return Err(UrbError::invariant(format!(
                "density matrix has negative eigenvalue {min:.3e}"
            )));
        }
        let tr = base.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(UrbError::invariant(format!("density matrix trace is {tr}, expected 1")));
        }
        Ok(Self { base })
    }

    pub fn from_matrix(m: CMat) -> Result<Self> {
        Self::new(HermitianOperator::new(m)?)
    }

    /// `|ψ⟩⟨ψ|` for a normalized copy of `ket`.
    pub fn pure(ket: &DVector<Complex64>) -> Result<Self> {
        let norm = ket.norm();
        if norm == 0.0 {
            return Err(UrbError::invariant("zero state vector"));
        }
        let v = ket.unscale(norm);
        Self::new(HermitianOperator::from_hermitized(&v * v.adjoint()))
    }

    pub fn basis_state(dim: usize, i: usize) -> Result<Self> {
        if i >= dim {
            return Err(UrbError::Size(format!(
                "basis index {i} out of range for dimension {dim}"
            )));
        }
        let mut m = CMat::zeros(dim, dim);
        m[(i, i)] = c(1.0, 0.0);
        Self::from_matrix(m)
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::from_matrix(CMat::identity(dim, dim).unscale(dim as f64))
    }

    pub fn base(&self) -> &HermitianOperator {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn entries(&self) -> &CMat {
        self.base.entries()
    }
}

/// Hermitian operator with spectrum in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmElement {
    base: HermitianOperator,
}

impl PovmElement {
    pub fn new(base: HermitianOperator) -> Result<Self> {
        let ev = base.eigenvalues();
        for &x in ev.iter() {
            if x < -STATE_TOL || x > 1.0 + STATE_TOL {
                return Err(UrbError::invariant(format!(
                    "POVM element eigenvalue {x} outside [0, 1]"
                )));
            }
        }
        Ok(Self { base })
    }

    pub fn from_matrix(m: CMat) -> Result<Self> {
        Self::new(HermitianOperator::new(m)?)
    }

    pub fn projector(dim: usize, i: usize) -> Result<Self> {
        Ok(Self {
            base: DensityMatrix::basis_state(dim, i)?.base,
        })
    }

    pub fn base(&self) -> &HermitianOperator {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn entries(&self) -> &CMat {
        self.base.entries()
    }
}
