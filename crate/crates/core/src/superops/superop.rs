use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Result, UrbError};
use crate::linalg::{c, hermitian_eigvals, hermiticity_defect, max_abs_diff_c, partial_trace_first, CMat, RMat};
use crate::superops::hermitian::{DensityMatrix, HermitianOperator, HERMITIAN_TOL, STATE_TOL};
use crate::superops::pauli::{n_qubits_for_dim, PauliBasis};

/// Hermiticity-preserving linear map stored as its real Pauli-transfer matrix,
/// `ptm[(k, i)] = tr[P_k T(P_i)] / d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    ptm: RMat,
}

impl Superoperator {
    pub fn from_ptm(ptm: RMat) -> Result<Self> {
        let n = ptm.nrows();
        if ptm.ncols() != n {
            return Err(UrbError::Size(format!("ptm must be square, got {}x{}", n, ptm.ncols())));
        }
        let dim = (n as f64).sqrt().round() as usize;
        if dim * dim != n {
            return Err(UrbError::Size(format!("ptm side {n} is not a square number")));
        }
        n_qubits_for_dim(dim)?;
        if ptm.iter().any(|x| !x.is_finite()) {
            return Err(UrbError::invariant("ptm has non-finite entries"));
        }
        Ok(Self { dim, ptm })
    }

    /// PTM of an arbitrary Hermiticity-preserving map given as a closure on matrices.
    pub fn from_map(dim: usize, f: impl Fn(&CMat) -> CMat) -> Result<Self> {
        let basis = PauliBasis::for_dim(dim)?;
        let n = basis.len();
        let d = dim as f64;
        let mut ptm = RMat::zeros(n, n);
        for i in 0..n {
            let out = f(basis.element(i));
            if out.nrows() != dim || out.ncols() != dim {
                return Err(UrbError::DimensionMismatch {
                    expected: dim,
                    got: out.nrows(),
                });
            }
            for k in 0..n {
                let t = basis.trace_with(k, &out) / d;
                if t.im.abs() > HERMITIAN_TOL * (1.0 + t.re.abs()) {
                    return Err(UrbError::invariant(format!(
                        "map is not Hermiticity preserving (imaginary part {:.3e})",
                        t.im
                    )));
                }
                ptm[(k, i)] = t.re;
            }
        }
        Ok(Self { dim, ptm })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        n_qubits_for_dim(dim)?;
        Ok(Self {
            dim,
            ptm: RMat::identity(dim * dim, dim * dim),
        })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        n_qubits_for_dim(dim)?;
        Ok(Self {
            dim,
            ptm: RMat::zeros(dim * dim, dim * dim),
        })
    }

    /// `dep(q)(X) = q X + (1 - q) tr[X] I/d`.
    pub fn depolarizing(dim: usize, q: f64) -> Result<Self> {
        let mut t = Self::identity(dim)?;
        for k in 1..dim * dim {
            t.ptm[(k, k)] = q;
        }
        Ok(t)
    }

    /// Replacement channel `X ↦ tr[X] ρ`.
    pub fn replacement_map(state: &DensityMatrix) -> Result<Self> {
        let dim = state.dim();
        let basis = PauliBasis::for_dim(dim)?;
        let mut ptm = RMat::zeros(basis.len(), basis.len());
        for k in 0..basis.len() {
            ptm[(k, 0)] = basis.trace_with(k, state.entries()).re;
        }
        Ok(Self { dim, ptm })
    }

    /// `p · id + (1 - p) · (X ↦ tr[X] ρ)`.
    pub fn replacement(state: &DensityMatrix, p: f64) -> Result<Self> {
        let id = Self::identity(state.dim())?;
        id.scale(p).add(&Self::replacement_map(state)?.scale(1.0 - p))
    }

    pub fn unitary(u: &CMat) -> Result<Self> {
        let d = u.nrows();
        if u.ncols() != d {
            return Err(UrbError::Size("unitary must be square".into()));
        }
        let defect = max_abs_diff_c(&(u.adjoint() * u), &CMat::identity(d, d));
        if defect > 1e-10 {
            return Err(UrbError::invariant(format!(
                "matrix is not unitary (defect {defect:.3e})"
            )));
        }
        let ud = u.adjoint();
        Self::from_map(d, |x| u * x * &ud)
    }

    pub fn from_kraus(ch: &KrausChannel) -> Result<Self> {
        let ops = ch.ops();
        let daggers: Vec<CMat> = ops.iter().map(|a| a.adjoint()).collect();
        Self::from_map(ch.dim(), |x| {
            let mut acc = CMat::zeros(x.nrows(), x.ncols());
            for (a, ad) in ops.iter().zip(daggers.iter()) {
                acc += a * x * ad;
            }
            acc
        })
    }

    /// Single-qubit amplitude damping with decay probability `gamma`.
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(UrbError::invariant(format!(
                "damping probability {gamma} outside [0, 1]"
            )));
        }
        let z = c(0.0, 0.0);
        let k0 = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), z, z, c((1.0 - gamma).sqrt(), 0.0)]);
        let k1 = CMat::from_row_slice(2, 2, &[z, c(gamma.sqrt(), 0.0), z, z]);
        Self::from_kraus(&KrausChannel::new(vec![k0, k1])?)
    }

    /// Single-qubit bit flip: `X` applied with probability `p`.
    pub fn bit_flip(p: f64) -> Result<Self> {
        let mut probs = vec![0.0; 4];
        probs[0] = 1.0 - p;
        probs[1] = p;
        Self::pauli_channel(2, &probs)
    }

    /// `X ↦ Σ_j p_j P_j X P_j`.
    pub fn pauli_channel(dim: usize, probs: &[f64]) -> Result<Self> {
        let basis = PauliBasis::for_dim(dim)?;
        if probs.len() != basis.len() {
            return Err(UrbError::DimensionMismatch {
                expected: basis.len(),
                got: probs.len(),
            });
        }
        let n = basis.len();
        let mut ptm = RMat::zeros(n, n);
        for k in 0..n {
            let mut acc = 0.0;
            for (j, &pj) in probs.iter().enumerate() {
                let (s1, _) = basis.product(j, k);
                let (s2, _) = basis.product(k, j);
                // P_j P_k P_j = ± P_k, + when they commute
                let sign = if (s1 - s2).norm() < 1e-12 { 1.0 } else { -1.0 };
                acc += pj * sign;
            }
            ptm[(k, k)] = acc;
        }
        Ok(Self { dim, ptm })
    }

    pub fn from_alpha(alpha: &AlphaMatrix) -> Result<Self> {
        let dim = alpha.dim();
        let basis = PauliBasis::for_dim(dim)?;
        let n = basis.len();
        let mut ptm = RMat::zeros(n, n);
        let mut worst_im: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let mut acc = c(0.0, 0.0);
                for i in 0..n {
                    // tr[P_a P_i P_b P_j] vanishes unless j = a^i^b
                    let j = a ^ i ^ b;
                    acc += alpha.entries()[(i, j)] * basis.quad_trace(a, i, b, j);
                }
                worst_im = worst_im.max(acc.im.abs());
                ptm[(a, b)] = acc.re;
            }
        }
        if worst_im > 1e-10 {
            return Err(UrbError::invariant(format!(
                "alpha matrix does not describe a Hermiticity-preserving map (imag {worst_im:.3e})"
            )));
        }
        Ok(Self { dim, ptm })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ptm(&self) -> &RMat {
        &self.ptm
    }

    pub fn into_ptm(self) -> RMat {
        self.ptm
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        (0..self.ptm.ncols()).all(|i| {
            let expected = if i == 0 { 1.0 } else { 0.0 };
            (self.ptm[(0, i)] - expected).abs() <= tol
        })
    }

    pub fn is_unital(&self, tol: f64) -> bool {
        (0..self.ptm.nrows()).all(|k| {
            let expected = if k == 0 { 1.0 } else { 0.0 };
            (self.ptm[(k, 0)] - expected).abs() <= tol
        })
    }

    fn check_dim(&self, other: &Superoperator) -> Result<()> {
        if self.dim != other.dim {
            return Err(UrbError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(())
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Superoperator) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            dim: self.dim,
            ptm: &self.ptm * &other.ptm,
        })
    }

    pub fn adjoint(&self) -> Self {
        Self {
            dim: self.dim,
            ptm: self.ptm.transpose(),
        }
    }

    pub fn add(&self, other: &Superoperator) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            dim: self.dim,
            ptm: &self.ptm + &other.ptm,
        })
    }

    pub fn sub(&self, other: &Superoperator) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            dim: self.dim,
            ptm: &self.ptm - &other.ptm,
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            ptm: &self.ptm * s,
        }
    }

    /// `self^m` by repeated squaring.
    pub fn power(&self, m: u32) -> Self {
        let n = self.ptm.nrows();
        let mut result = RMat::identity(n, n);
        let mut base = self.ptm.clone();
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
            ptm: result,
        }
    }

    pub fn apply(&self, h: &HermitianOperator) -> Result<HermitianOperator> {
        if h.dim() != self.dim {
            return Err(UrbError::DimensionMismatch {
                expected: self.dim,
                got: h.dim(),
            });
        }
        let x = h.pauli_coords()?;
        let y = &self.ptm * x;
        HermitianOperator::from_pauli_coords(self.dim, &y)
    }

    /// Complex-linear extension of the map to arbitrary `d x d` matrices.
    pub fn apply_matrix(&self, x: &CMat) -> Result<CMat> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(UrbError::DimensionMismatch {
                expected: self.dim,
                got: x.nrows(),
            });
        }
        let basis = PauliBasis::for_dim(self.dim)?;
        let coords = basis.coords_complex(x);
        let n = basis.len();
        let mut out = vec![c(0.0, 0.0); n];
        for k in 0..n {
            let mut acc = c(0.0, 0.0);
            for i in 0..n {
                let w = self.ptm[(k, i)];
                if w != 0.0 {
                    acc += coords[i] * w;
                }
            }
            out[k] = acc;
        }
        Ok(basis.from_coords_complex(&out))
    }

    /// Choi matrix `Σ_{a,b} T(|a⟩⟨b|) ⊗ |a⟩⟨b|` (output factor first).
    pub fn choi(&self) -> Result<ChoiMatrix> {
        let d = self.dim;
        let mut j = CMat::zeros(d * d, d * d);
        for a in 0..d {
            for b in 0..d {
                let mut e = CMat::zeros(d, d);
                e[(a, b)] = c(1.0, 0.0);
                let out = self.apply_matrix(&e)?;
                for r in 0..d {
                    for s in 0..d {
                        j[(r * d + a, s * d + b)] = out[(r, s)];
                    }
                }
            }
        }
        Ok(ChoiMatrix { dim: d, entries: j })
    }

    pub fn alpha_matrix(&self) -> Result<AlphaMatrix> {
        let basis = PauliBasis::for_dim(self.dim)?;
        let n = basis.len();
        let d2 = (self.dim * self.dim) as f64;
        let mut alpha = CMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = c(0.0, 0.0);
                for b in 0..n {
                    let a = b ^ j ^ i;
                    acc += basis.quad_trace(a, i, b, j).conj() * self.ptm[(a, b)];
                }
                alpha[(i, j)] = acc / d2;
            }
        }
        Ok(AlphaMatrix {
            dim: self.dim,
            entries: alpha,
        })
    }

    pub fn is_cptp(&self) -> Result<bool> {
        self.choi()?.is_channel()
    }

    /// True when the ptm is orthogonal, i.e. the map is a unitary channel.
    pub fn is_unitary_channel(&self, tol: f64) -> bool {
        let n = self.ptm.nrows();
        let g = self.ptm.transpose() * &self.ptm;
        crate::linalg::max_abs_diff_r(&g, &RMat::identity(n, n)) <= tol && self.is_trace_preserving(tol)
    }
}

/// Completely positive trace-preserving map given by Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    ops: Vec<CMat>,
}

impl KrausChannel {
    pub fn new(ops: Vec<CMat>) -> Result<Self> {
        let first = ops.first().ok_or_else(|| UrbError::invariant("Kraus set is empty"))?;
        let dim = first.nrows();
        n_qubits_for_dim(dim)?;
        let mut sum = CMat::zeros(dim, dim);
        for a in &ops {
            if a.nrows() != dim || a.ncols() != dim {
                return Err(UrbError::DimensionMismatch {
                    expected: dim,
                    got: a.nrows(),
                });
            }
            sum += a.adjoint() * a;
        }
        let defect = max_abs_diff_c(&sum, &CMat::identity(dim, dim));
        if defect > STATE_TOL {
            return Err(UrbError::invariant(format!(
                "Kraus operators are not trace preserving (defect {defect:.3e})"
            )));
        }
        Ok(Self { dim, ops })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ops(&self) -> &[CMat] {
        &self.ops
    }
}

/// PTM of a Kraus channel.
pub fn ptm_from_kraus(ch: &KrausChannel) -> Result<Superoperator> {
    Superoperator::from_kraus(ch)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    dim: usize,
    entries: CMat,
}

impl ChoiMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        hermitian_eigvals(&self.entries)
    }

    /// `‖Tr_out J − I‖_max`.
    pub fn tp_defect(&self) -> f64 {
        let d = self.dim;
        let red = partial_trace_first(&self.entries, d, d);
        max_abs_diff_c(&red, &CMat::identity(d, d))
    }

    pub fn is_channel(&self) -> Result<bool> {
        let h = hermiticity_defect(&self.entries);
        if h > HERMITIAN_TOL * (1.0 + self.entries.norm()) {
            return Ok(false);
        }
        let min = self.eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(min >= -STATE_TOL && self.tp_defect() <= STATE_TOL)
    }
}

/// Coefficients `α_{ij}` with `T(X) = Σ α_{ij} P_i X P_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaMatrix {
    dim: usize,
    entries: CMat,
}

impl AlphaMatrix {
    pub fn new(dim: usize, entries: CMat) -> Result<Self> {
        n_qubits_for_dim(dim)?;
        if entries.nrows() != dim * dim || entries.ncols() != dim * dim {
            return Err(UrbError::DimensionMismatch {
                expected: dim * dim,
                got: entries.nrows(),
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.entries.nrows()).map(|i| self.entries[(i, i)].re).collect()
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        hermiticity_defect(&self.entries) <= tol && hermitian_eigvals(&self.entries).iter().all(|&x| x >= -tol)
    }

    /// True when all off-diagonal entries vanish (a Pauli channel or a
    /// difference of Pauli channels).
    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.entries.nrows();
        (0..n).all(|i| (0..n).all(|j| i == j || self.entries[(i, j)].norm() <= tol))
            && (0..n).all(|i| self.entries[(i, i)].im.abs() <= tol)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff_r;

    fn dep_kraus(q: f64) -> KrausChannel {
        let b = PauliBasis::for_dim(2).unwrap();
        let w0 = ((1.0 + 3.0 * q) / 4.0).sqrt();
        let w = ((1.0 - q) / 4.0).sqrt();
        KrausChannel::new(vec![
            b.element(0).map(|z| z * w0),
            b.element(1).map(|z| z * w),
            b.element(2).map(|z| z * w),
            b.element(3).map(|z| z * w),
        ])
        .unwrap()
    }

    #[test]
    fn identity_kraus_gives_identity_ptm() {
        let ch = KrausChannel::new(vec![CMat::identity(2, 2)]).unwrap();
        let t = ptm_from_kraus(&ch).unwrap();
        assert!(max_abs_diff_r(t.ptm(), &RMat::identity(4, 4)) < 1e-14);
        assert!(t.is_trace_preserving(1e-10));
    }

    #[test]
    fn depolarizing_kraus_ptm() {
        let q = 0.37;
        let t = ptm_from_kraus(&dep_kraus(q)).unwrap();
        let expected = RMat::from_diagonal(&DVector::from_vec(vec![1.0, q, q, q]));
        assert!(max_abs_diff_r(t.ptm(), &expected) < 1e-14);
        assert!(max_abs_diff_r(t.ptm(), Superoperator::depolarizing(2, q).unwrap().ptm()) < 1e-14);
    }

    #[test]
    fn x_conjugation_ptm() {
        let b = PauliBasis::for_dim(2).unwrap();
        let t = Superoperator::unitary(b.element(1)).unwrap();
        let expected = RMat::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -1.0, -1.0]));
        assert!(max_abs_diff_r(t.ptm(), &expected) < 1e-14);
    }

    #[test]
    fn non_tp_kraus_rejected() {
        let k = CMat::identity(2, 2).scale(0.9);
        assert!(matches!(KrausChannel::new(vec![k]), Err(UrbError::Invariant(_))));
    }

    #[test]
    fn depolarizing_acts_on_zero_state() {
        let q = 0.6;
        let rho = DensityMatrix::basis_state(2, 0).unwrap();
        let out = Superoperator::depolarizing(2, q).unwrap().apply(rho.base()).unwrap();
        assert!((out.entries()[(0, 0)].re - (1.0 + q) / 2.0).abs() < 1e-14);
        assert!((out.entries()[(1, 1)].re - (1.0 - q) / 2.0).abs() < 1e-14);
        let full = Superoperator::depolarizing(2, 0.0).unwrap().apply(rho.base()).unwrap();
        assert!(max_abs_diff_c(full.entries(), &CMat::identity(2, 2).scale(0.5)) < 1e-14);
    }

    #[test]
    fn unitary_adjoint_is_inverse_channel() {
        let s = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)]);
        let t = Superoperator::unitary(&s).unwrap();
        let inv = Superoperator::unitary(&s.adjoint()).unwrap();
        assert!(max_abs_diff_r(t.adjoint().ptm(), inv.ptm()) < 1e-14);
    }

    #[test]
    fn identity_alpha_is_unit_vector() {
        let a = Superoperator::identity(2).unwrap().alpha_matrix().unwrap();
        let mut e = CMat::zeros(4, 4);
        e[(0, 0)] = c(1.0, 0.0);
        assert!(max_abs_diff_c(a.entries(), &e) < 1e-14);
    }

    #[test]
    fn depolarizing_alpha_diagonal() {
        let q = 0.3;
        let a = Superoperator::depolarizing(2, q).unwrap().alpha_matrix().unwrap();
        let expected = [(1.0 + 3.0 * q) / 4.0, (1.0 - q) / 4.0, (1.0 - q) / 4.0, (1.0 - q) / 4.0];
        for (i, e) in expected.iter().enumerate() {
            assert!((a.entries()[(i, i)].re - e).abs() < 1e-14);
        }
        assert!(a.is_diagonal(1e-14));
    }

    #[test]
    fn stretched_ptm_is_not_cptp() {
        let ptm = RMat::from_diagonal(&DVector::from_vec(vec![1.0, 1.5, 0.0, 0.0]));
        let t = Superoperator::from_ptm(ptm).unwrap();
        assert!(!t.is_cptp().unwrap());
        let min = t.choi().unwrap().eigenvalues().min();
        assert!(min < 0.0);
    }

    #[test]
    fn alpha_round_trip_two_qubits() {
        let t = Superoperator::amplitude_damping(0.3).unwrap();
        let back = Superoperator::from_alpha(&t.alpha_matrix().unwrap()).unwrap();
        assert!(max_abs_diff_r(t.ptm(), back.ptm()) < 1e-13);
    }

    #[test]
    fn bit_flip_ptm() {
        let p = 0.2;
        let t = Superoperator::bit_flip(p).unwrap();
        let expected = RMat::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 1.0 - 2.0 * p, 1.0 - 2.0 * p]));
        assert!(max_abs_diff_r(t.ptm(), &expected) < 1e-14);
    }
}
