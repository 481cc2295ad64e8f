//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| c(x, 0.0))
}

pub fn kron_c(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_r(a: &RMat, b: &RMat) -> RMat {
    a.kronecker(b)
}

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

/// Largest entrywise deviation of `m` from its conjugate transpose.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix (the input is symmetrized first).
/// Eigenvalues are returned in ascending order with matching eigenvector columns.
pub fn hermitian_eig(m: &CMat) -> (DVector<f64>, CMat) {
    let eig = SymmetricEigen::new(hermitize(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = CMat::zeros(m.nrows(), n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

pub fn hermitian_eigvals(m: &CMat) -> DVector<f64> {
    hermitian_eig(m).0
}

/// Rebuild `V diag(f(λ)) V†` from an eigen-decomposition.
pub fn spectral_map(vals: &DVector<f64>, vecs: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let scaled = {
        let mut s = vecs.clone();
        for (j, &v) in vals.iter().enumerate() {
            let fv = f(v);
            s.column_mut(j).scale_mut(fv);
        }
        s
    };
    &scaled * vecs.adjoint()
}

/// Euclidean projection of a Hermitian matrix onto the PSD cone.
pub fn psd_part(m: &CMat) -> CMat {
    let (vals, vecs) = hermitian_eig(m);
    spectral_map(&vals, &vecs, |x| x.max(0.0))
}

pub fn psd_sqrt(m: &CMat) -> CMat {
    let (vals, vecs) = hermitian_eig(m);
    spectral_map(&vals, &vecs, |x| x.max(0.0).sqrt())
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm_herm(m: &CMat) -> f64 {
    hermitian_eigvals(m).iter().map(|x| x.abs()).sum()
}

/// Partial trace over the first tensor factor of a `(d1*d2) x (d1*d2)` matrix.
pub fn partial_trace_first(m: &CMat, d1: usize, d2: usize) -> CMat {
    let mut out = CMat::zeros(d2, d2);
    for a in 0..d1 {
        for i in 0..d2 {
            for j in 0..d2 {
                out[(i, j)] += m[(a * d2 + i, a * d2 + j)];
            }
        }
    }
    out
}

/// Partial trace over the second tensor factor of a `(d1*d2) x (d1*d2)` matrix.
pub fn partial_trace_second(m: &CMat, d1: usize, d2: usize) -> CMat {
    let mut out = CMat::zeros(d1, d1);
    for i in 0..d1 {
        for j in 0..d1 {
            let mut acc = c(0.0, 0.0);
            for b in 0..d2 {
                acc += m[(i * d2 + b, j * d2 + b)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Largest singular value of a real matrix.
pub fn spectral_norm(m: &RMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn frobenius(m: &RMat) -> f64 {
    m.norm()
}

/// Column-stacking vectorization.
pub fn vec_cols(m: &RMat) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvec_cols(v: &DVector<f64>, n: usize) -> RMat {
    RMat::from_column_slice(n, n, v.as_slice())
}

pub fn max_abs_diff_r(a: &RMat, b: &RMat) -> f64 {
    (a - b).iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_diff_c(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().fold(0.0, |acc, x| acc.max(x.norm()))
}

pub fn identity_c(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn ket_bra(d: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(d, d);
    m[(i, j)] = c(1.0, 0.0);
    m
}

pub fn trace_c(m: &CMat) -> Complex64 {
    m.trace()
}
