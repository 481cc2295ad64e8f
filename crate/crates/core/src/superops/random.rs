//! Random test objects: Haar unitaries, Ginibre channels, Hermitian matrices.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::linalg::{c, hermitian_eig, spectral_map, CMat};
use crate::superops::hermitian::{DensityMatrix, HermitianOperator};
use crate::superops::superop::{KrausChannel, Superoperator};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-random unitary via QR with the diagonal phase correction.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let g = ginibre(d, d, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let z = r[(j, j)];
        let ph = if z.norm() > 0.0 { z / z.norm() } else { c(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= ph;
    }
    q
}

pub fn random_ket<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<Complex64> {
    let v = DVector::from_fn(d, |_, _| gaussian(rng));
    let n = v.norm();
    v.unscale(n)
}

pub fn random_pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<DensityMatrix> {
    DensityMatrix::pure(&random_ket(d, rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<HermitianOperator> {
    let g = ginibre(d, d, rng);
    HermitianOperator::new((&g + g.adjoint()).scale(0.5))
}

/// Random channel with `rank` Kraus operators: a Ginibre isometry split into blocks.
pub fn random_kraus<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> Result<KrausChannel> {
    let g = ginibre(rank * d, d, rng);
    let gram = g.adjoint() * &g;
    let (vals, vecs) = hermitian_eig(&gram);
    let inv_sqrt = spectral_map(&vals, &vecs, |x| 1.0 / x.sqrt());
    let v = g * inv_sqrt;
    let ops = (0..rank).map(|k| v.rows(k * d, d).into_owned()).collect();
    KrausChannel::new(ops)
}

pub fn random_channel<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> Result<Superoperator> {
    Superoperator::from_kraus(&random_kraus(d, rank, rng)?)
}

/// Random Hermiticity-preserving map with i.i.d. Gaussian ptm entries.
pub fn random_superoperator<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Superoperator> {
    let n = d * d;
    Superoperator::from_ptm(crate::linalg::RMat::from_fn(n, n, |_, _| rng.sample(StandardNormal)))
}
