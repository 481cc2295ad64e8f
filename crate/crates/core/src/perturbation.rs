//! Spectral split of a physical twirl into its two eigenvalues near 1 and the
//! contracting remainder.

use nalgebra::{Complex, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Result, UrbError};
use crate::linalg::{frobenius, spectral_norm, RMat};
use crate::superops::{DensityMatrix, HermitianOperator, Superoperator};
use crate::twirling::{GammaNorm, GateEnsemble, SubspaceProjector, TwirlingMatrix};

/// Tolerance for the Jordan check on the dominant block.
pub const DEFECT_TOL: f64 = 1e-8;
/// Round-off slack added to each inequality of the corollary check.
pub const CHECK_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SpectralSplit {
    pub lambda_unit: Complex<f64>,
    pub p: f64,
    /// Imaginary part of the second dominant eigenvalue (zero for real pairs).
    pub p_imag: f64,
    /// Right invariant subspace `L₁` (columns), restricted coordinates.
    pub dominant_right: RMat,
    /// Left invariant subspace; rows of `R₁` are dual to the columns of `L₁`.
    pub dominant_left: RMat,
    /// `A′₁ = R₁ Λ L₁`.
    pub block: RMat,
    /// Orthonormal basis `L₂` of the complementary invariant subspace.
    pub remainder_basis: RMat,
    /// `A′₂ = L₂ᵀ Λ L₂`.
    pub remainder_block: RMat,
    pub remainder_norm: f64,
    /// `‖L₂‖₂ ‖R₂‖₂`, equal to the norm of the complementary spectral projector.
    pub kappa_estimate: f64,
    pub diagonalizable: bool,
    /// Frobenius distance between the dominant spectral projector and the Haar twirl.
    pub haar_projector_distance: f64,
    /// `‖L₁A′₁R₁ + L₂A′₂R₂ − Λ‖_F`.
    pub reconstruction_error: f64,
    /// Full spectrum of the restricted twirl, sorted by distance to 1.
    pub spectrum: Vec<Complex<f64>>,
    pub subspace: SubspaceProjector,
}

impl SpectralSplit {
    pub fn max_eigenvalue_modulus(&self) -> f64 {
        self.spectrum.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `R₁ = (WᵀL₁)⁻¹ Wᵀ`.
    pub fn r1(&self) -> RMat {
        self.dominant_left.transpose()
    }

    /// `R₂ = L₂ᵀ Π₂`.
    pub fn r2(&self) -> RMat {
        let n = self.dominant_right.nrows();
        let pi2 = RMat::identity(n, n) - &self.dominant_right * self.r1();
        self.remainder_basis.transpose() * pi2
    }
}

fn eig_2x2(m: &RMat) -> (Complex<f64>, Complex<f64>) {
    // tr²/4 − det written without the cancellation near a scalar block
    let half_gap = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    let disc = Complex::new(half_gap * half_gap + m[(0, 1)] * m[(1, 0)], 0.0).sqrt();
    let half = Complex::new(0.5 * (m[(0, 0)] + m[(1, 1)]), 0.0);
    (half + disc, half - disc)
}

fn by_distance_to_one(a: &Complex<f64>, b: &Complex<f64>) -> std::cmp::Ordering {
    let da = (a - Complex::new(1.0, 0.0)).norm();
    let db = (b - Complex::new(1.0, 0.0)).norm();
    if (da - db).abs() > 1e-12 {
        da.total_cmp(&db)
    } else {
        b.re.total_cmp(&a.re)
    }
}

/// Splits `lam_phys` (restricted to the span of channels) into the rank-2 block
/// nearest eigenvalue 1 and its complement. With `delta`, more than two
/// eigenvalues within `2δ` of 1 is an error.
pub fn spectral_split(
    lam_phys: &TwirlingMatrix,
    lam_haar: &TwirlingMatrix,
    delta: Option<f64>,
) -> Result<SpectralSplit> {
    let d = lam_phys.dim();
    let sub = SubspaceProjector::channels(d)?;
    let a = lam_phys.restrict(&sub);
    let r = a.nrows();

    let mut spectrum: Vec<Complex<f64>> = a.complex_eigenvalues().iter().cloned().collect();
    spectrum.sort_by(by_distance_to_one);
    if let Some(delta) = delta {
        let radius = (2.0 * delta).max(CHECK_SLACK);
        let count = spectrum
            .iter()
            .filter(|z| (*z - Complex::new(1.0, 0.0)).norm() <= radius)
            .count();
        if count > 2 {
            return Err(UrbError::Ambiguous { count, radius });
        }
    }
    let (l1, l2) = (spectrum[0], spectrum[1]);

    // (Λ − λ₁)(Λ − λ₂) is real for a real or conjugate pair; its kernels are
    // the right and left dominant invariant subspaces.
    let s = (l1 + l2).re;
    let prod = (l1 * l2).re;
    let poly = &a * &a - &a * s + RMat::identity(r, r) * prod;
    let svd = poly.svd(true, true);
    let u = svd.u.as_ref().expect("requested");
    let vt = svd.v_t.as_ref().expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let q = RMat::from_columns(&[vt.row(order[0]).transpose(), vt.row(order[1]).transpose()]);
    let w = RMat::from_columns(&[u.column(order[0]).into_owned(), u.column(order[1]).into_owned()]);

    let wq = w.transpose() * &q;
    let wq_inv = wq
        .try_inverse()
        .ok_or_else(|| UrbError::invariant("dominant left and right subspaces are orthogonal"))?;
    let r1 = &wq_inv * w.transpose();
    let block = &r1 * &a * &q;
    let (e1, e2) = eig_2x2(&block);
    let (lambda_unit, second) = if by_distance_to_one(&e1, &e2).is_le() {
        (e1, e2)
    } else {
        (e2, e1)
    };

    // orthonormal basis of W⊥ = range of the complementary projector
    let w_proj = &w * (w.transpose() * &w).try_inverse().expect("full rank") * w.transpose();
    let comp = RMat::identity(r, r) - w_proj;
    let eig = SymmetricEigen::new(comp);
    let keep: Vec<usize> = (0..r).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    let n2 = RMat::from_columns(
        &keep
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    let remainder_block = n2.transpose() * &a * &n2;
    let remainder_norm = if remainder_block.nrows() == 0 {
        0.0
    } else {
        spectral_norm(&remainder_block)
    };

    let pi1 = &q * &r1;
    let pi2 = RMat::identity(r, r) - &pi1;
    let kappa_estimate = spectral_norm(&pi2);
    let r2 = n2.transpose() * &pi2;
    let recon = &q * &block * &r1 + &n2 * &remainder_block * &r2;
    let reconstruction_error = frobenius(&(recon - &a));

    let scalar_defect = {
        let mean = 0.5 * (block[(0, 0)] + block[(1, 1)]);
        (block[(0, 0)] - mean)
            .abs()
            .max((block[(1, 1)] - mean).abs())
            .max(block[(0, 1)].abs())
            .max(block[(1, 0)].abs())
    };
    let diagonalizable = !((lambda_unit - second).norm() <= DEFECT_TOL && scalar_defect > DEFECT_TOL);

    let haar_projector_distance = frobenius(&(&pi1 - lam_haar.restrict(&sub)));

    Ok(SpectralSplit {
        lambda_unit,
        p: second.re,
        p_imag: second.im,
        dominant_right: q,
        dominant_left: r1.transpose(),
        block,
        remainder_basis: n2,
        remainder_block,
        remainder_norm,
        kappa_estimate,
        diagonalizable,
        haar_projector_distance,
        reconstruction_error,
        spectrum,
        subspace: sub,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryReport {
    pub gamma: f64,
    pub delta: f64,
    pub norm: GammaNorm,
    /// `γ < 1` and `δ ≤ (1 − γ)/11`.
    pub hypothesis_ok: bool,
    /// `|1 − λᵢ| ≤ 2δ` for both dominant eigenvalues.
    pub eig_close: bool,
    /// `‖A′₂‖ ≤ γ + 6δ`.
    pub remainder_ok: bool,
    /// `κ ≤ 16`.
    pub kappa_ok: bool,
}

impl CorollaryReport {
    pub fn all_ok(&self) -> bool {
        self.hypothesis_ok && self.eig_close && self.remainder_ok && self.kappa_ok
    }
}

pub fn verify_corollary(split: &SpectralSplit, gamma: f64, delta: f64, norm: GammaNorm) -> CorollaryReport {
    let one = Complex::new(1.0, 0.0);
    let second = Complex::new(split.p, split.p_imag);
    CorollaryReport {
        gamma,
        delta,
        norm,
        hypothesis_ok: gamma < 1.0 && delta <= (1.0 - gamma) / 11.0,
        eig_close: (split.lambda_unit - one).norm() <= 2.0 * delta + CHECK_SLACK
            && (second - one).norm() <= 2.0 * delta + CHECK_SLACK,
        remainder_ok: split.remainder_norm <= gamma + 6.0 * delta + CHECK_SLACK,
        kappa_ok: split.kappa_estimate <= 16.0,
    }
}

/// `C_{φ*} = Σ_g p_g φ*(g)`.
pub fn average_inverting_map(e: &GateEnsemble) -> Result<Superoperator> {
    let mut acc = Superoperator::zero(e.dim())?;
    for g in e.elements() {
        acc = acc.add(&g.inverting.scale(g.probability))?;
    }
    Ok(acc)
}

/// Fixed point of `C_{φ*}`, normalized to unit trace.
pub fn fixed_point_state(e: &GateEnsemble) -> Result<DensityMatrix> {
    let c = average_inverting_map(e)?;
    let d = e.dim();
    let n = d * d;
    let m = c.ptm() - RMat::identity(n, n);
    let svd = m.svd(false, true);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let smallest = svd.singular_values[order[0]];
    if smallest > 1e-8 {
        return Err(UrbError::invariant(format!(
            "average inverting map has no eigenvalue 1 (smallest singular value {smallest:.3e})"
        )));
    }
    let coords = if svd.singular_values[order[1]] <= 1e-8 {
        // degenerate: lazy power iteration from the maximally mixed state
        let lazy = (c.ptm() + RMat::identity(n, n)) * 0.5;
        let mut x = DVector::zeros(n);
        x[0] = 1.0 / d as f64;
        for _ in 0..100_000 {
            let next = &lazy * &x;
            let diff = (&next - &x).norm();
            x = next;
            if diff < 1e-15 {
                break;
            }
        }
        x
    } else {
        let vt = svd.v_t.as_ref().expect("requested");
        let v: DVector<f64> = vt.row(order[0]).transpose();
        if v[0].abs() < 1e-12 {
            return Err(UrbError::invariant("fixed point is traceless"));
        }
        let scale = d as f64 * v[0];
        v / scale
    };
    let h = HermitianOperator::from_pauli_coords(d, &coords)?;
    DensityMatrix::new(h)
}

/// Replacement channel `ρ ↦ ρ* tr[ρ]`.
pub fn lifted_fixed_point(rho: &DensityMatrix) -> Result<Superoperator> {
    Superoperator::replacement_map(rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn near_scalar_block_keeps_real_eigenvalues() {
        let m = RMat::from_row_slice(2, 2, &[1.0 + 2e-16, 3e-17, 0.0, 1.0 - 1e-16]);
        let (a, b) = eig_2x2(&m);
        assert_eq!(a.im, 0.0);
        assert_eq!(b.im, 0.0);
        assert!((a.re - 1.0).abs() < 1e-15 && (b.re - 1.0).abs() < 1e-15);
        let rot = RMat::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let (a, _) = eig_2x2(&rot);
        assert!((a.im.abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn corollary_hypothesis_arithmetic() {
        let split_dummy = |lu: f64, p: f64| SpectralSplit {
            lambda_unit: Complex::new(lu, 0.0),
            p,
            p_imag: 0.0,
            dominant_right: RMat::zeros(1, 2),
            dominant_left: RMat::zeros(1, 2),
            block: RMat::identity(2, 2),
            remainder_basis: RMat::zeros(1, 0),
            remainder_block: RMat::zeros(0, 0),
            remainder_norm: 0.0,
            kappa_estimate: 1.0,
            diagonalizable: true,
            haar_projector_distance: 0.0,
            reconstruction_error: 0.0,
            spectrum: vec![],
            subspace: SubspaceProjector::channels(2).unwrap(),
        };
        let r = verify_corollary(&split_dummy(1.0, 1.0), 0.5, 0.1, GammaNorm::So);
        assert!(!r.hypothesis_ok);
        assert!(r.eig_close && r.remainder_ok && r.kappa_ok);
        let r = verify_corollary(&split_dummy(1.0, 1.0), 0.0, 0.0, GammaNorm::So);
        assert!(r.all_ok());
        let r = verify_corollary(&split_dummy(1.0, 0.7), 0.0, 0.1, GammaNorm::So);
        assert!(!r.eig_close);
    }
}
