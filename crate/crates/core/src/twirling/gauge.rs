use crate::error::{Result, UrbError};
use crate::linalg::RMat;
use crate::superops::{diamond_norm, Superoperator};
use crate::twirling::ensemble::GateEnsemble;
use crate::twirling::twirl::{conjugation_sum, TwirlingMatrix};

pub const MAX_GAUGE_CONDITION: f64 = 1e8;

/// Inverse of an invertible superoperator, rejecting ill-conditioned gauges.
pub fn gauge_inverse(t: &Superoperator) -> Result<Superoperator> {
    let svd = t.ptm().clone().svd(false, false);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    if min <= 0.0 || max / min >= MAX_GAUGE_CONDITION {
        return Err(UrbError::invariant(format!(
            "gauge is singular or ill-conditioned (condition number {:.3e})",
            if min > 0.0 { max / min } else { f64::INFINITY }
        )));
    }
    let inv = t
        .ptm()
        .clone()
        .try_inverse()
        .ok_or_else(|| UrbError::invariant("gauge is singular"))?;
    Superoperator::from_ptm(inv)
}

/// `Λ̃_R : N ↦ Σ p_g (V∘φ*(g)∘V⁻¹) ∘ N ∘ (U∘φ(g)∘U⁻¹)`.
pub fn gauge_corrected_twirl(e: &GateEnsemble, u: &Superoperator, v: &Superoperator) -> Result<TwirlingMatrix> {
    let u_inv = gauge_inverse(u)?;
    let v_inv = gauge_inverse(v)?;
    let maps: Vec<(f64, RMat, RMat)> = e
        .elements()
        .iter()
        .map(|g| {
            let left = v.compose(&g.inverting)?.compose(&v_inv)?;
            let right = u.compose(&g.implementation)?.compose(&u_inv)?;
            Ok((g.probability, left.into_ptm(), right.into_ptm()))
        })
        .collect::<Result<_>>()?;
    let terms: Vec<(f64, &RMat, &RMat)> = maps.iter().map(|(p, a, b)| (*p, a, b)).collect();
    conjugation_sum(e.dim(), &terms)
}

/// `‖U‖⋄ ‖U⁻¹‖⋄ ‖V‖⋄ ‖V⁻¹‖⋄`, using the certified upper ends of the SDP intervals.
pub fn gauge_kappa(u: &Superoperator, v: &Superoperator) -> Result<f64> {
    let mut kappa = 1.0;
    for m in [u.clone(), gauge_inverse(u)?, v.clone(), gauge_inverse(v)?] {
        kappa *= diamond_norm(&m)?.upper;
    }
    Ok(kappa)
}
