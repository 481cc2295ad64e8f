use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{hermitian_eig, spectral_map, spectral_norm, CMat};
use crate::superops::hermitian::HermitianOperator;
use crate::superops::random::random_ket;
use crate::superops::superop::Superoperator;

pub const DEFAULT_RESTARTS: usize = 64;
const RESTART_SEED: u64 = 0x7472_6163_655f_6e6d;
const MAX_ASCENT_STEPS: usize = 2000;
const ASCENT_TOL: f64 = 1e-13;

pub fn trace_norm(h: &HermitianOperator) -> f64 {
    h.trace_norm()
}

pub fn frobenius_norm(h: &HermitianOperator) -> f64 {
    h.frobenius_norm()
}

pub fn spectral_norm_herm(h: &HermitianOperator) -> f64 {
    h.spectral_norm()
}

/// Frobenius norm of the ptm; the norm induced by the superoperator inner product.
pub fn so_norm(t: &Superoperator) -> f64 {
    t.ptm().norm()
}

/// Operator norm with respect to the Frobenius norm on matrices.
pub fn induced_frobenius_norm(t: &Superoperator) -> f64 {
    spectral_norm(t.ptm())
}

/// Result of the multi-start search for `max ‖T(ψψ†)‖₁`. The value is
/// attained by the best restart, so it is a certified lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedTraceNorm {
    pub value: f64,
    pub restarts: usize,
    pub converged_restarts: usize,
    pub best_restart: usize,
}

impl InducedTraceNorm {
    pub fn all_converged(&self) -> bool {
        self.converged_restarts == self.restarts
    }
}

pub fn induced_trace_norm(t: &Superoperator) -> InducedTraceNorm {
    induced_trace_norm_with(t, DEFAULT_RESTARTS)
}

/// Minorize-maximize over pure states: given `ψ`, take `S = sign(T(ψψ†))` and
/// move `ψ` to the top eigenvector of `T†(S)`. Each step cannot decrease
/// `‖T(ψψ†)‖₁`.
pub fn induced_trace_norm_with(t: &Superoperator, restarts: usize) -> InducedTraceNorm {
    let d = t.dim();
    let adj = t.adjoint();
    let restarts = restarts.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
    let mut best = InducedTraceNorm {
        value: 0.0,
        restarts,
        converged_restarts: 0,
        best_restart: 0,
    };
    for r in 0..restarts {
        let mut psi = if r == 0 {
            let mut v = nalgebra::DVector::zeros(d);
            v[0] = crate::linalg::c(1.0, 0.0);
            v
        } else {
            random_ket(d, &mut rng)
        };
        let mut value = 0.0;
        let mut converged = false;
        for _ in 0..MAX_ASCENT_STEPS {
            let rho: CMat = &psi * psi.adjoint();
            let out = crate::linalg::hermitize(&t.apply_matrix(&rho).expect("dimension checked"));
            let (vals, vecs) = hermitian_eig(&out);
            let current: f64 = vals.iter().map(|x| x.abs()).sum();
            let sign = spectral_map(&vals, &vecs, |x| {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            });
            let pulled = adj.apply_matrix(&sign).expect("dimension checked");
            let (pv, pvecs) = hermitian_eig(&pulled);
            let top = pv.len() - 1;
            let improvement = current - value;
            value = value.max(current);
            if improvement.abs() <= ASCENT_TOL * (1.0 + current) && pv[top] <= current + ASCENT_TOL {
                converged = true;
                break;
            }
            psi = pvecs.column(top).into_owned();
        }
        if converged {
            best.converged_restarts += 1;
        }
        if value > best.value {
            best.value = value;
            best.best_restart = r;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superops::random::{random_channel, random_hermitian};

    #[test]
    fn identity_norms() {
        let id = Superoperator::identity(2).unwrap();
        assert!((so_norm(&id) - 2.0).abs() < 1e-14);
        assert!((induced_frobenius_norm(&id) - 1.0).abs() < 1e-12);
        let tr = induced_trace_norm_with(&id, 4);
        assert!((tr.value - 1.0).abs() < 1e-10);
        assert!(so_norm(&id) <= 2.0 * tr.value + 1e-10);
    }

    #[test]
    fn depolarizing_induced_frobenius() {
        let t = Superoperator::depolarizing(2, 0.3).unwrap();
        assert!((induced_frobenius_norm(&t) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_channels_have_unit_induced_trace_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [2, 4] {
            let t = random_channel(d, 2, &mut rng).unwrap();
            let r = induced_trace_norm_with(&t, 8);
            assert!((r.value - 1.0).abs() < 1e-9, "d={d} value={}", r.value);
        }
    }

    #[test]
    fn transpose_like_map_exceeds_one() {
        // The difference id - dep(0) maps |0><0| to diag(1/2, -1/2), so the
        // induced trace norm is at least 1.
        let t = Superoperator::identity(2)
            .unwrap()
            .sub(&Superoperator::depolarizing(2, 0.0).unwrap())
            .unwrap();
        let r = induced_trace_norm(&t);
        assert!((r.value - 1.0).abs() < 1e-9);
        assert!(r.all_converged());
    }

    #[test]
    fn hermitian_norm_chain_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let h = random_hermitian(4, &mut rng).unwrap();
            let (s, f, t) = (spectral_norm_herm(&h), frobenius_norm(&h), trace_norm(&h));
            assert!(s <= f + 1e-10 && f <= t + 1e-10 && t <= 2.0 * f + 1e-10);
        }
    }
}
