//! Diamond norm of a Hermiticity-preserving map.
//!
//! Primal:  max ⟨J, W₀ − W₁⟩  s.t.  W₀ + W₁ ⪯ I ⊗ σ,  tr σ = 1,  W₀, W₁, σ ⪰ 0
//! Dual:    min λ_max(Tr_out Y)  s.t.  Y ⪰ J,  Y ⪰ −J
//!
//! `J` is the Choi matrix with the output factor first. The slack of the
//! primal inequality is an explicit PSD block, which turns the problem into
//! standard form `min ⟨C, X⟩, 𝒜X = b, X ⪰ 0` solved by alternating-direction
//! augmented Lagrangian iterations on the dual. Every few iterations both a
//! feasible primal value and a feasible dual value are extracted, so the
//! returned interval always brackets the true norm.

use crate::error::{Result, UrbError};
use crate::linalg::{c, hermitian_eig, hermitize, partial_trace_first, psd_sqrt, spectral_map, trace_norm_herm, CMat};
use crate::superops::superop::Superoperator;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    /// Absolute tolerance on the certified gap.
    pub tol: f64,
    pub max_iter: usize,
    /// Iterations between certificate evaluations.
    pub check_every: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 50_000,
            check_every: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiamondMethod {
    ZeroMap,
    /// CPTP maps have unit diamond norm.
    Channel,
    PauliClosedForm,
    Sdp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiamondNorm {
    /// Midpoint of the certified interval.
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
    pub method: DiamondMethod,
}

impl DiamondNorm {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    fn exact(value: f64, method: DiamondMethod) -> Self {
        Self {
            value,
            lower: value,
            upper: value,
            iterations: 0,
            method,
        }
    }
}

/// Closed form for differences of Pauli channels: the ℓ₁ norm of the α diagonal.
pub fn pauli_channel_diamond(diag_alpha_diff: &[f64]) -> f64 {
    diag_alpha_diff.iter().map(|x| x.abs()).sum()
}

/// Diamond norm with the zero-map, channel and Pauli-channel fast paths.
pub fn diamond_norm(t: &Superoperator) -> Result<DiamondNorm> {
    if t.ptm().iter().all(|&x| x == 0.0) {
        return Ok(DiamondNorm::exact(0.0, DiamondMethod::ZeroMap));
    }
    if t.is_cptp()? {
        return Ok(DiamondNorm::exact(1.0, DiamondMethod::Channel));
    }
    let alpha = t.alpha_matrix()?;
    if alpha.is_diagonal(1e-13) {
        return Ok(DiamondNorm::exact(
            pauli_channel_diamond(&alpha.diagonal_real()),
            DiamondMethod::PauliClosedForm,
        ));
    }
    diamond_norm_sdp(t)
}

/// Diamond norm through the SDP only (no closed-form shortcut).
pub fn diamond_norm_sdp(t: &Superoperator) -> Result<DiamondNorm> {
    diamond_norm_sdp_with(t, &SdpOptions::default())
}

pub fn diamond_norm_sdp_with(t: &Superoperator, opts: &SdpOptions) -> Result<DiamondNorm> {
    let d = t.dim();
    let j = hermitize(t.choi()?.entries());
    let scale = trace_norm_herm(&j) / d as f64;
    if scale == 0.0 {
        return Ok(DiamondNorm::exact(0.0, DiamondMethod::ZeroMap));
    }
    let js = j.unscale(scale);
    let mut solver = Admm::new(js, d);
    let tol = opts.tol / scale;
    let mut lower: f64 = 0.0;
    let mut upper = f64::INFINITY;
    let mut it = 0;
    while it < opts.max_iter {
        solver.step();
        it += 1;
        if it % 10 == 0 {
            solver.adapt_mu();
        }
        if it % opts.check_every.max(1) == 0 || it == opts.max_iter {
            let (lo, up) = solver.certificates();
            lower = lower.max(lo);
            upper = upper.min(up);
            if upper - lower <= tol {
                return Ok(DiamondNorm {
                    value: 0.5 * (lower + upper) * scale,
                    lower: lower * scale,
                    upper: upper * scale,
                    iterations: it,
                    method: DiamondMethod::Sdp,
                });
            }
        }
    }
    Err(UrbError::NonConvergence {
        iterations: it,
        lower: lower * scale,
        upper: upper * scale,
    })
}

/// Primal variable blocks `(W₀, W₁, slack, σ)`.
#[derive(Clone)]
struct Blocks {
    w0: CMat,
    w1: CMat,
    sl: CMat,
    sig: CMat,
}

impl Blocks {
    fn zeros(n: usize, d: usize) -> Self {
        Self {
            w0: CMat::zeros(n, n),
            w1: CMat::zeros(n, n),
            sl: CMat::zeros(n, n),
            sig: CMat::zeros(d, d),
        }
    }

    fn norm_sq(&self) -> f64 {
        self.w0.norm_squared() + self.w1.norm_squared() + self.sl.norm_squared() + self.sig.norm_squared()
    }
}

struct Admm {
    d: usize,
    n: usize,
    j: CMat,
    x: Blocks,
    s: Blocks,
    y: CMat,
    yt: f64,
    mu: f64,
    pres: f64,
    dres: f64,
}

/// `Π₊(V)` and `Π₊(−V)` from one eigen-decomposition.
fn split_psd(v: &CMat) -> (CMat, CMat) {
    let (vals, vecs) = hermitian_eig(v);
    let pos = spectral_map(&vals, &vecs, |x| x.max(0.0));
    let neg = spectral_map(&vals, &vecs, |x| (-x).max(0.0));
    (pos, neg)
}

fn kron_identity_left(d: usize, m: &CMat) -> CMat {
    CMat::identity(d, d).kronecker(m)
}

impl Admm {
    fn new(j: CMat, d: usize) -> Self {
        let n = d * d;
        Self {
            d,
            n,
            j,
            x: Blocks::zeros(n, d),
            s: Blocks::zeros(n, d),
            y: CMat::zeros(n, n),
            yt: 0.0,
            mu: 1.0,
            pres: 0.0,
            dres: 0.0,
        }
    }

    /// `𝒜(X) = (W₀ + W₁ + slack − I ⊗ σ, tr σ)`.
    fn a_op(&self, b: &Blocks) -> (CMat, f64) {
        let m = &b.w0 + &b.w1 + &b.sl - kron_identity_left(self.d, &b.sig);
        (m, b.sig.trace().re)
    }

    /// `𝒜*(Y, t) = (Y, Y, Y, −Tr_out Y + t I)`.
    fn a_adj(&self, y: &CMat, t: f64) -> Blocks {
        let mut sig = -partial_trace_first(y, self.d, self.d);
        for i in 0..self.d {
            sig[(i, i)] += c(t, 0.0);
        }
        Blocks {
            w0: y.clone(),
            w1: y.clone(),
            sl: y.clone(),
            sig,
        }
    }

    /// Solves `𝒜𝒜*(Y, t) = (R, r)` in closed form.
    fn solve_aat(&self, r: &CMat, rt: f64) -> (CMat, f64) {
        let d = self.d as f64;
        let tr_r = r.trace().re;
        let t = (rt * (3.0 + d) + tr_r) / (3.0 * d);
        let mut t1 = partial_trace_first(r, self.d, self.d);
        for i in 0..self.d {
            t1[(i, i)] += c(d * t, 0.0);
        }
        let t1 = t1.unscale(3.0 + d);
        let mut y = r - kron_identity_left(self.d, &t1);
        for i in 0..self.n {
            y[(i, i)] += c(t, 0.0);
        }
        (y.unscale(3.0), t)
    }

    fn step(&mut self) {
        // y = (𝒜𝒜*)⁻¹ [μ (b − 𝒜X) − 𝒜(S − C)] with C = (−J, J, 0, 0)
        let (ax, axt) = self.a_op(&self.x);
        let (as_, ast) = self.a_op(&self.s);
        // 𝒜(C) = (−J + J, 0) = 0
        let r = (ax.scale(-self.mu)) - as_;
        let rt = self.mu * (1.0 - axt) - ast;
        let (y, yt) = self.solve_aat(&r, rt);
        self.y = y;
        self.yt = yt;

        // V = C − 𝒜*y − μX
        let ay = self.a_adj(&self.y, self.yt);
        let v = Blocks {
            w0: -&self.j - &ay.w0 - self.x.w0.scale(self.mu),
            w1: &self.j - &ay.w1 - self.x.w1.scale(self.mu),
            sl: -&ay.sl - self.x.sl.scale(self.mu),
            sig: -&ay.sig - self.x.sig.scale(self.mu),
        };
        let (s0, x0) = split_psd(&v.w0);
        let (s1, x1) = split_psd(&v.w1);
        let (s2, x2) = split_psd(&v.sl);
        let (s3, x3) = split_psd(&v.sig);
        let inv = 1.0 / self.mu;
        self.s = Blocks {
            w0: s0,
            w1: s1,
            sl: s2,
            sig: s3,
        };
        self.x = Blocks {
            w0: x0.scale(inv),
            w1: x1.scale(inv),
            sl: x2.scale(inv),
            sig: x3.scale(inv),
        };

        let (ax, axt) = self.a_op(&self.x);
        self.pres = (ax.norm_squared() + (axt - 1.0).powi(2)).sqrt();
        let dual = Blocks {
            w0: &ay.w0 + &self.s.w0 + &self.j,
            w1: &ay.w1 + &self.s.w1 - &self.j,
            sl: &ay.sl + &self.s.sl,
            sig: &ay.sig + &self.s.sig,
        };
        self.dres = dual.norm_sq().sqrt();
    }

    fn adapt_mu(&mut self) {
        if self.pres > 4.0 * self.dres {
            self.mu = (self.mu * 1.5).min(1e4);
        } else if self.dres > 4.0 * self.pres {
            self.mu = (self.mu / 1.5).max(1e-4);
        }
    }

    /// Feasible primal and dual objective values from the current iterate.
    fn certificates(&self) -> (f64, f64) {
        let d = self.d;
        // primal: any density σ gives the value ‖(I⊗√σ) J (I⊗√σ)‖₁
        let mut sig = crate::linalg::psd_part(&hermitize(&self.x.sig));
        let tr = sig.trace().re;
        if tr <= 1e-14 {
            sig = CMat::identity(d, d).unscale(d as f64);
        } else {
            sig = sig.unscale(tr);
        }
        let root = kron_identity_left(d, &psd_sqrt(&sig));
        let lower = trace_norm_herm(&(&root * &self.j * &root));

        // dual: Ŷ = −Y shifted until Ŷ ⪰ ±J
        let yh = hermitize(&(-&self.y));
        let (ev_m, _) = hermitian_eig(&(&yh - &self.j));
        let (ev_p, _) = hermitian_eig(&(&yh + &self.j));
        let shift = (-ev_m[0]).max(-ev_p[0]).max(0.0);
        let (ev_red, _) = hermitian_eig(&partial_trace_first(&yh, d, d));
        let upper = ev_red[ev_red.len() - 1] + shift * d as f64;
        (lower, upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superops::random::random_channel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_map() {
        let z = Superoperator::zero(2).unwrap();
        assert_eq!(diamond_norm(&z).unwrap().value, 0.0);
        assert_eq!(diamond_norm_sdp(&z).unwrap().value, 0.0);
    }

    #[test]
    fn depolarizing_difference_matches_closed_form() {
        let (q1, q2) = (0.9, 0.6);
        let t = Superoperator::depolarizing(2, q1)
            .unwrap()
            .sub(&Superoperator::depolarizing(2, q2).unwrap())
            .unwrap();
        let exact = 1.5 * (q1 - q2).abs();
        let fast = diamond_norm(&t).unwrap();
        assert_eq!(fast.method, DiamondMethod::PauliClosedForm);
        assert!((fast.value - exact).abs() < 1e-12);
        let sdp = diamond_norm_sdp(&t).unwrap();
        assert!(sdp.lower <= exact + 1e-9 && exact <= sdp.upper + 1e-9);
        assert!((sdp.value - exact).abs() < 1e-6);
    }

    #[test]
    fn channels_have_unit_diamond_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in [2, 4] {
            let t = random_channel(d, 3, &mut rng).unwrap();
            let r = diamond_norm_sdp(&t).unwrap();
            assert!((r.value - 1.0).abs() < 1e-6, "d={d}: {r:?}");
        }
    }

    #[test]
    fn unitary_difference() {
        // ‖U·U† − id‖⋄ = 2 sin θ for eigenphase spread 2θ ≤ π
        let theta: f64 = 0.3;
        let u = CMat::from_row_slice(
            2,
            2,
            &[
                c(theta.cos(), -theta.sin()),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(theta.cos(), theta.sin()),
            ],
        );
        let t = Superoperator::unitary(&u)
            .unwrap()
            .sub(&Superoperator::identity(2).unwrap())
            .unwrap();
        let r = diamond_norm(&t).unwrap();
        assert_eq!(r.method, DiamondMethod::Sdp);
        assert!((r.value - 2.0 * theta.sin()).abs() < 1e-6, "{r:?}");
    }
}
