//! Single-exponential fits, the robustness bound on fitted exponents, and the
//! decay-exponent / average-fidelity translation.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Result, UrbError};
use crate::perturbation::fixed_point_state;
use crate::schemes::{DecayDataset, ExponentialModel, UrbScheme};
use crate::superops::Superoperator;

pub const MAX_FIT_ITERATIONS: usize = 200;
pub const STEP_TOL: f64 = 1e-12;
pub const P_MIN: f64 = 1e-9;
/// Grid resolution of the fallback initialization.
const P_GRID: usize = 400;
/// Tolerance of the replacement-form check behind the fidelity translation.
pub const LICENSE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    /// Standard error of `p` from the curvature at the optimum.
    pub p_std_error: Option<f64>,
    pub rms_residual: f64,
    /// `y − (A + Bp^m)` at each data point.
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Flat data: `B ≈ 0` and `p` is not identifiable.
    pub degenerate: bool,
    /// The decaying component is below twice the largest std error.
    pub signal_below_noise: bool,
    pub weighted: bool,
}

impl FitResult {
    pub fn model(&self) -> ExponentialModel {
        ExponentialModel {
            a: self.a,
            b: self.b,
            p: self.p,
        }
    }

    /// Flat `key = value` text block.
    pub fn to_text(&self) -> String {
        let se = self.p_std_error.map_or("n/a".to_string(), |v| format!("{v:.6e}"));
        format!(
            "A = {:.12}\nB = {:.12}\np = {:.12}\np_std_error = {se}\nrms_residual = {:.6e}\nconverged = {}\niterations = {}\ndegenerate = {}\nsignal_below_noise = {}\n",
            self.a,
            self.b,
            self.p,
            self.rms_residual,
            self.converged,
            self.iterations,
            self.degenerate,
            self.signal_below_noise
        )
    }
}

struct Problem<'a> {
    m: Vec<f64>,
    y: &'a [f64],
    w: Vec<f64>,
}

impl Problem<'_> {
    fn model(&self, t: &Vector3<f64>, m: f64) -> f64 {
        t[0] + t[1] * t[2].powf(m)
    }

    fn sse(&self, t: &Vector3<f64>) -> f64 {
        self.m
            .iter()
            .zip(self.y)
            .zip(&self.w)
            .map(|((&m, &y), &w)| w * (y - self.model(t, m)).powi(2))
            .sum()
    }

    /// `JᵀWJ` and `JᵀWr` with `r = y − f`.
    fn normal_equations(&self, t: &Vector3<f64>) -> (Matrix3<f64>, Vector3<f64>) {
        let mut h = Matrix3::zeros();
        let mut g = Vector3::zeros();
        for ((&m, &y), &w) in self.m.iter().zip(self.y).zip(&self.w) {
            let pm = t[2].powf(m);
            let dp = if m == 0.0 { 0.0 } else { t[1] * m * t[2].powf(m - 1.0) };
            let j = Vector3::new(1.0, pm, dp);
            let r = y - (t[0] + t[1] * pm);
            h += w * j * j.transpose();
            g += w * r * j;
        }
        (h, g)
    }

    /// Best `(A, B)` for fixed `p` by weighted linear least squares.
    fn linear_ab(&self, p: f64) -> Option<(f64, f64)> {
        let (mut s0, mut s1, mut s2, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((&m, &y), &w) in self.m.iter().zip(self.y).zip(&self.w) {
            let x = p.powf(m);
            s0 += w;
            s1 += w * x;
            s2 += w * x * x;
            sy += w * y;
            sxy += w * x * y;
        }
        let det = s0 * s2 - s1 * s1;
        if det.abs() < 1e-300 {
            return None;
        }
        Some(((s2 * sy - s1 * sxy) / det, (s0 * sxy - s1 * sy) / det))
    }

    fn levenberg_marquardt(&self, start: Vector3<f64>) -> (Vector3<f64>, bool, usize) {
        let mut t = start;
        let mut sse = self.sse(&t);
        let mut lambda = 1e-3;
        for it in 1..=MAX_FIT_ITERATIONS {
            let (h, g) = self.normal_equations(&t);
            let mut damped = h;
            for i in 0..3 {
                damped[(i, i)] += lambda * h[(i, i)].max(1e-30);
            }
            let Some(step) = damped.lu().solve(&g) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = t + step;
            trial[2] = trial[2].clamp(P_MIN, 1.0);
            let trial_sse = self.sse(&trial);
            let moved = (trial - t).norm();
            if trial_sse <= sse {
                t = trial;
                sse = trial_sse;
                lambda = (lambda / 3.0).max(1e-15);
                if moved < STEP_TOL || sse == 0.0 {
                    return (t, true, it);
                }
            } else {
                lambda *= 4.0;
                if moved < STEP_TOL || lambda > 1e15 {
                    // no descent direction left at working precision
                    return (t, true, it);
                }
            }
        }
        (t, false, MAX_FIT_ITERATIONS)
    }

    /// Plateau initialization: `A₀` from the last two points, `p₀` from a
    /// log-linear fit of the remaining excursion, `B₀` by least squares.
    fn tail_start(&self) -> Vector3<f64> {
        let n = self.y.len();
        let a0 = 0.5 * (self.y[n - 1] + self.y[n - 2]);
        let sign = (self.y[0] - a0).signum();
        let pts: Vec<(f64, f64)> = self
            .m
            .iter()
            .zip(self.y)
            .take(n - 2)
            .filter(|(_, &y)| (y - a0) * sign > 1e-14)
            .map(|(&m, &y)| (m, ((y - a0) * sign).ln()))
            .collect();
        let p0 = if pts.len() >= 2 {
            let k = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            if sxx > 0.0 {
                (sxy / sxx).exp().clamp(1e-3, 1.0)
            } else {
                0.5
            }
        } else {
            0.5
        };
        let (mut num, mut den) = (0.0, 0.0);
        for ((&m, &y), &w) in self.m.iter().zip(self.y).zip(&self.w) {
            let x = p0.powf(m);
            num += w * x * (y - a0);
            den += w * x * x;
        }
        let b0 = if den > 0.0 { num / den } else { 0.0 };
        Vector3::new(a0, b0, p0)
    }

    /// Best grid point of the profile `min_{A,B} SSE(A, B, p)`.
    fn grid_start(&self) -> Option<Vector3<f64>> {
        let mut best: Option<(f64, Vector3<f64>)> = None;
        for k in 1..=P_GRID {
            let p = k as f64 / P_GRID as f64;
            if let Some((a, b)) = self.linear_ab(p) {
                let t = Vector3::new(a, b, p);
                let sse = self.sse(&t);
                if best.as_ref().is_none_or(|(s, _)| sse < *s) {
                    best = Some((sse, t));
                }
            }
        }
        best.map(|(_, t)| t)
    }
}

/// Fits `A + B·p^m`; inverse-variance weights when `std_errors` are given and
/// all positive, uniform weights otherwise.
pub fn fit_exponential(m_values: &[u32], y: &[f64], std_errors: Option<&[f64]>) -> Result<FitResult> {
    let n = m_values.len();
    if y.len() != n || std_errors.is_some_and(|s| s.len() != n) {
        return Err(UrbError::invariant("fit inputs have different lengths"));
    }
    let mut distinct = m_values.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(UrbError::invariant(format!(
            "a fit needs at least 4 distinct m values, got {}",
            distinct.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(UrbError::invariant("non-finite data value"));
    }
    let weighted = std_errors.is_some_and(|s| s.iter().all(|&e| e > 0.0 && e.is_finite()));
    let w: Vec<f64> = match std_errors {
        Some(s) if weighted => s.iter().map(|e| 1.0 / (e * e)).collect(),
        _ => vec![1.0; n],
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| m_values[i]);
    let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let prob = Problem {
        m: order.iter().map(|&i| m_values[i] as f64).collect(),
        y: &ys,
        w: order.iter().map(|&i| w[i]).collect(),
    };

    let mean = ys.iter().sum::<f64>() / n as f64;
    let spread =
        ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let flat = spread <= 1e-12 * mean.abs().max(1.0);

    let (t, converged, iterations) = if flat {
        (Vector3::new(mean, 0.0, 1.0), true, 0)
    } else {
        let mut runs = vec![prob.levenberg_marquardt(prob.tail_start())];
        if let Some(g) = prob.grid_start() {
            runs.push(prob.levenberg_marquardt(g));
        }
        runs.into_iter()
            .min_by(|a, b| prob.sse(&a.0).total_cmp(&prob.sse(&b.0)))
            .expect("at least one run")
    };

    let residuals: Vec<f64> = m_values
        .iter()
        .zip(y)
        .map(|(&m, &v)| v - (t[0] + t[1] * t[2].powi(m as i32)))
        .collect();
    let rms_residual = (residuals.iter().map(|r| r * r).sum::<f64>() / n as f64).sqrt();
    let degenerate = flat || t[1].abs() <= 1e-9 * t[0].abs().max(1.0);

    let p_std_error = if degenerate {
        None
    } else {
        let (h, _) = prob.normal_equations(&t);
        h.try_inverse().and_then(|cov| {
            let scale = if weighted {
                1.0
            } else if n > 3 {
                prob.sse(&t) / (n - 3) as f64
            } else {
                return None;
            };
            let v = cov[(2, 2)] * scale;
            (v >= 0.0).then(|| v.sqrt())
        })
    };
    let signal_below_noise = match std_errors {
        Some(s) if !s.is_empty() => {
            let m_min = *distinct.first().expect("nonempty") as i32;
            let noise = s.iter().cloned().fold(0.0, f64::max);
            (t[1] * t[2].powi(m_min)).abs() < 2.0 * noise
        }
        _ => false,
    };
    Ok(FitResult {
        a: t[0],
        b: t[1],
        p: t[2],
        p_std_error,
        rms_residual,
        residuals,
        converged,
        iterations,
        degenerate,
        signal_below_noise,
        weighted,
    })
}

pub fn fit_dataset(data: &DecayDataset) -> Result<FitResult> {
    data.validate()?;
    fit_exponential(&data.m_values, &data.estimates, Some(&data.std_errors))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobustnessBound {
    /// `2ε(α + 1)/(A₀α^M − 2ε)`, or `+∞` when the denominator is not positive.
    pub bound_on_exponent_shift: f64,
    pub a0: f64,
    pub alpha: f64,
    pub m: u32,
    pub epsilon: f64,
    /// `ε < A₀α^M/10`.
    pub valid: bool,
}

/// Bound on `|β − α|` for any exponential within `ε` of `A₀α^m + B₀` at
/// every `m ≥ M`.
pub fn robustness_bound(a0: f64, alpha: f64, m: u32, epsilon: f64) -> Result<RobustnessBound> {
    if a0 <= 0.0 || !(alpha > 0.0 && alpha < 1.0) || m < 1 || epsilon < 0.0 {
        return Err(UrbError::invariant(format!(
            "robustness bound needs A0 > 0, alpha in (0, 1), M >= 1, epsilon >= 0 (got {a0}, {alpha}, {m}, {epsilon})"
        )));
    }
    let scale = a0 * alpha.powi(m as i32);
    let denom = scale - 2.0 * epsilon;
    let bound = if denom > 0.0 {
        2.0 * epsilon * (alpha + 1.0) / denom
    } else {
        f64::INFINITY
    };
    Ok(RobustnessBound {
        bound_on_exponent_shift: bound,
        a0,
        alpha,
        m,
        epsilon,
        valid: denom > 0.0 && epsilon < scale / 10.0,
    })
}

/// Average gate fidelity through `F̄ = (tr ptm + d)/(d² + d)`.
pub fn avg_fidelity(t: &Superoperator) -> Result<f64> {
    if !t.is_cptp()? {
        return Err(UrbError::invariant("average fidelity is defined for channels"));
    }
    let d = t.dim() as f64;
    Ok((t.ptm().trace() + d) / (d * d + d))
}

fn check_dim(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(UrbError::Size(format!("dimension must be at least 2, got {d}")));
    }
    Ok(d as f64)
}

/// `F = (p(d − 1) + 1)/d`.
pub fn exponent_to_fidelity(p: f64, d: usize) -> Result<f64> {
    let d = check_dim(d)?;
    Ok((p * (d - 1.0) + 1.0) / d)
}

/// `p = (dF − 1)/(d − 1)`.
pub fn fidelity_to_exponent(f: f64, d: usize) -> Result<f64> {
    let d = check_dim(d)?;
    Ok((d * f - 1.0) / (d - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelityTranslation {
    /// `E_g F̄(φ*(g)∘φ(g))`.
    pub mean_fidelity: f64,
    /// `(d·F̄ − 1)/(d − 1)`.
    pub exponent: f64,
}

/// Returns the fidelity translation when `E_g φ*(g)∘φ(g)` has the form
/// `p·id + (1 − p)·ℰ_ρ*` with `ρ*` the fixed point of the averaged inverting
/// map; `None` when the scheme does not license it.
pub fn fidelity_translation(s: &UrbScheme) -> Result<Option<FidelityTranslation>> {
    let d = s.dim();
    let n = d * d;
    let mut avg = Superoperator::zero(d)?;
    let mut mean_fidelity = 0.0;
    for g in s.ensemble.elements() {
        let c = g.inverting.compose(&g.implementation)?;
        mean_fidelity += g.probability * avg_fidelity(&c)?;
        avg = avg.add(&c.scale(g.probability))?;
    }
    let l = avg.ptm();
    let p = (1..n).map(|k| l[(k, k)]).sum::<f64>() / (n - 1) as f64;
    for i in 1..n {
        for k in 0..n {
            let expected = if k == i { p } else { 0.0 };
            if (l[(k, i)] - expected).abs() > LICENSE_TOL {
                return Ok(None);
            }
        }
    }
    if 1.0 - p > LICENSE_TOL {
        // the replacement state must be the fixed point
        let rho = fixed_point_state(&s.ensemble)?;
        let coords = rho.base().pauli_coords()?;
        let dd = d as f64;
        for k in 1..n {
            let implied = l[(k, 0)] / (1.0 - p);
            if (implied - dd * coords[k]).abs() > LICENSE_TOL.sqrt() {
                return Ok(None);
            }
        }
    }
    Ok(Some(FidelityTranslation {
        mean_fidelity,
        exponent: fidelity_to_exponent(mean_fidelity, d)?,
    }))
}
