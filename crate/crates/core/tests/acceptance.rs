use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use urb_core::fitting::*;
use urb_core::gates::{clifford_group, t_gate};
use urb_core::linalg::{max_abs_diff_r, CMat, RMat};
use urb_core::perturbation::{spectral_split, verify_corollary};
use urb_core::schemes::*;
use urb_core::superops::random::{
    random_channel, random_hermitian, random_ket, random_kraus, random_pure_state, random_superoperator, random_unitary,
};
use urb_core::superops::{
    diamond_norm, diamond_norm_sdp, induced_frobenius_norm, induced_trace_norm_with, so_norm, HermitianOperator,
    PovmElement, Superoperator,
};
use urb_core::twirling::*;
use urb_core::UrbError;

/// Runs one criterion, prints its verdict line outside the test harness'
/// output capture and fails the test on a FAIL.
fn criterion(id: u32, title: &str, budget: Duration, body: impl FnOnce() -> (bool, String)) {
    let start = Instant::now();
    let (ok, detail) = body();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let verdict = if ok && in_time { "PASS" } else { "FAIL" };
    let timing = format!("{:.2}s of {}s", elapsed.as_secs_f64(), budget.as_secs());
    let line = format!("{verdict} criterion {id:>2}: {title} [{timing}] {detail}\n");
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(ok, "criterion {id} failed: {detail}");
    assert!(in_time, "criterion {id} exceeded its runtime budget: {timing}");
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn grid(lo: u32, hi: u32) -> Vec<u32> {
    (lo..=hi).collect()
}

#[test]
fn c01_exact_twirl_certification() {
    criterion(1, "exact twirl of the Clifford group", secs(1), || {
        let e = GateEnsemble::uniform_clifford(1).unwrap();
        let so = gamma_exact_so(&e, &SubspaceProjector::differences(2).unwrap()).unwrap();
        let dist = max_abs_diff_r(ideal_twirl(&e).unwrap().matrix(), haar_twirl(2).unwrap().matrix());
        (
            so <= 1e-10 && dist <= 1e-10 && e.len() == 24,
            format!("gamma_so = {so:.2e}, max |Lambda - Lambda_haar| = {dist:.2e}"),
        )
    });
}

#[test]
fn c02_pauli_induced_l1_constant() {
    criterion(2, "induced l1 bound of the Pauli ensemble", secs(5), || {
        let mut ok = true;
        let mut parts = Vec::new();
        for d in [2usize, 4] {
            let df = d as f64;
            let expected = 2.0 * (df * df - 2.0) / (df * df - 1.0);
            let b = beta_tensor(&GateEnsemble::uniform_pauli(d).unwrap()).unwrap();
            let v = gamma_bound_induced_l1(&b).unwrap();
            ok &= (v - expected).abs() <= 1e-12;
            parts.push(format!("d={d}: {v:.15} (expected {expected:.15})"));
        }
        (ok, parts.join(", "))
    });
}

#[test]
fn c03_diamond_norm_cross_validation() {
    criterion(3, "SDP diamond norm against closed forms", secs(30), || {
        let pairs = [
            (0.9, 0.95),
            (0.99, 0.9),
            (0.5, 0.7),
            (1.0, 0.8),
            (0.2, 0.6),
            (0.95, 0.951),
            (0.0, 1.0),
            (0.3, 0.1),
            (0.75, 0.25),
            (0.999, 0.99),
        ];
        let mut worst_pair = 0.0f64;
        for (q1, q2) in pairs {
            let diff = Superoperator::depolarizing(2, q1)
                .unwrap()
                .sub(&Superoperator::depolarizing(2, q2).unwrap())
                .unwrap();
            let n = diamond_norm_sdp(&diff).unwrap();
            let closed = 1.5 * (q1 - q2).abs();
            worst_pair = worst_pair.max((n.lower - closed).abs()).max((n.upper - closed).abs());
        }
        let mut r = rng(303);
        let mut worst_channel = 0.0f64;
        let mut count = 0;
        for (d, n) in [(2usize, 12), (4, 3)] {
            for k in 0..n {
                let c = random_channel(d, 1 + k % 3, &mut r).unwrap();
                let v = diamond_norm_sdp(&c).unwrap();
                worst_channel = worst_channel.max((v.lower - 1.0).abs()).max((v.upper - 1.0).abs());
                count += 1;
            }
        }
        (
            worst_pair <= 1e-5 && worst_channel <= 1e-5,
            format!("10 depolarizing pairs: max error {worst_pair:.2e}; {count} random channels: max |norm - 1| {worst_channel:.2e}"),
        )
    });
}

/// Largest singular value and its right singular vector.
fn top_singular(m: &RMat) -> (f64, DVector<f64>) {
    let svd = m.clone().svd(false, true);
    let (idx, top) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, -1.0), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    (top, svd.v_t.expect("requested").row(idx).transpose())
}

/// Certified lower bound on the induced trace norm: the multi-start value or
/// the ratio at the top right singular vector of the ptm, whichever is larger.
fn trace_lower(c: &Superoperator) -> f64 {
    let (_, v) = top_singular(c.ptm());
    let x = HermitianOperator::from_pauli_coords(c.dim(), &v).unwrap();
    let witness = c.apply(&x).unwrap().trace_norm() / x.trace_norm();
    induced_trace_norm_with(c, 16).value.max(witness)
}

fn random_ensemble(d: usize, size: usize, r: &mut ChaCha8Rng) -> GateEnsemble {
    let us: Vec<CMat> = (0..size).map(|_| random_unitary(d, r)).collect();
    let mut w: Vec<f64> = (0..size).map(|_| r.random_range(0.1..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w[size - 1] = 1.0 - w[..size - 1].iter().sum::<f64>();
    GateEnsemble::ideal(&us, &w).unwrap()
}

#[test]
fn c04_norm_inequality_suite() {
    criterion(4, "norm inequalities on random instances", secs(60), || {
        const N: usize = 200;
        const SLACK: f64 = 1e-8;
        let mut r = rng(404);
        let mut failures: Vec<String> = Vec::new();
        let mut count = [0usize; 5];
        for d in [2usize, 4] {
            let df = d as f64;
            for i in 0..N {
                let h = random_hermitian(d, &mut r).unwrap();
                let (inf, fro, one) = (h.spectral_norm(), h.frobenius_norm(), h.trace_norm());
                if !(inf <= fro + SLACK && fro <= one + SLACK && one <= df.sqrt() * fro + SLACK) {
                    failures.push(format!("hermitian d={d} #{i}"));
                }
                count[0] += 1;

                // channels get the exact diamond norm; every third instance is a
                // channel difference, which needs the SDP
                let c = if d == 2 && i % 3 == 0 {
                    random_channel(d, 2, &mut r)
                        .unwrap()
                        .sub(&random_channel(d, 1, &mut r).unwrap())
                        .unwrap()
                } else {
                    random_channel(d, 1 + i % 3, &mut r).unwrap()
                };
                let two = induced_frobenius_norm(&c);
                let tr = trace_lower(&c);
                let dia = diamond_norm(&c).unwrap();
                if !(tr <= dia.upper + SLACK
                    && two / df.sqrt() <= tr + SLACK
                    && tr <= df.sqrt() * two + SLACK
                    && two / df <= dia.upper + SLACK
                    && dia.lower <= df * two + SLACK)
                {
                    failures.push(format!("channel_dim d={d} #{i}"));
                }
                count[1] += 1;

                let t = random_superoperator(d, &mut r).unwrap();
                if so_norm(&t) > df * trace_lower(&t) + SLACK {
                    failures.push(format!("SO <= d tr, d={d} #{i}"));
                }
                count[2] += 1;

                let u = random_superoperator(d, &mut r).unwrap();
                let tu = t.compose(&u).unwrap();
                if so_norm(&tu) > induced_frobenius_norm(&t) * so_norm(&u) + SLACK {
                    failures.push(format!("SO_2 submultiplicativity d={d} #{i}"));
                }
                count[3] += 1;

                let e = random_ensemble(d, 3, &mut r);
                let diff = ideal_twirl(&e).unwrap().sub(&haar_twirl(d).unwrap()).unwrap();
                let (top, v) = top_singular(diff.matrix());
                let w = Superoperator::from_ptm(RMat::from_column_slice(d * d, d * d, v.as_slice())).unwrap();
                // ‖W‖_tr ≤ √d‖W‖₂, so this ratio lower-bounds |||Λ|||_tr
                let lower = trace_lower(&diff.apply(&w).unwrap()) / (df.sqrt() * induced_frobenius_norm(&w));
                let probe = random_superoperator(d, &mut r).unwrap();
                let probe_ratio = trace_lower(&diff.apply(&probe).unwrap()) / trace_lower(&probe);
                if !(top <= df.powf(1.5) * lower + SLACK && probe_ratio <= df.powf(1.5) * top + SLACK) {
                    failures.push(format!("twirl sandwich d={d} #{i}"));
                }
                count[4] += 1;
            }
        }
        (
            failures.is_empty(),
            format!(
                "instances: hermitian {}, channel_dim {}, SO_tr {}, SO_2 {}, twirl {}; failures: {:?}",
                count[0], count[1], count[2], count[3], count[4], failures
            ),
        )
    });
}

/// The three ensembles used for the single-exponential checks.
fn theorem_schemes() -> Vec<(&'static str, UrbScheme)> {
    let group = clifford_group(1).unwrap();
    let design = build_clifford_rb(2, &NoiseSpec::depolarizing(0.98)).unwrap();

    let mut us = group.clone();
    us.push(t_gate());
    let mut probs = vec![0.8 / 24.0; 24];
    probs.push(0.2);
    let mixture = build_scheme(&us, &probs, &NoiseSpec::depolarizing(0.99)).unwrap();

    // weights in [0.75, 1.25] times uniform
    let mut r = rng(505);
    let weights: Vec<f64> = (0..24).map(|_| r.random_range(0.75..1.25)).collect();
    let nonuniform = build_nonuniform_rb(&weights, &NoiseSpec::depolarizing(0.99)).unwrap();
    vec![
        ("2-design, dep 0.98", design),
        ("0.8 Clifford / 0.2 T, dep 0.99", mixture),
        ("non-uniform Clifford, dep 0.99", nonuniform),
    ]
}

#[test]
fn c05_single_exponential_bound() {
    criterion(5, "single-exponential bound on three ensembles", secs(120), || {
        let ms = grid(1, 50);
        let mut ok = true;
        let mut parts = Vec::new();
        for (name, s) in theorem_schemes() {
            let q = scheme_quality(&s, DEFAULT_M_CUTOFF).unwrap();
            let fit = fit_exponential(&ms, &exact_decay(&s, &ms).unwrap(), None).unwrap();
            let check = theorem_bound_check(&s, &q, fit.model(), &ms, GammaNorm::DiamondBound).unwrap();
            let worst = check
                .rows
                .iter()
                .map(|r| r.residual - r.bound)
                .fold(f64::NEG_INFINITY, f64::max);
            let min_weight = s
                .ensemble
                .elements()
                .iter()
                .map(|g| g.probability)
                .fold(f64::INFINITY, f64::min);
            ok &= check.hypothesis_ok && check.residuals_ok && check.p_in_window && check.certified;
            ok &= !name.starts_with("non-uniform") || min_weight > 0.5 / 24.0;
            parts.push(format!(
                "[{name}: gamma {:.4}, delta {:.4}, eps {:.1e}, p {:.6}, max(residual - bound) {:.2e}, certified {}]",
                check.params.gamma, q.delta, q.epsilon, fit.p, worst, check.certified
            ));
        }
        (ok, parts.join(" "))
    });
}

#[test]
fn c06_perturbation_corollary() {
    criterion(6, "spectral split and perturbation corollary", secs(60), || {
        let mut ok = true;
        let mut parts = Vec::new();
        for (name, s) in theorem_schemes() {
            let q = scheme_quality(&s, DEFAULT_M_CUTOFF).unwrap();
            let gamma = q.gamma.as_ref().unwrap().certified_diamond;
            let lam = physical_twirl(&s.ensemble).unwrap();
            let split = spectral_split(&lam, &haar_twirl(2).unwrap(), Some(q.delta)).unwrap();
            let report = verify_corollary(&split, gamma, q.delta, GammaNorm::DiamondBound);
            ok &= report.all_ok();
            parts.push(format!(
                "[{name}: lambda {:.6}, p {:.6}, |remainder| {:.4} <= {:.4}, kappa {:.3}]",
                split.lambda_unit.re,
                split.p,
                split.remainder_norm,
                gamma + 6.0 * q.delta,
                split.kappa_estimate
            ));
        }
        (ok, parts.join(" "))
    });
}

/// Random factored scheme: random unitaries dressed with random Kraus noise
/// on both the gate and the inverting map.
fn random_factored_scheme(d: usize, size: usize, r: &mut ChaCha8Rng) -> UrbScheme {
    let raw: Vec<f64> = (0..size).map(|_| r.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let elements: Vec<GateElement> = raw
        .iter()
        .map(|p| {
            let u = random_unitary(d, r);
            let w = Superoperator::unitary(&u).unwrap();
            let n = Superoperator::from_kraus(&random_kraus(d, 2, r).unwrap()).unwrap();
            let ni = Superoperator::from_kraus(&random_kraus(d, 2, r).unwrap()).unwrap();
            GateElement::with_maps(p / total, u, n.compose(&w).unwrap(), w.adjoint().compose(&ni).unwrap()).unwrap()
        })
        .collect();
    let inter = Superoperator::from_kraus(&random_kraus(d, 2, r).unwrap()).unwrap();
    let m0 = PovmElement::from_matrix(random_pure_state(d, r).unwrap().entries().clone()).unwrap();
    UrbScheme::new(
        GateEnsemble::new(elements).unwrap(),
        m0,
        inter,
        random_pure_state(d, r).unwrap(),
        PovmRule::Factored,
    )
    .unwrap()
}

#[test]
fn c07_oracle_equivalence() {
    criterion(7, "enumerated and transfer-matrix decays agree", secs(120), || {
        let mut r = rng(707);
        let mut worst = 0.0f64;
        let mut ok = true;
        for k in 0..20 {
            let d = if k % 5 == 4 { 4 } else { 2 };
            let size = 2 + k % 5;
            let s = random_factored_scheme(d, size, &mut r);
            let eps = scheme_quality(&s, DEFAULT_M_CUTOFF).unwrap().epsilon;
            let ms = grid(0, 4);
            let exact = exact_decay(&s, &ms).unwrap();
            for (&m, e) in ms.iter().zip(exact) {
                let gap = (enumerate_decay(&s, m).unwrap() - e).abs();
                worst = worst.max(gap);
                ok &= gap <= eps + 1e-10;
            }
        }
        (ok, format!("20 schemes, |S| in 2..=6, m in 0..=4: max gap {worst:.2e}"))
    });
}

#[test]
fn c08_monte_carlo_consistency() {
    criterion(8, "Monte Carlo fits over 20 seeds", secs(180), || {
        let s = build_clifford_rb(2, &NoiseSpec::depolarizing(0.9)).unwrap();
        let ms = [1, 2, 4, 8, 16, 32];
        let mut inside = 0;
        let mut worst_z = 0.0f64;
        for seed in 0..20 {
            let data = monte_carlo_decay(&s, &ms, 300, 100, seed).unwrap();
            let f = fit_dataset(&data).unwrap();
            let se = f.p_std_error.unwrap_or(f64::INFINITY);
            let z = (f.p - 0.9).abs() / se;
            worst_z = worst_z.max(z);
            if z <= 4.0 {
                inside += 1;
            }
        }
        (
            inside >= 18,
            format!("{inside}/20 seeds within 4 std errors (largest |z| = {worst_z:.2})"),
        )
    });
}

/// Largest `|C₁(m) − C₀(m)|` over `m ≥ M`, with the limit `|B₁ − B₀|`.
fn sup_distance(c0: ExponentialModel, c1: ExponentialModel, big_m: u32) -> f64 {
    let far = (big_m..big_m + 5000)
        .map(|m| (c1.eval(m) - c0.eval(m)).abs())
        .fold(0.0, f64::max);
    far.max((c1.a - c0.a).abs())
}

#[test]
fn c09_robustness_lemma() {
    criterion(9, "robustness of the fitted exponent", secs(60), || {
        let mut r = rng(909);
        let mut worst_ratio = 0.0f64;
        let mut sup_checked = 0;
        let mut ok = true;
        for k in 0..100 {
            let a0: f64 = r.random_range(0.2..0.8);
            let alpha: f64 = r.random_range(0.5..0.97);
            let b0: f64 = r.random_range(0.0..0.3);
            let big_m: u32 = r.random_range(1..5);
            let eps = r.random_range(0.01..0.99) * a0 * alpha.powi(big_m as i32) / 10.0;
            let freq: f64 = r.random_range(0.3..2.5);
            let bound = robustness_bound(a0, alpha, big_m, eps).unwrap();
            ok &= bound.valid;
            let ms = grid(big_m, big_m + 40);
            let y: Vec<f64> = ms
                .iter()
                .map(|&m| {
                    let wiggle = if k % 2 == 0 {
                        if m % 2 == 0 {
                            1.0
                        } else {
                            -1.0
                        }
                    } else {
                        (freq * m as f64).cos()
                    };
                    a0 * alpha.powi(m as i32) + b0 + eps * wiggle
                })
                .collect();
            let f = fit_exponential(&ms, &y, None).unwrap();
            let shift = (f.p - alpha).abs();
            worst_ratio = worst_ratio.max(shift / bound.bound_on_exponent_shift);
            ok &= shift <= bound.bound_on_exponent_shift;

            // the lemma itself, with ε the actual sup distance of the refit curve
            let c0 = ExponentialModel { a: b0, b: a0, p: alpha };
            let sup = sup_distance(c0, f.model(), big_m);
            if 2.0 * sup < a0 * alpha.powi(big_m as i32) {
                let exact = robustness_bound(a0, alpha, big_m, sup).unwrap();
                ok &= shift <= exact.bound_on_exponent_shift + 1e-12;
                sup_checked += 1;
            }
        }
        (
            ok && sup_checked > 0,
            format!("100 configurations: max shift/bound {worst_ratio:.3}; sup-distance form checked on {sup_checked}"),
        )
    });
}

/// Haar average of `⟨ψ|C(ψ)|ψ⟩` over random pure states, with its standard error.
fn haar_fidelity(c: &Superoperator, samples: usize, seed: u64) -> (f64, f64) {
    let d = c.dim();
    let mut r = rng(seed);
    let vals: Vec<f64> = (0..samples)
        .map(|_| {
            let psi = random_ket(d, &mut r);
            let out = c.apply_matrix(&(&psi * psi.adjoint())).unwrap();
            (psi.adjoint() * out * &psi)[(0, 0)].re
        })
        .collect();
    let n = samples as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn c10_fidelity_translation() {
    criterion(10, "average fidelity and the decay exponent", secs(120), || {
        let dep = Superoperator::depolarizing(2, 0.9).unwrap();
        let f = avg_fidelity(&dep).unwrap();
        let (mc, se) = haar_fidelity(&dep, 200_000, 10);
        // every pure state gives exactly 0.95 here, so the spread is round-off
        let first = (f - 0.95).abs() < 1e-12 && (mc - f).abs() <= 3.0 * se.max(1e-12);
        let noisy = random_channel(2, 2, &mut rng(11)).unwrap();
        let (f_noisy, (mc_noisy, se_noisy)) = (avg_fidelity(&noisy).unwrap(), haar_fidelity(&noisy, 200_000, 12));
        let first = first && (mc_noisy - f_noisy).abs() <= 3.0 * se_noisy;

        let (nl, nr) = (
            NoiseModel::BitFlip { p: 0.03 },
            NoiseModel::AmplitudeDamping { gamma: 0.05 },
        );
        let s = build_clifford_rb(2, &NoiseSpec::uniform(nr.clone()).with_inverting(nl.clone())).unwrap();
        let ms = grid(1, 30);
        let fit = fit_exponential(&ms, &exact_decay(&s, &ms).unwrap(), None).unwrap();
        let composite = nl.channel(2).unwrap().compose(&nr.channel(2).unwrap()).unwrap();
        let target = avg_fidelity(&composite).unwrap();
        let mapped = exponent_to_fidelity(fit.p, 2).unwrap();
        let second = (mapped - target).abs() <= 1e-8;
        (
            first && second,
            format!(
                "F(dep 0.9) = {f:.12}, Haar MC {mc:.6} +- {se:.1e}; random channel {f_noisy:.6} vs Haar MC {mc_noisy:.6} +- {se_noisy:.1e}; fitted exponent maps to {mapped:.12} vs F(N_L N_R) = {target:.12}"
            ),
        )
    });
}

#[test]
fn c11_pauli_negative_control() {
    criterion(11, "Pauli ensemble is refused", secs(10), || {
        let s = build_pauli_ensemble(2, &NoiseSpec::depolarizing(0.99)).unwrap();
        let q = scheme_quality(&s, DEFAULT_M_CUTOFF).unwrap();
        let g = q.gamma.clone().unwrap();
        let mut bounds = vec![
            ("tr chain", g.tr_chain),
            ("diamond chain", g.diamond_chain),
            ("l2", g.l2_bound),
            ("trivial", g.trivial_bound),
            ("certified diamond", g.certified_diamond),
        ];
        if let Some(v) = g.induced_l1_bound {
            bounds.push(("induced l1", v));
        }
        if let Some(v) = g.convex_bound {
            bounds.push(("convex", v));
        }
        let bounds_exceed = bounds.iter().all(|(_, v)| *v > 1.0) && g.induced_l1_bound.is_some();
        // the exact SO value is the quantity the bounds estimate, and it already reaches 1
        let exact_reaches_one = g.exact_so_v0 >= 1.0 - 1e-12;

        let ms = grid(1, 50);
        let fit = fit_exponential(&ms, &exact_decay(&s, &ms).unwrap(), None).unwrap();
        let refused = [GammaNorm::So, GammaNorm::TrEstimate, GammaNorm::DiamondBound]
            .iter()
            .all(|&norm| {
                let c = theorem_bound_check(&s, &q, fit.model(), &ms, norm).unwrap();
                !c.hypothesis_ok && !c.certified
            });
        let split = spectral_split(
            &physical_twirl(&s.ensemble).unwrap(),
            &haar_twirl(2).unwrap(),
            Some(q.delta),
        );
        let split_refused = matches!(split, Err(UrbError::Ambiguous { .. }) | Err(UrbError::Hypothesis(_)));
        let listed: Vec<String> = bounds.iter().map(|(n, v)| format!("{n} {v:.4}")).collect();
        (
            bounds_exceed && exact_reaches_one && refused && split_refused,
            format!(
                "bounds: {}; exact SO {:.6}; certification refused: {refused}; spectral split refused: {split_refused}",
                listed.join(", "),
                g.exact_so_v0
            ),
        )
    });
}
