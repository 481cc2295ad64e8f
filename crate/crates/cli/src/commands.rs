use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::json;
use urb_core::fitting::{
    fidelity_translation, fit_dataset, fit_exponential, robustness_bound, FidelityTranslation, FitResult,
    RobustnessBound,
};
use urb_core::io::{load_scheme, parse_decay_csv, write_decay_csv};
use urb_core::perturbation::{spectral_split, verify_corollary, CorollaryReport};
use urb_core::schemes::{
    exact_decay, monte_carlo_decay, scheme_quality, theorem_bound_check, BoundParameters, DecayDataset, SchemeQuality,
    TheoremCheck, UrbScheme,
};
use urb_core::twirling::{haar_twirl, physical_twirl, GammaNorm, GammaReport};
use urb_core::UrbError;

use crate::EXIT_NON_CONVERGENCE;

#[derive(Debug, Clone, Serialize)]
pub struct Sampling {
    pub m_grid: Vec<u32>,
    pub sequences: usize,
    pub shots: u64,
    pub seed: u64,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<UrbScheme> {
    load_scheme(path)
        .map_err(anyhow::Error::from)
        .with_context(|| format!("scheme file {}", path.display()))
}

fn gamma_of(s: &UrbScheme) -> Result<GammaReport> {
    let q = scheme_quality(s, 1)?;
    q.gamma
        .ok_or_else(|| UrbError::Unsupported(format!("gamma needs dimension at most 4, got {}", s.dim())).into())
}

fn opt(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |x| format!("{x:.12}"))
}

fn gamma_text(g: &GammaReport) -> String {
    let rows = [
        ("exact SO norm on channel differences", format!("{:.12}", g.exact_so_v0)),
        ("exact SO norm on channels", format!("{:.12}", g.exact_so_v)),
        ("trace-norm chain d^1.5 * SO", format!("{:.12}", g.tr_chain)),
        ("diamond chain d^2 * SO", format!("{:.12}", g.diamond_chain)),
        ("l2 bound", format!("{:.12}", g.l2_bound)),
        ("induced l1 bound", opt(g.induced_l1_bound)),
        ("convex bound", opt(g.convex_bound)),
        ("trivial bound", format!("{:.12}", g.trivial_bound)),
        ("certified diamond bound", format!("{:.12}", g.certified_diamond)),
        ("two-design", g.is_two_design.to_string()),
    ];
    let mut s = format!("dim = {}\n", g.dim);
    for (k, v) in rows {
        writeln!(s, "{k:<40}{v}").expect("string write");
    }
    s
}

pub fn gamma(scheme: &Path, out: Option<&Path>) -> Result<u8> {
    let s = load(scheme)?;
    let g = gamma_of(&s)?;
    print!("{}", gamma_text(&g));
    if let Some(p) = out {
        emit(Some(p), &serde_json::to_string_pretty(&g)?)?;
    }
    Ok(0)
}

fn check_sampling(cfg: &Sampling) -> Result<()> {
    if cfg.sequences == 0 || cfg.shots == 0 {
        return Err(UrbError::Invariant("--sequences and --shots must be positive".into()).into());
    }
    Ok(())
}

fn run_simulation(s: &UrbScheme, cfg: &Sampling) -> Result<DecayDataset> {
    check_sampling(cfg)?;
    Ok(monte_carlo_decay(s, &cfg.m_grid, cfg.sequences, cfg.shots, cfg.seed)?)
}

pub fn simulate(scheme: &Path, cfg: &Sampling, out: Option<&Path>) -> Result<u8> {
    let s = load(scheme)?;
    let data = run_simulation(&s, cfg)?;
    emit(out, &write_decay_csv(&data)?)?;
    Ok(0)
}

#[derive(Debug, Clone, Serialize)]
pub struct FitRecord {
    pub fit: FitResult,
    /// Largest std error of the table.
    pub epsilon_statistical: f64,
    /// Factoring error of the scheme, when a scheme was given.
    pub epsilon_scheme: Option<f64>,
    pub robustness: Option<RobustnessBound>,
}

fn fit_record(data: &DecayDataset, epsilon_scheme: Option<f64>) -> Result<FitRecord> {
    let fit = fit_dataset(data)?;
    let epsilon_statistical = data.std_errors.iter().cloned().fold(0.0, f64::max);
    let eps = epsilon_statistical + epsilon_scheme.unwrap_or(0.0);
    let m_min = data.m_values.iter().copied().filter(|&m| m > 0).min().unwrap_or(1);
    let robustness = if !fit.degenerate && fit.b > 0.0 && fit.p > 0.0 && fit.p < 1.0 {
        Some(robustness_bound(fit.b, fit.p, m_min, eps)?)
    } else {
        None
    };
    Ok(FitRecord {
        fit,
        epsilon_statistical,
        epsilon_scheme,
        robustness,
    })
}

fn fit_text(r: &FitRecord) -> String {
    let mut s = r.fit.to_text();
    match &r.robustness {
        Some(b) => {
            let _ = writeln!(
                s,
                "robustness_epsilon = {:.6e}\nrobustness_bound = {:.6e}\nrobustness_valid = {}",
                b.epsilon, b.bound_on_exponent_shift, b.valid
            );
        }
        None => s.push_str("robustness_bound = n/a\n"),
    }
    s
}

pub fn fit(data: &Path, scheme: Option<&Path>, m_cutoff: u32, out: Option<&Path>) -> Result<u8> {
    let text = std::fs::read_to_string(data).with_context(|| format!("reading {}", data.display()))?;
    let dataset = parse_decay_csv(&text)
        .map_err(anyhow::Error::from)
        .with_context(|| format!("decay table {}", data.display()))?;
    let epsilon_scheme = match scheme {
        Some(p) => Some(scheme_quality(&load(p)?, m_cutoff)?.epsilon),
        None => None,
    };
    let record = fit_record(&dataset, epsilon_scheme)?;
    print!("{}", fit_text(&record));
    if let Some(p) = out {
        emit(Some(p), &serde_json::to_string_pretty(&record)?)?;
    }
    Ok(if record.fit.converged { 0 } else { EXIT_NON_CONVERGENCE })
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitSummary {
    pub p: f64,
    pub p_imag: f64,
    pub lambda_unit_re: f64,
    pub lambda_unit_im: f64,
    pub remainder_norm: f64,
    pub kappa_estimate: f64,
    pub reconstruction_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verification {
    pub params: BoundParameters,
    pub split: Option<SplitSummary>,
    /// Why the split was refused, when it was.
    pub split_error: Option<String>,
    pub corollary: Option<CorollaryReport>,
    /// Single exponential fitted to the exact decay.
    pub exact_fit: FitResult,
    pub theorem: TheoremCheck,
    pub fidelity: Option<FidelityTranslation>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.theorem.certified && self.corollary.as_ref().is_some_and(|c| c.all_ok())
    }
}

fn run_verification(s: &UrbScheme, q: &SchemeQuality, norm: GammaNorm, m_grid: &[u32]) -> Result<Verification> {
    let g = q
        .gamma
        .as_ref()
        .ok_or_else(|| UrbError::Unsupported(format!("verification needs dimension at most 4, got {}", s.dim())))?;
    let params = BoundParameters::new(norm, g, q.delta);
    let lam = physical_twirl(&s.ensemble)?;
    let (split, split_error, corollary) = match spectral_split(&lam, &haar_twirl(s.dim())?, Some(params.delta_eff)) {
        Ok(sp) => {
            let cor = verify_corollary(&sp, params.gamma, params.delta_eff, norm);
            let summary = SplitSummary {
                p: sp.p,
                p_imag: sp.p_imag,
                lambda_unit_re: sp.lambda_unit.re,
                lambda_unit_im: sp.lambda_unit.im,
                remainder_norm: sp.remainder_norm,
                kappa_estimate: sp.kappa_estimate,
                reconstruction_error: sp.reconstruction_error,
            };
            (Some(summary), None, Some(cor))
        }
        Err(e @ (UrbError::Ambiguous { .. } | UrbError::Hypothesis(_))) => (None, Some(e.to_string()), None),
        Err(e) => return Err(e.into()),
    };
    let exact = exact_decay(s, m_grid)?;
    let exact_fit = fit_exponential(m_grid, &exact, None)?;
    let theorem = theorem_bound_check(s, q, exact_fit.model(), m_grid, norm)?;
    Ok(Verification {
        params,
        split,
        split_error,
        corollary,
        exact_fit,
        theorem,
        fidelity: fidelity_translation(s)?,
    })
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn verification_text(v: &Verification) -> String {
    let p = &v.params;
    let mut rows: Vec<(String, bool, String)> = Vec::new();
    match (&v.split, &v.split_error) {
        (Some(sp), _) => rows.push((
            "spectral split".into(),
            true,
            format!(
                "p = {:.12}, remainder = {:.6}, kappa = {:.4}",
                sp.p, sp.remainder_norm, sp.kappa_estimate
            ),
        )),
        (None, Some(e)) => rows.push(("spectral split".into(), false, e.clone())),
        _ => {}
    }
    rows.push((
        "hypothesis delta <= (1 - gamma)/11".into(),
        p.hypothesis_ok(),
        format!("gamma = {:.6}, delta = {:.3e}", p.gamma, p.delta_eff),
    ));
    if let Some(c) = &v.corollary {
        rows.push(("eigenvalues within 2 delta of 1".into(), c.eig_close, String::new()));
        rows.push((
            "remainder norm <= gamma + 6 delta".into(),
            c.remainder_ok,
            String::new(),
        ));
        rows.push(("kappa <= 16".into(), c.kappa_ok, String::new()));
    }
    let (lo, hi) = p.p_window();
    rows.push((
        "fitted p in [1 - 2 delta, 1]".into(),
        v.theorem.p_in_window,
        format!("p = {:.12} in [{lo:.6}, {hi}]", v.theorem.p),
    ));
    let worst = v
        .theorem
        .rows
        .iter()
        .max_by(|a, b| (a.residual / a.bound).total_cmp(&(b.residual / b.bound)));
    rows.push((
        "residuals <= eps + tail(m)".into(),
        v.theorem.residuals_ok,
        worst.map_or(String::new(), |r| {
            format!("worst m = {}: {:.3e} vs {:.3e}", r.m, r.residual, r.bound)
        }),
    ));
    rows.push((
        "single exponential certified".into(),
        v.theorem.certified,
        String::new(),
    ));

    let mut s = format!("norm = {}, epsilon = {:.3e}\n", p.norm, v.theorem.epsilon);
    for (name, ok, detail) in rows {
        let _ = writeln!(s, "{:<4}  {name:<38}{detail}", mark(ok));
    }
    match &v.fidelity {
        Some(f) => {
            let _ = writeln!(
                s,
                "average fidelity {:.12} -> exponent {:.12}",
                f.mean_fidelity, f.exponent
            );
        }
        None => s.push_str("average fidelity translation not licensed for this noise\n"),
    }
    s
}

pub fn verify(scheme: &Path, norm: GammaNorm, m_grid: &[u32], m_cutoff: u32, out: Option<&Path>) -> Result<u8> {
    let s = load(scheme)?;
    let q = scheme_quality(&s, m_cutoff)?;
    let v = run_verification(&s, &q, norm, m_grid)?;
    print!("{}", verification_text(&v));
    if let Some(p) = out {
        emit(
            Some(p),
            &serde_json::to_string_pretty(&json!({"quality": q, "verification": v}))?,
        )?;
    }
    Ok(0)
}

pub fn report(scheme: &Path, cfg: &Sampling, norm: GammaNorm, m_cutoff: u32, out: Option<&Path>) -> Result<u8> {
    let s = load(scheme)?;
    let q = scheme_quality(&s, m_cutoff)?;
    let data = run_simulation(&s, cfg)?;
    let record = fit_record(&data, Some(q.epsilon))?;
    let verification = if q.gamma.is_some() {
        let grid: Vec<u32> = (1..=50).collect();
        Some(run_verification(&s, &q, norm, &grid)?)
    } else {
        None
    };
    let doc = json!({
        "tool": "urb",
        "version": env!("CARGO_PKG_VERSION"),
        "config": {
            "scheme": scheme.display().to_string(),
            "m_grid": cfg.m_grid,
            "sequences": cfg.sequences,
            "shots": cfg.shots,
            "seed": cfg.seed,
            "norm": norm,
            "m_cutoff": m_cutoff,
        },
        "scheme": {
            "dim": s.dim(),
            "gates": s.ensemble.len(),
            "povm": s.povm.name(),
            "prefactor": s.prefactor(),
        },
        "quality": q,
        "data": data,
        "reported_values": data.estimates.iter().map(|&p| s.reported_value(p)).collect::<Vec<_>>(),
        "fit": record,
        "certified": verification.as_ref().map(Verification::passed),
        "verification": verification,
    });
    emit(out, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    Ok(if record.fit.converged { 0 } else { EXIT_NON_CONVERGENCE })
}
