use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, UrbError};
use crate::linalg::{unvec_cols, vec_cols, RMat};
use crate::schemes::scheme::{PovmRule, UrbScheme};
use crate::twirling::physical_twirl;
use crate::twirling::twirl::MAX_TWIRL_DIM;

/// Largest number of sequences `enumerate_decay` will visit.
pub const ENUMERATION_BUDGET: f64 = 1e6;
/// Allowed excursion of a sequence probability outside `[0, 1]` before clipping.
pub const PROBABILITY_SLACK: f64 = 1e-9;

/// Estimated decay curve from a sampled experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayDataset {
    pub m_values: Vec<u32>,
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub sequences: usize,
    pub shots: u64,
    pub seed: u64,
}

impl DecayDataset {
    pub fn len(&self) -> usize {
        self.m_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m_values.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.m_values.len();
        if self.estimates.len() != n || self.std_errors.len() != n {
            return Err(UrbError::invariant("dataset columns have different lengths"));
        }
        if self.m_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(UrbError::invariant("m values must be strictly increasing"));
        }
        if self.estimates.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(UrbError::invariant("estimate outside [0, 1]"));
        }
        if self.std_errors.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(UrbError::invariant("negative or non-finite std error"));
        }
        Ok(())
    }
}

fn check_factored(s: &UrbScheme) -> Result<()> {
    if matches!(s.povm, PovmRule::Custom(_)) {
        return Err(UrbError::Unsupported(
            "exact_decay needs a factored POVM rule; use enumerate_decay for general rules".into(),
        ));
    }
    Ok(())
}

/// `Λ_R^m(ℐ)` for every `m` in `m_list` (any order), using the twirl matrix
/// when it fits and the direct superoperator sum otherwise.
pub fn factored_decay(s: &UrbScheme, m_list: &[u32]) -> Result<Vec<RMat>> {
    let d = s.dim();
    let n = d * d;
    let max_m = m_list.iter().copied().max().unwrap_or(0);
    let mut wanted: Vec<Option<RMat>> = vec![None; m_list.len()];
    let record = |m: u32, cur: &RMat, wanted: &mut Vec<Option<RMat>>| {
        for (slot, &mm) in wanted.iter_mut().zip(m_list) {
            if mm == m {
                *slot = Some(cur.clone());
            }
        }
    };
    let mut cur = s.intermediate.ptm().clone();
    record(0, &cur, &mut wanted);
    if d <= MAX_TWIRL_DIM {
        let lam = physical_twirl(&s.ensemble)?;
        let mut v = vec_cols(&cur);
        for m in 1..=max_m {
            v = lam.matrix() * v;
            cur = unvec_cols(&v, n);
            record(m, &cur, &mut wanted);
        }
    } else {
        for m in 1..=max_m {
            let next = s
                .ensemble
                .elements()
                .par_iter()
                .map(|g| (g.inverting.ptm() * &cur * g.implementation.ptm()) * g.probability)
                .reduce(|| RMat::zeros(n, n), |a, b| a + b);
            cur = next;
            record(m, &cur, &mut wanted);
        }
    }
    Ok(wanted.into_iter().map(|x| x.expect("every m recorded")).collect())
}

/// `tr[M₀·Λ_R^m(ℐ)(ρ₀)]` for each `m`, as a success probability.
pub fn exact_decay(s: &UrbScheme, m_list: &[u32]) -> Result<Vec<f64>> {
    check_factored(s)?;
    let d = s.dim() as f64;
    let m0 = s.coords(s.m0.base());
    let rho = s.coords(s.rho0.base());
    Ok(factored_decay(s, m_list)?
        .iter()
        .map(|t| d * m0.dot(&(t * &rho)))
        .collect())
}

pub(crate) fn check_budget_ok(len: usize, m: u32) -> bool {
    (len as f64).powi(m as i32) <= ENUMERATION_BUDGET
}

fn check_budget(len: usize, m: u32) -> Result<()> {
    let needed = (len as f64).powi(m as i32);
    if needed > ENUMERATION_BUDGET {
        return Err(UrbError::BudgetExceeded {
            needed,
            budget: ENUMERATION_BUDGET,
        });
    }
    Ok(())
}

/// Visits every length-`m` sequence with its probability weight. `leaf`
/// receives the gate string and the propagated state coordinates; results are
/// summed per first gate in parallel, then in order.
pub(crate) fn enumerate_sequences<F>(s: &UrbScheme, m: u32, leaf: F) -> Result<f64>
where
    F: Fn(&[usize], &DVector<f64>) -> Result<f64> + Sync,
{
    check_budget(s.ensemble.len(), m)?;
    let rho = s.coords(s.rho0.base());
    if m == 0 {
        return leaf(&[], &rho);
    }
    let elements = s.ensemble.elements();
    let partial: Vec<Result<f64>> = (0..elements.len())
        .into_par_iter()
        .map(|first| {
            let mut seq = vec![first];
            let state = elements[first].implementation.ptm() * &rho;
            let mut acc = 0.0;
            walk(
                s,
                m as usize,
                &mut seq,
                &state,
                elements[first].probability,
                &leaf,
                &mut acc,
            )?;
            Ok(acc)
        })
        .collect();
    let mut total = 0.0;
    for p in partial {
        total += p?;
    }
    Ok(total)
}

fn walk<F>(
    s: &UrbScheme,
    m: usize,
    seq: &mut Vec<usize>,
    state: &DVector<f64>,
    weight: f64,
    leaf: &F,
    acc: &mut f64,
) -> Result<()>
where
    F: Fn(&[usize], &DVector<f64>) -> Result<f64>,
{
    if seq.len() == m {
        *acc += weight * leaf(seq, state)?;
        return Ok(());
    }
    for (idx, g) in s.ensemble.elements().iter().enumerate() {
        let next = g.implementation.ptm() * state;
        seq.push(idx);
        walk(s, m, seq, &next, weight * g.probability, leaf, acc)?;
        seq.pop();
    }
    Ok(())
}

/// Exact `p_R(m)` by enumerating every sequence under the scheme's own rule.
pub fn enumerate_decay(s: &UrbScheme, m: u32) -> Result<f64> {
    let d = s.dim() as f64;
    enumerate_sequences(s, m, |seq, state| Ok(d * s.povm_coords(seq)?.dot(state)))
}

fn thread_pool() -> Result<Option<rayon::ThreadPool>> {
    match std::env::var("URB_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| UrbError::invariant(format!("URB_THREADS must be a positive integer, got '{v}'")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| UrbError::invariant(format!("thread pool: {e}")))?;
            Ok(Some(pool))
        }
        Err(_) => Ok(None),
    }
}

/// Runs `f` on the pool capped by `URB_THREADS`, or on the global pool.
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    Ok(match thread_pool()? {
        Some(pool) => pool.install(f),
        None => f(),
    })
}

/// Random stream for sequence `seq` at length `m`.
pub fn sequence_rng(seed: u64, m: u32, seq: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((m as u64) << 32) | seq as u64);
    rng
}

fn sample_gate(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Simulated experiment: `sequences` random sequences per length, each
/// measured with `shots` Bernoulli trials. Deterministic in `seed` regardless
/// of thread count.
pub fn monte_carlo_decay(
    s: &UrbScheme,
    m_list: &[u32],
    sequences: usize,
    shots: u64,
    seed: u64,
) -> Result<DecayDataset> {
    if sequences == 0 || shots == 0 {
        return Err(UrbError::invariant("sequences and shots must be positive"));
    }
    let mut cdf = Vec::with_capacity(s.ensemble.len());
    let mut acc = 0.0;
    for g in s.ensemble.elements() {
        acc += g.probability;
        cdf.push(acc);
    }
    let work: Vec<(u32, usize)> = m_list
        .iter()
        .flat_map(|&m| (0..sequences).map(move |k| (m, k)))
        .collect();
    let outcomes: Vec<Result<u64>> = with_thread_cap(|| {
        work.par_iter()
            .map(|&(m, k)| {
                let mut rng = sequence_rng(seed, m, k);
                let seq: Vec<usize> = (0..m).map(|_| sample_gate(&cdf, &mut rng)).collect();
                let p = s.sequence_probability(&seq)?;
                if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p) {
                    return Err(UrbError::invariant(format!(
                        "model error: sequence probability {p} outside [0, 1] at m = {m}"
                    )));
                }
                let p = p.clamp(0.0, 1.0);
                let hits = Binomial::new(shots, p)
                    .map_err(|e| UrbError::invariant(format!("binomial: {e}")))?
                    .sample(&mut rng);
                Ok(hits)
            })
            .collect()
    })?;

    let mut estimates = Vec::with_capacity(m_list.len());
    let mut std_errors = Vec::with_capacity(m_list.len());
    let kf = sequences as f64;
    let total_shots = kf * shots as f64;
    for (j, _) in m_list.iter().enumerate() {
        let means: Vec<f64> = outcomes[j * sequences..(j + 1) * sequences]
            .iter()
            .map(|r| r.clone().map(|h| h as f64 / shots as f64))
            .collect::<Result<_>>()?;
        let mean = means.iter().sum::<f64>() / kf;
        let empirical = if sequences > 1 {
            let var = means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (kf - 1.0);
            (var / kf).sqrt()
        } else {
            0.0
        };
        let binomial = (mean * (1.0 - mean) / total_shots).sqrt();
        estimates.push(mean);
        std_errors.push(empirical.max(binomial));
    }
    Ok(DecayDataset {
        m_values: m_list.to_vec(),
        estimates,
        std_errors,
        sequences,
        shots,
        seed,
    })
}
