use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Result, UrbError};
use crate::gates::{clifford_group, pauli_group, phase_normalize};
use crate::linalg::{c, max_abs_diff_c, CMat};
use crate::schemes::noise::{GateNoise, NoiseSpec};
use crate::superops::pauli::{n_qubits_for_dim, PauliBasis};
use crate::superops::{DensityMatrix, HermitianOperator, PovmElement, Superoperator};
use crate::twirling::{GateElement, GateEnsemble};

/// Largest composite gate set the cycle builder will enumerate.
pub const MAX_CYCLE_ELEMENTS: usize = 4096;

pub type PovmFn = dyn Fn(&[usize]) -> Result<PovmElement> + Send + Sync;

/// Post-processing rule mapping a gate-index string to a POVM element.
#[derive(Clone)]
pub enum PovmRule {
    /// `M₀·φ*(g₁)∘…∘φ*(g_m)∘ℐ`.
    Factored,
    /// Recovery Pauli of a cycle sequence; the composite inverting maps carry
    /// the recovery, so the rule evaluates like `Factored`.
    Cycle,
    /// `Q = Σ_x q(x)|x⟩⟨x|` with `q(x) = |⟨x|C_m⋯C_1|0⟩|²` from the ideal
    /// circuit. Reported values are rescaled by `2ⁿ` and shifted by −1.
    Xeb,
    /// Arbitrary sequence-dependent rule.
    Custom(Arc<PovmFn>),
}

impl PovmRule {
    pub fn custom(f: impl Fn(&[usize]) -> Result<PovmElement> + Send + Sync + 'static) -> Self {
        PovmRule::Custom(Arc::new(f))
    }

    /// Whether the rule is the factored expression by definition.
    pub fn is_factored(&self) -> bool {
        matches!(self, PovmRule::Factored | PovmRule::Cycle)
    }

    pub fn name(&self) -> &'static str {
        match self {
            PovmRule::Factored => "factored",
            PovmRule::Cycle => "cycle",
            PovmRule::Xeb => "xeb",
            PovmRule::Custom(_) => "custom",
        }
    }
}

impl fmt::Debug for PovmRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A benchmarking scheme together with the factoring triple `(M₀, φ*, ℐ)`.
#[derive(Debug, Clone)]
pub struct UrbScheme {
    pub ensemble: GateEnsemble,
    pub m0: PovmElement,
    pub intermediate: Superoperator,
    pub rho0: DensityMatrix,
    pub povm: PovmRule,
    /// The noise description the scheme was built from, if any.
    pub noise: Option<NoiseSpec>,
}

impl UrbScheme {
    pub fn new(
        ensemble: GateEnsemble,
        m0: PovmElement,
        intermediate: Superoperator,
        rho0: DensityMatrix,
        povm: PovmRule,
    ) -> Result<Self> {
        let d = ensemble.dim();
        for got in [m0.dim(), intermediate.dim(), rho0.dim()] {
            if got != d {
                return Err(UrbError::DimensionMismatch { expected: d, got });
            }
        }
        if !intermediate.is_cptp()? {
            return Err(UrbError::invariant("intermediate map is not a channel"));
        }
        Ok(Self {
            ensemble,
            m0,
            intermediate,
            rho0,
            povm,
            noise: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.ensemble.dim()
    }

    /// `2ⁿ` for linear XEB, 1 otherwise.
    pub fn prefactor(&self) -> f64 {
        match self.povm {
            PovmRule::Xeb => self.dim() as f64,
            _ => 1.0,
        }
    }

    /// Maps a success probability to the reported figure (`2ⁿp − 1` for XEB).
    pub fn reported_value(&self, p: f64) -> f64 {
        match self.povm {
            PovmRule::Xeb => self.prefactor() * p - 1.0,
            _ => p,
        }
    }

    pub(crate) fn coords(&self, h: &HermitianOperator) -> DVector<f64> {
        h.pauli_coords().expect("dimension checked at construction")
    }

    /// Pauli coordinates of the factored POVM element for `seq`.
    pub fn factored_coords(&self, seq: &[usize]) -> Result<DVector<f64>> {
        let mut v = self.coords(self.m0.base());
        for &g in seq {
            v = self.element(g)?.inverting.ptm().tr_mul(&v);
        }
        Ok(self.intermediate.ptm().tr_mul(&v))
    }

    /// Pauli coordinates of `M(seq)` under the scheme's rule.
    pub fn povm_coords(&self, seq: &[usize]) -> Result<DVector<f64>> {
        match &self.povm {
            PovmRule::Factored | PovmRule::Cycle => self.factored_coords(seq),
            PovmRule::Xeb => Ok(self.coords(&self.xeb_operator(seq)?)),
            PovmRule::Custom(f) => {
                let m = f(seq)?;
                if m.dim() != self.dim() {
                    return Err(UrbError::DimensionMismatch {
                        expected: self.dim(),
                        got: m.dim(),
                    });
                }
                Ok(self.coords(m.base()))
            }
        }
    }

    pub fn povm_element(&self, seq: &[usize]) -> Result<HermitianOperator> {
        HermitianOperator::from_pauli_coords(self.dim(), &self.povm_coords(seq)?)
    }

    fn xeb_operator(&self, seq: &[usize]) -> Result<HermitianOperator> {
        let d = self.dim();
        let mut ket = DVector::from_element(d, c(0.0, 0.0));
        ket[0] = c(1.0, 0.0);
        for &g in seq {
            ket = &self.element(g)?.unitary * ket;
        }
        let q: Vec<f64> = ket.iter().map(|z| z.norm_sqr()).collect();
        HermitianOperator::from_real_diagonal(&q)
    }

    pub(crate) fn element(&self, g: usize) -> Result<&GateElement> {
        self.ensemble
            .elements()
            .get(g)
            .ok_or_else(|| UrbError::invariant(format!("gate index {g} out of range")))
    }

    /// Pauli coordinates of `φ(g_m)∘…∘φ(g_1)(ρ₀)`.
    pub fn state_coords(&self, seq: &[usize]) -> Result<DVector<f64>> {
        let mut v = self.coords(self.rho0.base());
        for &g in seq {
            v = self.element(g)?.implementation.ptm() * v;
        }
        Ok(v)
    }

    /// `tr[M(seq)·φ(g_m)∘…∘φ(g_1)(ρ₀)]`, before clipping.
    pub fn sequence_probability(&self, seq: &[usize]) -> Result<f64> {
        let d = self.dim() as f64;
        Ok(d * self.povm_coords(seq)?.dot(&self.state_coords(seq)?))
    }
}

/// Keeps the diagonal in the computational basis.
pub fn computational_dephasing(d: usize) -> Result<Superoperator> {
    Superoperator::from_map(d, |x| {
        let mut out = CMat::zeros(d, d);
        for i in 0..d {
            out[(i, i)] = x[(i, i)];
        }
        out
    })
}

fn with_noise(unitaries: &[CMat], probs: &[f64], noise: &NoiseSpec) -> Result<GateEnsemble> {
    let n = unitaries.len();
    let mut elements = Vec::with_capacity(n);
    for (idx, (u, &p)) in unitaries.iter().zip(probs).enumerate() {
        let ideal = Superoperator::unitary(u)?;
        let (phi, inv) = noise.maps(&ideal, idx, n)?;
        elements.push(GateElement::with_maps(p, u.clone(), phi, inv)?);
    }
    GateEnsemble::new(elements)
}

fn standard_scheme(ensemble: GateEnsemble, noise: &NoiseSpec) -> Result<UrbScheme> {
    let d = ensemble.dim();
    let mut s = UrbScheme::new(
        ensemble,
        PovmElement::projector(d, 0)?,
        Superoperator::identity(d)?,
        DensityMatrix::basis_state(d, 0)?,
        PovmRule::Factored,
    )?;
    s.noise = Some(noise.clone());
    Ok(s)
}

/// Scheme over explicit gates with `|0⟩` preparation and measurement.
pub fn build_scheme(unitaries: &[CMat], probs: &[f64], noise: &NoiseSpec) -> Result<UrbScheme> {
    standard_scheme(with_noise(unitaries, probs, noise)?, noise)
}

/// Uniform Clifford group RB on `d ∈ {2, 4}`.
pub fn build_clifford_rb(d: usize, noise: &NoiseSpec) -> Result<UrbScheme> {
    let group = clifford_group(n_qubits_for_dim(d)?)?;
    let probs = vec![1.0 / group.len() as f64; group.len()];
    build_scheme(&group, &probs, noise)
}

/// Clifford RB with arbitrary weights; the group is chosen from the number of
/// weights (24 or 11520).
pub fn build_nonuniform_rb(weights: &[f64], noise: &NoiseSpec) -> Result<UrbScheme> {
    let n = match weights.len() {
        24 => 1,
        11520 => 2,
        other => {
            return Err(UrbError::Size(format!(
                "non-uniform RB expects 24 or 11520 weights, got {other}"
            )))
        }
    };
    if weights.iter().any(|&w| w < 0.0) {
        return Err(UrbError::invariant("negative weight"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(UrbError::invariant("weights sum to zero"));
    }
    let group = clifford_group(n)?;
    let (us, ps): (Vec<CMat>, Vec<f64>) = group
        .into_iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(u, &w)| (u, w / total))
        .unzip();
    let noise = match &noise.gate {
        GateNoise::PerGate(table) => {
            let kept = table
                .iter()
                .zip(weights)
                .filter(|(_, &w)| w > 0.0)
                .map(|(m, _)| m.clone())
                .collect();
            NoiseSpec {
                gate: GateNoise::PerGate(kept),
                ..noise.clone()
            }
        }
        GateNoise::Uniform(_) => noise.clone(),
    };
    build_scheme(&us, &ps, &noise)
}

/// Uniform distribution over the `d²` Pauli strings.
pub fn build_pauli_ensemble(d: usize, noise: &NoiseSpec) -> Result<UrbScheme> {
    let paulis = pauli_group(n_qubits_for_dim(d)?)?;
    let probs = vec![1.0 / paulis.len() as f64; paulis.len()];
    build_scheme(&paulis, &probs, noise)
}

/// Order of `g` modulo global phase.
pub fn unitary_order(g: &CMat, limit: usize) -> Result<usize> {
    let d = g.nrows();
    let id = CMat::identity(d, d);
    let mut acc = g.clone();
    for k in 1..=limit {
        if max_abs_diff_c(&phase_normalize(&acc), &id) < 1e-9 {
            return Ok(k);
        }
        acc = &acc * g;
    }
    Err(UrbError::invariant(format!("gate order exceeds {limit}")))
}

/// Cycle benchmarking of the Clifford `g` with order `k`: each element is a
/// Pauli tuple `(P₁, …, P_k)` implemented as `φ(P₁)∘φ(g)∘⋯∘φ(P_k)∘φ(g)`.
/// Gate-dependent noise tables are not supported here.
pub fn build_cycle_benchmarking(g: &CMat, noise: &NoiseSpec) -> Result<UrbScheme> {
    let d = g.nrows();
    let n = n_qubits_for_dim(d)?;
    let model = match &noise.gate {
        GateNoise::Uniform(m) => m,
        GateNoise::PerGate(_) => {
            return Err(UrbError::Unsupported(
                "cycle benchmarking takes one noise model for all constituent gates".into(),
            ))
        }
    };
    let k = unitary_order(g, 64)?;
    let basis = PauliBasis::shared(n)?;
    let count = basis.len().checked_pow(k as u32).unwrap_or(usize::MAX);
    if count > MAX_CYCLE_ELEMENTS {
        return Err(UrbError::Size(format!(
            "cycle ensemble would have {count} elements (limit {MAX_CYCLE_ELEMENTS})"
        )));
    }
    let gate_spec = NoiseSpec::uniform(model.clone()).with_placement(noise.placement);
    let (phi_g, _) = gate_spec.maps(&Superoperator::unitary(g)?, 0, 1)?;
    let phi_p: Vec<Superoperator> = basis
        .elements()
        .iter()
        .map(|p| Ok(gate_spec.maps(&Superoperator::unitary(p)?, 0, 1)?.0))
        .collect::<Result<_>>()?;

    let prob = 1.0 / count as f64;
    let mut elements = Vec::with_capacity(count);
    for idx in 0..count {
        // digits of idx, most significant first, give (P₁, …, P_k)
        let mut digits = vec![0usize; k];
        let mut rest = idx;
        for slot in digits.iter_mut().rev() {
            *slot = rest % basis.len();
            rest /= basis.len();
        }
        let mut unitary = CMat::identity(d, d);
        let mut phi = Superoperator::identity(d)?;
        for &pi in &digits {
            unitary = unitary * basis.element(pi) * g;
            phi = phi.compose(&phi_p[pi])?.compose(&phi_g)?;
        }
        let ideal = Superoperator::unitary(&unitary)?;
        let (_, inverting) = noise.maps(&ideal, 0, 1)?;
        elements.push(GateElement::with_maps(prob, unitary, phi, inverting)?);
    }
    let mut s = standard_scheme(GateEnsemble::new(elements)?, noise)?;
    s.povm = PovmRule::Cycle;
    Ok(s)
}

/// Toy linear XEB over a uniform layer set on `n` qubits. The inverting maps
/// are the ideal adjoints (classical simulation) and `ℐ` is the
/// computational-basis dephasing, which makes the rule exactly factored.
pub fn build_linear_xeb(n_qubits: usize, layers: &[CMat], noise: &NoiseSpec) -> Result<UrbScheme> {
    let d = 1usize
        .checked_shl(n_qubits as u32)
        .filter(|_| (1..=3).contains(&n_qubits))
        .ok_or_else(|| UrbError::Size(format!("linear XEB supports 1 to 3 qubits, got {n_qubits}")))?;
    if layers.is_empty() {
        return Err(UrbError::invariant("empty layer set"));
    }
    let count = layers.len();
    let mut elements = Vec::with_capacity(count);
    for (idx, u) in layers.iter().enumerate() {
        if u.nrows() != d {
            return Err(UrbError::DimensionMismatch {
                expected: d,
                got: u.nrows(),
            });
        }
        let ideal = Superoperator::unitary(u)?;
        let (phi, _) = noise.maps(&ideal, idx, count)?;
        elements.push(GateElement::with_maps(
            1.0 / count as f64,
            u.clone(),
            phi,
            ideal.adjoint(),
        )?);
    }
    let mut s = UrbScheme::new(
        GateEnsemble::new(elements)?,
        PovmElement::projector(d, 0)?,
        computational_dephasing(d)?,
        DensityMatrix::basis_state(d, 0)?,
        PovmRule::Xeb,
    )?;
    s.noise = Some(noise.clone());
    Ok(s)
}
