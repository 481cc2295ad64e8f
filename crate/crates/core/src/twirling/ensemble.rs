use crate::error::{Result, UrbError};
use crate::linalg::CMat;
use crate::superops::pauli::PauliBasis;
use crate::superops::Superoperator;

pub const PROB_SUM_TOL: f64 = 1e-12;

/// One gate of an ensemble: ideal unitary `ω(g)`, implementation `φ(g)` and
/// the inverting map `φ*(g)` applied at the end of a sequence.
#[derive(Debug, Clone)]
pub struct GateElement {
    pub probability: f64,
    pub unitary: CMat,
    pub ideal: Superoperator,
    pub implementation: Superoperator,
    pub inverting: Superoperator,
}

impl GateElement {
    /// Noiseless gate: `φ = ω`, `φ* = ω†`.
    pub fn ideal(probability: f64, unitary: CMat) -> Result<Self> {
        let ideal = Superoperator::unitary(&unitary)?;
        Ok(Self {
            probability,
            unitary,
            implementation: ideal.clone(),
            inverting: ideal.adjoint(),
            ideal,
        })
    }

    pub fn with_maps(
        probability: f64,
        unitary: CMat,
        implementation: Superoperator,
        inverting: Superoperator,
    ) -> Result<Self> {
        let ideal = Superoperator::unitary(&unitary)?;
        Ok(Self {
            probability,
            unitary,
            ideal,
            implementation,
            inverting,
        })
    }
}

/// Discrete measure over gates.
#[derive(Debug, Clone)]
pub struct GateEnsemble {
    dim: usize,
    elements: Vec<GateElement>,
}

impl GateEnsemble {
    pub fn new(elements: Vec<GateElement>) -> Result<Self> {
        let e = Self::new_unchecked_channels(elements)?;
        for (idx, g) in e.elements.iter().enumerate() {
            if !g.implementation.is_cptp()? {
                return Err(UrbError::invariant(format!("gate {idx}: implementation is not CPTP")));
            }
            if !g.inverting.is_cptp()? {
                return Err(UrbError::invariant(format!("gate {idx}: inverting map is not CPTP")));
            }
        }
        Ok(e)
    }

    /// Validates probabilities, dimensions and ideal unitarity but skips the
    /// CPTP check on the implementation maps (used for gauge-transformed maps).
    pub(crate) fn new_unchecked_channels(elements: Vec<GateElement>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| UrbError::invariant("ensemble has no gates"))?;
        let dim = first.ideal.dim();
        let mut total = 0.0;
        for (idx, g) in elements.iter().enumerate() {
            if !(g.probability > 0.0 && g.probability <= 1.0) {
                return Err(UrbError::invariant(format!(
                    "gate {idx}: probability {} outside (0, 1]",
                    g.probability
                )));
            }
            for m in [&g.ideal, &g.implementation, &g.inverting] {
                if m.dim() != dim {
                    return Err(UrbError::DimensionMismatch {
                        expected: dim,
                        got: m.dim(),
                    });
                }
            }
            if !g.ideal.is_unitary_channel(1e-10) {
                return Err(UrbError::invariant(format!(
                    "gate {idx}: ideal map is not a unitary channel"
                )));
            }
            total += g.probability;
        }
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(UrbError::invariant(format!("probabilities sum to {total}, expected 1")));
        }
        Ok(Self { dim, elements })
    }

    /// Noiseless ensemble from unitaries and weights.
    pub fn ideal(unitaries: &[CMat], probabilities: &[f64]) -> Result<Self> {
        if unitaries.len() != probabilities.len() {
            return Err(UrbError::DimensionMismatch {
                expected: unitaries.len(),
                got: probabilities.len(),
            });
        }
        let elements = unitaries
            .iter()
            .zip(probabilities)
            .map(|(u, &p)| GateElement::ideal(p, u.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new_unchecked_channels(elements)
    }

    pub fn uniform(unitaries: &[CMat]) -> Result<Self> {
        let p = 1.0 / unitaries.len() as f64;
        Self::ideal(unitaries, &vec![p; unitaries.len()])
    }

    /// Uniform ensemble over the `d²` Pauli strings.
    pub fn uniform_pauli(dim: usize) -> Result<Self> {
        let basis = PauliBasis::for_dim(dim)?;
        Self::uniform(basis.elements())
    }

    pub fn uniform_clifford(n_qubits: usize) -> Result<Self> {
        Self::uniform(&crate::gates::clifford_group(n_qubits)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[GateElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Mixture `w·self + (1 − w)·other` over the union of supports.
    pub fn mix(&self, w: f64, other: &GateEnsemble) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(UrbError::invariant(format!("mixing weight {w} outside [0, 1]")));
        }
        let mut elements = Vec::new();
        for (src, scale) in [(self, w), (other, 1.0 - w)] {
            if scale == 0.0 {
                continue;
            }
            for g in &src.elements {
                let mut g = g.clone();
                g.probability *= scale;
                elements.push(g);
            }
        }
        Self::new_unchecked_channels(elements)
    }

    /// Each gate preceded in the twirl by a uniformly random Pauli: the ideal
    /// unitary becomes `P·U_g`, so that `Λ(μ') = Λ(μ)∘Λ(μ_P)`.
    pub fn pauli_dressed(&self) -> Result<Self> {
        let basis = PauliBasis::for_dim(self.dim)?;
        let n = basis.len() as f64;
        let mut elements = Vec::with_capacity(self.elements.len() * basis.len());
        for g in &self.elements {
            for p in basis.elements() {
                let pc = Superoperator::unitary(p)?;
                elements.push(GateElement {
                    probability: g.probability / n,
                    unitary: p * &g.unitary,
                    ideal: pc.compose(&g.ideal)?,
                    implementation: pc.compose(&g.implementation)?,
                    inverting: g.inverting.compose(&pc.adjoint())?,
                });
            }
        }
        Self::new_unchecked_channels(elements)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probabilities_must_sum_to_one() {
        let id = CMat::identity(2, 2);
        assert!(GateEnsemble::ideal(&[id.clone(), id.clone()], &[0.5, 0.4]).is_err());
        assert!(GateEnsemble::ideal(&[id.clone(), id], &[0.5, 0.5]).is_ok());
    }

    #[test]
    fn non_unitary_ideal_rejected() {
        let m = CMat::identity(2, 2).scale(0.5);
        assert!(GateEnsemble::uniform(&[m]).is_err());
    }

    #[test]
    fn non_cptp_implementation_rejected() {
        let id = CMat::identity(2, 2);
        let bad = Superoperator::depolarizing(2, 1.5).unwrap();
        let g = GateElement::with_maps(1.0, id, bad, Superoperator::identity(2).unwrap()).unwrap();
        assert!(GateEnsemble::new(vec![g]).is_err());
    }
}
