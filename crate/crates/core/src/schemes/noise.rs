use serde::Serialize;

use crate::error::{Result, UrbError};
use crate::linalg::CMat;
use crate::superops::{DensityMatrix, KrausChannel, Superoperator};

/// A noise channel, described by its model parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    None,
    Depolarizing {
        q: f64,
    },
    /// `p·id + (1 − p)·(X ↦ tr[X] σ)`.
    Replacement {
        p: f64,
        state: DensityMatrix,
    },
    AmplitudeDamping {
        gamma: f64,
    },
    BitFlip {
        p: f64,
    },
    /// Probabilities over the Pauli basis, identity first.
    Pauli {
        probs: Vec<f64>,
    },
    Kraus {
        ops: Vec<CMat>,
    },
    Channel(Superoperator),
}

impl NoiseModel {
    pub fn channel(&self, dim: usize) -> Result<Superoperator> {
        let ch = match self {
            NoiseModel::None => Superoperator::identity(dim)?,
            NoiseModel::Depolarizing { q } => Superoperator::depolarizing(dim, *q)?,
            NoiseModel::Replacement { p, state } => {
                check_dim(dim, state.dim())?;
                Superoperator::replacement(state, *p)?
            }
            NoiseModel::AmplitudeDamping { gamma } => single_qubit(dim, Superoperator::amplitude_damping(*gamma)?)?,
            NoiseModel::BitFlip { p } => single_qubit(dim, Superoperator::bit_flip(*p)?)?,
            NoiseModel::Pauli { probs } => Superoperator::pauli_channel(dim, probs)?,
            NoiseModel::Kraus { ops } => {
                let k = KrausChannel::new(ops.clone())?;
                check_dim(dim, k.dim())?;
                Superoperator::from_kraus(&k)?
            }
            NoiseModel::Channel(t) => {
                check_dim(dim, t.dim())?;
                t.clone()
            }
        };
        if !ch.is_cptp()? {
            return Err(UrbError::invariant(format!(
                "noise model {} is not a channel",
                self.name()
            )));
        }
        Ok(ch)
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseModel::None => "none",
            NoiseModel::Depolarizing { .. } => "depolarizing",
            NoiseModel::Replacement { .. } => "replacement",
            NoiseModel::AmplitudeDamping { .. } => "amplitude-damping",
            NoiseModel::BitFlip { .. } => "bit-flip",
            NoiseModel::Pauli { .. } => "pauli",
            NoiseModel::Kraus { .. } => "kraus",
            NoiseModel::Channel(_) => "channel",
        }
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(UrbError::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn single_qubit(dim: usize, ch: Superoperator) -> Result<Superoperator> {
    if dim != 2 {
        return Err(UrbError::Unsupported(format!(
            "single-qubit noise model used at dimension {dim}"
        )));
    }
    Ok(ch)
}

/// Where gate-independent noise sits relative to the ideal gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// `φ(g) = 𝒩_R∘ω(g)`, `φ*(g) = ω(g)†∘𝒩_L`.
    #[default]
    InBetween,
    /// `φ(g) = ω(g)∘𝒩_R`, `φ*(g) = 𝒩_L∘ω(g)†`.
    Sandwiched,
}

impl std::str::FromStr for Placement {
    type Err = UrbError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in-between" => Ok(Placement::InBetween),
            "sandwiched" => Ok(Placement::Sandwiched),
            other => Err(UrbError::Unsupported(format!("noise placement '{other}'"))),
        }
    }
}

/// Noise on the gates: one model for every gate, or a per-gate table.
#[derive(Debug, Clone, PartialEq)]
pub enum GateNoise {
    Uniform(NoiseModel),
    PerGate(Vec<NoiseModel>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    /// `𝒩_R`, acting with the implementation map.
    pub gate: GateNoise,
    /// `𝒩_L`, acting with the inverting map.
    pub inverting: NoiseModel,
    pub placement: Placement,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self::uniform(NoiseModel::None)
    }

    pub fn uniform(model: NoiseModel) -> Self {
        Self {
            gate: GateNoise::Uniform(model),
            inverting: NoiseModel::None,
            placement: Placement::InBetween,
        }
    }

    pub fn depolarizing(q: f64) -> Self {
        Self::uniform(NoiseModel::Depolarizing { q })
    }

    pub fn per_gate(models: Vec<NoiseModel>) -> Self {
        Self {
            gate: GateNoise::PerGate(models),
            inverting: NoiseModel::None,
            placement: Placement::InBetween,
        }
    }

    pub fn with_inverting(mut self, model: NoiseModel) -> Self {
        self.inverting = model;
        self
    }

    pub fn with_placement(mut self, placement: Placement) -> Self {
        self.placement = placement;
        self
    }

    pub fn is_gate_independent(&self) -> bool {
        matches!(self.gate, GateNoise::Uniform(_))
    }

    /// Implementation and inverting maps for the `index`-th of `count` gates.
    pub fn maps(&self, ideal: &Superoperator, index: usize, count: usize) -> Result<(Superoperator, Superoperator)> {
        let d = ideal.dim();
        let right = match &self.gate {
            GateNoise::Uniform(m) => m.channel(d)?,
            GateNoise::PerGate(table) => {
                if table.len() != count {
                    return Err(UrbError::DimensionMismatch {
                        expected: count,
                        got: table.len(),
                    });
                }
                table[index].channel(d)?
            }
        };
        let left = self.inverting.channel(d)?;
        let adj = ideal.adjoint();
        Ok(match self.placement {
            Placement::InBetween => (right.compose(ideal)?, adj.compose(&left)?),
            Placement::Sandwiched => (ideal.compose(&right)?, left.compose(&adj)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placements_compose_in_order() {
        let h = Superoperator::unitary(&crate::gates::hadamard()).unwrap();
        let spec = NoiseSpec::uniform(NoiseModel::AmplitudeDamping { gamma: 0.2 });
        let ad = Superoperator::amplitude_damping(0.2).unwrap();
        let (phi, inv) = spec.maps(&h, 0, 1).unwrap();
        assert_eq!(phi, ad.compose(&h).unwrap());
        assert_eq!(inv, h.adjoint());
        let (phi, _) = spec.with_placement(Placement::Sandwiched).maps(&h, 0, 1).unwrap();
        assert_eq!(phi, h.compose(&ad).unwrap());
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(NoiseModel::Depolarizing { q: 1.5 }.channel(2).is_err());
        assert!(NoiseModel::AmplitudeDamping { gamma: 0.1 }.channel(4).is_err());
        assert!("diagonal".parse::<Placement>().is_err());
    }
}
