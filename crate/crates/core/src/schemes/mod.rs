//! Benchmarking schemes: construction, decay evaluation and quality estimates.

pub mod decay;
pub mod noise;
pub mod quality;
pub mod scheme;

pub use decay::{
    enumerate_decay, exact_decay, factored_decay, monte_carlo_decay, sequence_rng, with_thread_cap, DecayDataset,
    ENUMERATION_BUDGET,
};
pub use noise::{GateNoise, NoiseModel, NoiseSpec, Placement};
pub use quality::{
    epsilon_at, near_ideal_delta, scheme_quality, theorem_bound_check, BoundParameters, BoundRow, EpsilonTerm,
    ExponentialModel, SchemeQuality, TheoremCheck, DEFAULT_M_CUTOFF,
};
pub use scheme::{
    build_clifford_rb, build_cycle_benchmarking, build_linear_xeb, build_nonuniform_rb, build_pauli_ensemble,
    build_scheme, computational_dephasing, unitary_order, PovmRule, UrbScheme, MAX_CYCLE_ELEMENTS,
};
