//! Hermitian operators and superoperators in the Pauli basis.

pub mod diamond;
pub mod hermitian;
pub mod norms;
pub mod pauli;
pub mod random;
pub mod superop;

pub use diamond::{
    diamond_norm, diamond_norm_sdp, diamond_norm_sdp_with, pauli_channel_diamond, DiamondMethod, DiamondNorm,
    SdpOptions,
};
pub use hermitian::{DensityMatrix, HermitianOperator, PovmElement};
pub use norms::{
    frobenius_norm, induced_frobenius_norm, induced_trace_norm, induced_trace_norm_with, so_norm, spectral_norm_herm,
    trace_norm, InducedTraceNorm,
};
pub use pauli::{pauli_basis, PauliBasis};
pub use superop::{ptm_from_kraus, AlphaMatrix, ChoiMatrix, KrausChannel, Superoperator};
