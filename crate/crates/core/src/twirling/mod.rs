//! Twirling maps on superoperators and bounds on their distance to the Haar twirl.

pub mod beta;
pub mod ensemble;
pub mod gamma;
pub mod gauge;
pub mod twirl;

pub use beta::{beta_haar, beta_pauli, beta_tensor, twirl_from_beta, BetaTensor};
pub use ensemble::{GateElement, GateEnsemble};
pub use gamma::{
    gamma_bound_convex, gamma_bound_induced_l1, gamma_bound_l2, gamma_exact_so, gamma_report, is_two_design, GammaNorm,
    GammaReport,
};
pub use gauge::{gauge_corrected_twirl, gauge_inverse, gauge_kappa};
pub use twirl::{haar_twirl, ideal_twirl, pauli_twirl, physical_twirl, Subspace, SubspaceProjector, TwirlingMatrix};
