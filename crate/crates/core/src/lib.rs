//! Randomized benchmarking over arbitrary gate ensembles: twirling maps, gap
//! bounds, decay simulation and fitting.
//!
//! ```
//! use urb_core::fitting::fit_exponential;
//! use urb_core::schemes::*;
//! use urb_core::twirling::GammaNorm;
//!
//! let s = build_clifford_rb(2, &NoiseSpec::depolarizing(0.99))?;
//! let q = scheme_quality(&s, DEFAULT_M_CUTOFF)?;
//! let m: Vec<u32> = (1..=50).collect();
//! let fit = fit_exponential(&m, &exact_decay(&s, &m)?, None)?;
//! let check = theorem_bound_check(&s, &q, fit.model(), &m, GammaNorm::DiamondBound)?;
//! assert!(check.certified);
//! # Ok::<(), urb_core::UrbError>(())
//! ```

pub mod error;
pub mod linalg;
pub mod superops;

pub use error::{Result, UrbError};
pub mod fitting;
pub mod gates;
pub mod io;
pub mod perturbation;
pub mod schemes;
pub mod twirling;
