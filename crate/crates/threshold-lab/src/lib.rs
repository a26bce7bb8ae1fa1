//! Numerical toolkit for the two-dimensional Schrödinger operator with finitely many
//! point interactions: Green functions, the Krein matrix Γ, zero-energy threshold
//! classification, zero modes, bound states, low-energy expansion checks and the
//! building blocks of the stationary wave-operator representation.

pub mod asymptotics_validator;
pub mod error;
pub mod gamma_core;
pub mod green_functions;
pub mod linalg;
pub mod spectrum_resolvent;
pub mod threshold_classifier;
pub mod wave_operator_probe;
pub mod zero_modes;

pub use error::{Error, Result};

/// Default relative tolerance of every kernel decision.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Environment variable that overrides [`DEFAULT_TOL`] in front ends.
pub const TOL_ENV: &str = "THRESHOLD_LAB_TOL";
