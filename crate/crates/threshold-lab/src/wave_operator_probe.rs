//! Building blocks of the stationary representation of the wave operators: the
//! multiplier `Γ̃`, its high-energy split, the operator `K` acting through spherical
//! means, `Ω_{jk} = K ∘ Γ̃_{jk}(|D|)` and empirical `L^p` ratio sweeps.

mod half_line;
mod multiplier;
mod operators;
mod quadrature;
mod test_functions;

pub use half_line::{project_half_line, HalfLineProfile};
pub use multiplier::{
    dominant_phase, high_energy_split, mikhlin_probe, multiplier, multiplier_matrix, split_parts,
    Cutoff, MikhlinReport, MultiplierDecomposition, PhaseTerm, MIKHLIN_STABILITY,
};
pub use operators::{
    apply_k, apply_omega, k_profile, lp_ratio_sweep, omega_direct, omega_profile, pair_k,
    pair_k_oracle, poisson_identity, LpReport, LpRow, OmegaSamples, OracleValue, ProbeOperator,
    LP_STABILITY,
};
pub use quadrature::{exp_ei, gauss_legendre, laguerre};
pub use test_functions::{
    annular_corpus, spherical_mean, Descriptor, PolarGrid, Profile, RadialTestFunction,
};
