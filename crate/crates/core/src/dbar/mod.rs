//! D-bar reconstruction with prior-weighted right-hand side.

pub mod mu_int;
pub mod solve;

pub use mu_int::{cell_weights, compute_mu_int, prior_scattering, LsStats, MuIntField, PriorScattering};
pub use solve::{
    dbar_rhs, reconstruct, sigma_from_mu, solve_dbar_at_z, ConductivityImage, DbarPoint, DbarSolver,
    ReconstructionDiagnostics, ReconstructionParams, MAX_FAILURE_FRACTION,
};
