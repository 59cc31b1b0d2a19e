//! Boundary side of the scattering data: Faddeev's Green's function, the
//! boundary integral equation for the CGO trace, and t(k) from DN maps.

pub mod bie;
pub mod greens;

pub use bie::{
    gamma_matrix, solve_bie, t_bie, t_bie_on_disc, write_samples_csv, BieConfig, BoundaryCgoTrace, BoundaryWeight,
    FaddeevKernelMatrix, ScatteringSample,
};
pub use greens::{faddeev_g, faddeev_greens};
