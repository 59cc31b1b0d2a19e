//! Interior side of the scattering data: the Schrödinger potential of a
//! prior, its CGO solutions from the Lippmann–Schwinger equation, and the
//! piecewise assembly of t(k).

pub mod ls;
pub mod piecewise;
pub mod potential;

pub use ls::{periodized_gk, InteriorCgoField, LsConfig, LsSolver, PeriodicGrid};
pub use piecewise::{assemble_piecewise_t, ScatteringTable, TSource};
pub use potential::{q_from_sigma, PotentialField};
