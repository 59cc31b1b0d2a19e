//! Regularized 2-D D-bar reconstruction for electrical impedance tomography,
//! with optional a priori information entering through a piecewise
//! scattering transform and a prior-averaged right-hand side.

pub mod cgo_boundary;
pub mod cgo_interior;
pub mod dbar;
pub mod error;
pub mod field;
pub mod forward;
pub mod geometry;
pub mod numerics;
pub mod pipeline;
pub mod prior;

pub use error::{Error, Result};
