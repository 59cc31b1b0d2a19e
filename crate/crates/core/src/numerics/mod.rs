//! Numerical building blocks shared by the solvers.

pub mod expint;
pub mod fft2;
pub mod krylov;
pub mod quadrature;
pub mod skyline;

pub use expint::{e1, scaled_e1};
pub use fft2::{next_fast_len, Fft2};
pub use krylov::{bicgstab, relative_residual, KrylovOptions, KrylovOutcome, TARGET_FRACTION};
