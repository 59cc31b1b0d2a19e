//! Faddeev's Green's function for the Laplacian.
//!
//! `G_k(z) = (1/2π) Re E1(−ikz)` and its exponentially damped companion
//! `g_k(z) = e^{−ikz} G_k(z)`, which solves `(−Δ − 4ik∂̄) g_k = δ`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{e1, scaled_e1};

fn check(z: Complex64, k: Complex64) -> Result<()> {
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::InvalidParameter("Faddeev Green's function is singular at z = 0".into()));
    }
    if k == Complex64::new(0.0, 0.0) {
        return Err(Error::InvalidParameter("Faddeev Green's function is undefined at k = 0".into()));
    }
    if !(z.re.is_finite() && z.im.is_finite() && k.re.is_finite() && k.im.is_finite()) {
        return Err(Error::InvalidParameter("non-finite argument".into()));
    }
    Ok(())
}

/// `G_k(z)` for `z ≠ 0`, `k ≠ 0`.
pub fn faddeev_greens(z: Complex64, k: Complex64) -> Result<f64> {
    check(z, k)?;
    Ok(greens_unchecked(z, k))
}

pub(crate) fn greens_unchecked(z: Complex64, k: Complex64) -> f64 {
    let w = Complex64::new(0.0, -1.0) * k * z;
    e1(w).re / (2.0 * PI)
}

/// `g_k(z) = e^{−ikz} G_k(z)`, evaluated without forming the exponentials.
pub fn faddeev_g(z: Complex64, k: Complex64) -> Result<Complex64> {
    check(z, k)?;
    Ok(g_unchecked(z, k))
}

pub(crate) fn g_unchecked(z: Complex64, k: Complex64) -> Complex64 {
    let w = Complex64::new(0.0, -1.0) * k * z;
    let f = scaled_e1(w);
    let phase = Complex64::from_polar(1.0, 2.0 * w.im);
    (f + phase * f.conj()) / (4.0 * PI)
}

/// `G_k(z) + (1/2π) ln|z|`, the part of `G_k` that stays bounded at `z = 0`.
pub(crate) fn greens_regular_part(z: Complex64, k: Complex64) -> f64 {
    greens_unchecked(z, k) + z.norm().ln() / (2.0 * PI)
}
