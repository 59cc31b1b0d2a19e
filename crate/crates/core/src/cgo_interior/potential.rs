//! Schrödinger potential `q = Δ√σ / √σ` of a smooth conductivity.

use crate::error::{Error, Result};
use crate::field::ConductivityField;
use crate::geometry::ZGrid;

/// Potential samples on the z-grid in unit-disc coordinates (lengths scaled
/// by the domain radius, so `q` carries a factor `radius²`).
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    grid: ZGrid,
    q: Vec<f64>,
}

impl PotentialField {
    pub fn zero(grid: ZGrid) -> Self {
        let q = vec![0.0; grid.len()];
        Self { grid, q }
    }

    pub fn from_values(grid: ZGrid, q: Vec<f64>) -> Result<Self> {
        if q.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!("{} potential values for {} nodes", q.len(), grid.len())));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("potential has non-finite samples".into()));
        }
        Ok(Self { grid, q })
    }

    pub fn grid(&self) -> &ZGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    pub fn is_zero(&self) -> bool {
        self.q.iter().all(|&v| v == 0.0)
    }

    /// Indices of nonzero samples.
    pub fn support(&self) -> Vec<usize> {
        (0..self.q.len()).filter(|&i| self.q[i] != 0.0).collect()
    }
}

/// Five-point Laplacian of `√σ` divided by `√σ`, in unit-disc coordinates.
/// Samples outside Ω are set to exactly zero.
pub fn q_from_sigma(sigma: &ConductivityField) -> Result<PotentialField> {
    if let Some(bad) = sigma.values().iter().find(|&&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("conductivity must be positive, found {bad}")));
    }
    let grid = sigma.grid();
    let n = grid.n();
    let h = grid.normalized_spacing();
    let s: Vec<f64> = sigma.values().iter().map(|v| v.sqrt()).collect();
    let at = |r: usize, c: usize, dr: isize, dc: isize| {
        // outside the grid the field is continued by its nearest sample
        let rr = (r as isize + dr).clamp(0, n as isize - 1) as usize;
        let cc = (c as isize + dc).clamp(0, n as isize - 1) as usize;
        s[rr * n + cc]
    };
    let q = (0..grid.len())
        .map(|i| {
            if !grid.inside(i) {
                return 0.0;
            }
            let (r, c) = grid.row_col(i);
            let lap = at(r, c, 1, 0) + at(r, c, -1, 0) + at(r, c, 0, 1) + at(r, c, 0, -1) - 4.0 * s[i];
            let v = lap / (h * h * s[i]);
            // a constant neighbourhood gives an exact zero only up to rounding
            if lap.abs() <= 1e-14 * s[i] {
                0.0
            } else {
                v
            }
        })
        .collect();
    PotentialField::from_values(grid.clone(), q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_zgrid;

    #[test]
    fn constant_gives_zero() {
        let g = build_zgrid(143.2, 51).unwrap();
        let q = q_from_sigma(&ConductivityField::constant(g, 0.424)).unwrap();
        assert!(q.is_zero());
    }

    #[test]
    fn gaussian_exponent_matches_closed_form() {
        // σ = exp(2 a e^{-|x|²/w²}) gives √σ = exp(a e^{-|x|²/w²}) =: e^f, q = Δf + |∇f|²
        let (a, w) = (0.3, 0.3);
        let f_q = |x: f64, y: f64| {
            let r2 = x * x + y * y;
            let e = (-r2 / (w * w)).exp();
            let f = a * e;
            let lap_f = f * (4.0 * r2 / w.powi(4) - 4.0 / (w * w));
            let grad2 = f * f * 4.0 * r2 / w.powi(4);
            lap_f + grad2
        };
        let mut errs = Vec::new();
        for n in [101, 201] {
            let g = build_zgrid(1.0, n).unwrap();
            let vals: Vec<f64> = (0..g.len())
                .map(|i| {
                    let p = g.point(i);
                    (2.0 * a * (-(p.norm_sqr()) / (w * w)).exp()).exp()
                })
                .collect();
            let q = q_from_sigma(&ConductivityField::new(g.clone(), vals).unwrap()).unwrap();
            let err = (0..g.len())
                .filter(|&i| g.inside(i))
                .map(|i| (q.values()[i] - f_q(g.point(i).re, g.point(i).im)).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        // second order: halving h quarters the error
        assert!(errs[1] < errs[0] / 3.5, "{errs:?}");
        assert!(errs[1] < 0.05, "{errs:?}");
    }
}
