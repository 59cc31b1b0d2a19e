//! Real-valued samples on the z-grid and point-wise conductivity models.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::ZGrid;

/// Anything that can report a conductivity at a physical point (mm).
pub trait Conductivity: Sync {
    fn at(&self, p: Complex64) -> f64;
}

/// Spatially constant conductivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl Conductivity for Constant {
    fn at(&self, _p: Complex64) -> f64 {
        self.0
    }
}

/// Real samples on every node of a [`ZGrid`], stored in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductivityField {
    grid: ZGrid,
    values: Vec<f64>,
}

impl ConductivityField {
    pub fn new(grid: ZGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a grid with {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: ZGrid, value: f64) -> Self {
        let values = vec![value; grid.len()];
        Self { grid, values }
    }

    pub fn grid(&self) -> &ZGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Values at the Ω-masked nodes.
    pub fn masked_values(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(self.grid.mask())
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v)
            .collect()
    }

    /// (min, max) over the Ω-masked nodes.
    pub fn masked_range(&self) -> Result<(f64, f64)> {
        let vals = self.masked_values();
        if vals.is_empty() {
            return Err(Error::EmptySelection("no grid node lies inside the domain".into()));
        }
        Ok(vals
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))))
    }

    /// Bilinear interpolation; points outside the grid take the nearest edge value.
    pub fn sample(&self, p: Complex64) -> f64 {
        let n = self.grid.n();
        let h = self.grid.spacing();
        let r = self.grid.radius();
        let fx = ((p.re + r) / h).clamp(0.0, (n - 1) as f64);
        let fy = ((p.im + r) / h).clamp(0.0, (n - 1) as f64);
        let (c0, r0) = ((fx.floor() as usize).min(n - 2), (fy.floor() as usize).min(n - 2));
        let (tx, ty) = (fx - c0 as f64, fy - r0 as f64);
        let v = |row: usize, col: usize| self.values[self.grid.index(row, col)];
        (1.0 - ty) * ((1.0 - tx) * v(r0, c0) + tx * v(r0, c0 + 1)) + ty * ((1.0 - tx) * v(r0 + 1, c0) + tx * v(r0 + 1, c0 + 1))
    }
}

impl Conductivity for ConductivityField {
    fn at(&self, p: Complex64) -> f64 {
        self.sample(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_zgrid;

    #[test]
    fn bilinear_reproduces_linear_functions() {
        let g = build_zgrid(2.0, 21).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|i| 1.0 + 0.3 * g.point(i).re - 0.2 * g.point(i).im).collect();
        let f = ConductivityField::new(g, vals).unwrap();
        let p = Complex64::new(0.37, -1.13);
        assert!((f.sample(p) - (1.0 + 0.3 * p.re - 0.2 * p.im)).abs() < 1e-12);
    }

    #[test]
    fn range_uses_mask_only() {
        let g = build_zgrid(1.0, 5).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|i| if g.inside(i) { 1.0 } else { 9.0 }).collect();
        let f = ConductivityField::new(g, vals).unwrap();
        assert_eq!(f.masked_range().unwrap(), (1.0, 1.0));
    }
}
