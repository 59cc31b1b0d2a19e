//! Piecewise-constant conductivities from polygons and their mollification.

use num_complex::Complex64;

use super::{RegionValueMap, BACKGROUND};
use crate::error::{Error, Result};
use crate::field::{Conductivity, ConductivityField};
use crate::geometry::{region_mask, PolygonRegion, ZGrid};

fn precedence(label: &str) -> u8 {
    match label {
        l if l.contains("lung") => 0,
        "heart" => 2,
        "aorta" => 3,
        "spine" => 4,
        _ => 1,
    }
}

/// Regions in painting order: lungs, other regions, heart, aorta, spine.
/// Later regions win where polygons overlap; ties keep their input order.
pub fn ordered_regions(regions: &[PolygonRegion]) -> Vec<&PolygonRegion> {
    let mut v: Vec<&PolygonRegion> = regions.iter().collect();
    v.sort_by_key(|r| precedence(&r.label));
    v
}

fn check_values(regions: &[PolygonRegion], values: &RegionValueMap) -> Result<f64> {
    let bg = *values
        .get(BACKGROUND)
        .ok_or_else(|| Error::InvalidParameter("no background conductivity given".into()))?;
    for (k, v) in values {
        if !(*v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!("conductivity of '{k}' must be positive, got {v}")));
        }
    }
    for r in regions {
        if !values.contains_key(&r.label) {
            return Err(Error::InvalidParameter(format!("no conductivity given for region '{}'", r.label)));
        }
    }
    Ok(bg)
}

/// Background everywhere, region constants inside the polygons.
pub fn assemble_piecewise_sigma(regions: &[PolygonRegion], values: &RegionValueMap, grid: &ZGrid) -> Result<ConductivityField> {
    let bg = check_values(regions, values)?;
    let mut out = vec![bg; grid.len()];
    for r in ordered_regions(regions) {
        let v = values[&r.label];
        for (o, m) in out.iter_mut().zip(region_mask(r, grid)?) {
            if m {
                *o = v;
            }
        }
    }
    ConductivityField::new(grid.clone(), out)
}

/// The same piecewise-constant conductivity as a point-wise model, used to
/// drive the forward solver without rasterisation.
#[derive(Debug, Clone)]
pub struct PiecewiseConductivity {
    regions: Vec<(PolygonRegion, f64, [f64; 4])>,
    background: f64,
}

impl PiecewiseConductivity {
    pub fn new(regions: &[PolygonRegion], values: &RegionValueMap) -> Result<Self> {
        let background = check_values(regions, values)?;
        let mut list = Vec::new();
        for r in ordered_regions(regions).into_iter().rev() {
            r.validate()?;
            let bbox = r.vertices.iter().fold(
                [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY],
                |b, v| [b[0].min(v.re), b[1].max(v.re), b[2].min(v.im), b[3].max(v.im)],
            );
            list.push((r.clone(), values[&r.label], bbox));
        }
        Ok(Self {
            regions: list,
            background,
        })
    }
}

impl Conductivity for PiecewiseConductivity {
    fn at(&self, p: Complex64) -> f64 {
        for (r, v, b) in &self.regions {
            if p.re >= b[0] && p.re <= b[1] && p.im >= b[2] && p.im <= b[3] {
                if crate::geometry::point_in_polygon(p, r).unwrap_or(false) {
                    return *v;
                }
            }
        }
        self.background
    }
}

/// Gaussian smoothing with standard deviation `radius` (mm), truncated to a
/// disc of four standard deviations. Values beyond the grid are taken to be
/// `background`.
///
/// The radial truncation keeps the support of the smoothing exactly round, so
/// a field that is constant near the domain boundary stays constant there.
pub fn mollify(field: &ConductivityField, radius: f64, background: f64) -> Result<ConductivityField> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!("mollification radius must be non-negative, got {radius}")));
    }
    if radius == 0.0 {
        return Ok(field.clone());
    }
    let grid = field.grid();
    let n = grid.n() as isize;
    let s = radius / grid.spacing();
    let half = (4.0 * s).floor() as isize;
    let mut taps = Vec::new();
    for dy in -half..=half {
        for dx in -half..=half {
            let d2 = (dx * dx + dy * dy) as f64;
            if d2 <= 16.0 * s * s {
                taps.push((dy, dx, (-0.5 * d2 / (s * s)).exp()));
            }
        }
    }
    let total: f64 = taps.iter().map(|t| t.2).sum();
    taps.iter_mut().for_each(|t| t.2 /= total);

    let src = field.values();
    let out: Vec<f64> = (0..n * n)
        .map(|idx| {
            let (row, col) = (idx / n, idx % n);
            taps.iter()
                .map(|&(dy, dx, w)| {
                    let (r, c) = (row + dy, col + dx);
                    w * if r < 0 || c < 0 || r >= n || c >= n { background } else { src[(r * n + c) as usize] }
                })
                .sum()
        })
        .collect();
    ConductivityField::new(grid.clone(), out)
}

/// A prior: the piecewise-constant field and its mollified version.
#[derive(Debug, Clone)]
pub struct PriorField {
    pub sigma_tilde: ConductivityField,
    pub sigma_pr: ConductivityField,
    pub mollification_radius: f64,
    pub values: RegionValueMap,
}

impl PriorField {
    pub fn new(regions: &[PolygonRegion], values: RegionValueMap, grid: &ZGrid, radius: f64) -> Result<Self> {
        let sigma_tilde = assemble_piecewise_sigma(regions, &values, grid)?;
        let bg = values[BACKGROUND];
        let sigma_pr = mollify(&sigma_tilde, radius, bg)?;
        let prior = Self {
            sigma_tilde,
            sigma_pr,
            mollification_radius: radius,
            values,
        };
        prior.check()?;
        Ok(prior)
    }

    pub fn background(&self) -> f64 {
        self.values[BACKGROUND]
    }

    /// Positivity, bounds, and a constant background ring along the boundary.
    pub fn check(&self) -> Result<()> {
        let (lo, hi) = self
            .sigma_tilde
            .values()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let tol = 1e-12 * hi;
        if self.sigma_pr.values().iter().any(|&v| !(v > 0.0) || v < lo - tol || v > hi + tol) {
            return Err(Error::InvalidParameter("mollified prior leaves the range of the piecewise prior".into()));
        }
        let grid = self.sigma_pr.grid();
        let bg = self.background();
        let band = grid.radius() - 2.0 * grid.spacing();
        for i in 0..grid.len() {
            let r = grid.point(i).norm();
            if r >= band && grid.inside(i) && (self.sigma_pr.values()[i] - bg).abs() > 1e-10 * bg {
                return Err(Error::InvalidParameter(format!(
                    "prior is not constant near the boundary (|z| = {r:.1} mm, value {}); regions or mollifier reach the electrodes",
                    self.sigma_pr.values()[i]
                )));
            }
        }
        Ok(())
    }
}

/// Guessed constants per region, assembled and mollified.
pub fn blind_estimate_prior(regions: &[PolygonRegion], guesses: &RegionValueMap, grid: &ZGrid, radius: f64) -> Result<PriorField> {
    PriorField::new(regions, guesses.clone(), grid, radius)
}
