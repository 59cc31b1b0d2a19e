//! Domains, electrode layout, organ polygons and the sampling grids shared by
//! the forward model, the scattering computations and the D-bar solver.
//!
//! Physical lengths are in millimetres. The scattering and D-bar solvers work
//! on the domain rescaled to the unit disc; [`ZGrid::normalized_point`] and
//! [`DomainDisc::normalized_centers`] provide that view.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Circular domain with `L` equally spaced electrodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainDisc {
    radius: f64,
    electrode_count: usize,
    electrode_arc: f64,
}

impl DomainDisc {
    /// `electrode_arc` is the arc length covered by one electrode (mm).
    pub fn new(radius: f64, electrode_count: usize, electrode_arc: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
        }
        if electrode_count < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 electrodes, got {electrode_count}"
            )));
        }
        let circumference = 2.0 * PI * radius;
        if !(electrode_arc > 0.0) || electrode_count as f64 * electrode_arc > circumference * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "electrode arc {electrode_arc} mm does not fit {electrode_count} electrodes on a circumference of {circumference:.3} mm"
            )));
        }
        Ok(Self {
            radius,
            electrode_count,
            electrode_arc,
        })
    }

    /// Electrodes covering the fraction `coverage` of the boundary.
    pub fn with_coverage(radius: f64, electrode_count: usize, coverage: f64) -> Result<Self> {
        if !(coverage > 0.0 && coverage <= 1.0) {
            return Err(Error::InvalidParameter(format!("coverage must lie in (0, 1], got {coverage}")));
        }
        let arc = coverage * 2.0 * PI * radius / electrode_count.max(1) as f64;
        Self::new(radius, electrode_count, arc)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn electrode_count(&self) -> usize {
        self.electrode_count
    }

    /// Electrode arc length A in mm.
    pub fn electrode_arc(&self) -> f64 {
        self.electrode_arc
    }

    /// Electrode arc length in units of the radius.
    pub fn normalized_electrode_arc(&self) -> f64 {
        self.electrode_arc / self.radius
    }

    /// Angular distance between neighbouring electrode centres.
    pub fn angular_spacing(&self) -> f64 {
        2.0 * PI / self.electrode_count as f64
    }

    /// Fraction of the boundary covered by electrodes.
    pub fn coverage(&self) -> f64 {
        self.electrode_arc * self.electrode_count as f64 / (2.0 * PI * self.radius)
    }

    pub fn electrode_angle(&self, l: usize) -> f64 {
        l as f64 * self.angular_spacing()
    }

    /// Electrode centres z_l in mm. Electrode 0 sits on the positive real axis.
    pub fn electrode_centers(&self) -> Vec<Complex64> {
        (0..self.electrode_count)
            .map(|l| Complex64::from_polar(self.radius, self.electrode_angle(l)))
            .collect()
    }

    /// Electrode centres on the unit circle.
    pub fn normalized_centers(&self) -> Vec<Complex64> {
        (0..self.electrode_count)
            .map(|l| Complex64::from_polar(1.0, self.electrode_angle(l)))
            .collect()
    }
}

/// Uniform square grid over `[-radius, radius]^2` with an Ω mask.
///
/// Sample `(row, col)` sits at `x = -radius + col*h`, `y = -radius + row*h`,
/// stored row-major with `y` increasing with the row index.
#[derive(Debug, Clone, PartialEq)]
pub struct ZGrid {
    n: usize,
    radius: f64,
    spacing: f64,
    mask: Vec<bool>,
}

/// Build the z-grid used for priors and reconstructions.
pub fn build_zgrid(radius: f64, n: usize) -> Result<ZGrid> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!("grid needs at least 2 points per side, got {n}")));
    }
    if n % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "grid size must be odd so the origin is a sample, got {n}"
        )));
    }
    let spacing = 2.0 * radius / (n - 1) as f64;
    let half = (n / 2) as i64;
    let mut mask = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            // integer offsets keep the membership test exact for lattice points
            let dx = col as i64 - half;
            let dy = row as i64 - half;
            mask.push(((dx * dx + dy * dy) as f64) <= (half * half) as f64 + 1e-9);
        }
    }
    Ok(ZGrid {
        n,
        radius,
        spacing,
        mask,
    })
}

impl ZGrid {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Grid spacing in mm.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Grid spacing in units of the radius.
    pub fn normalized_spacing(&self) -> f64 {
        self.spacing / self.radius
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.n + col
    }

    pub fn row_col(&self, idx: usize) -> (usize, usize) {
        (idx / self.n, idx % self.n)
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.radius + i as f64 * self.spacing
    }

    /// Physical coordinate of sample `idx` (mm).
    pub fn point(&self, idx: usize) -> Complex64 {
        let (row, col) = self.row_col(idx);
        Complex64::new(self.coordinate(col), self.coordinate(row))
    }

    /// Coordinate of sample `idx` in the unit-disc frame.
    pub fn normalized_point(&self, idx: usize) -> Complex64 {
        self.point(idx) / self.radius
    }

    pub fn points(&self) -> Vec<Complex64> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// `true` iff the sample lies in the closed disc Ω.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn inside(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    pub fn masked_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.mask[i]).collect()
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Uniform frequency grid `k = (a + i b) h`, `a, b ∈ [-p, p]`.
///
/// The origin is always a sample and is flagged as excluded: the D-bar
/// integrand is singular there.
#[derive(Debug, Clone, PartialEq)]
pub struct KGrid {
    half: usize,
    spacing: f64,
}

impl KGrid {
    pub fn new(half: usize, spacing: f64) -> Result<Self> {
        if half == 0 {
            return Err(Error::InvalidParameter("k-grid needs at least one point off the origin".into()));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidParameter(format!("k-grid spacing must be positive, got {spacing}")));
        }
        Ok(Self { half, spacing })
    }

    /// Grid with `m` points per side (odd) covering `[-extent, extent]^2`.
    pub fn with_extent(m: usize, extent: f64) -> Result<Self> {
        if m < 3 || m % 2 == 0 {
            return Err(Error::InvalidParameter(format!("k-grid size must be odd and >= 3, got {m}")));
        }
        let half = m / 2;
        Self::new(half, extent / half as f64)
    }

    /// Points per side.
    pub fn m(&self) -> usize {
        2 * self.half + 1
    }

    pub fn half(&self) -> usize {
        self.half
    }

    pub fn len(&self) -> usize {
        self.m() * self.m()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn extent(&self) -> f64 {
        self.half as f64 * self.spacing
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.m() + col
    }

    pub fn origin_index(&self) -> usize {
        self.index(self.half, self.half)
    }

    pub fn is_origin(&self, idx: usize) -> bool {
        idx == self.origin_index()
    }

    pub fn point(&self, idx: usize) -> Complex64 {
        let m = self.m();
        let (row, col) = (idx / m, idx % m);
        Complex64::new(
            (col as f64 - self.half as f64) * self.spacing,
            (row as f64 - self.half as f64) * self.spacing,
        )
    }

    pub fn points(&self) -> Vec<Complex64> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Samples with `|k| <= r`, origin included.
    pub fn disc_mask(&self, r: f64) -> Vec<bool> {
        (0..self.len()).map(|i| self.point(i).norm() <= r * (1.0 + 1e-12)).collect()
    }

    /// Indices with `0 < |k| <= r`.
    pub fn disc_indices(&self, r: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| !self.is_origin(i) && self.point(i).norm() <= r * (1.0 + 1e-12))
            .collect()
    }

    /// Smallest centred sub-grid whose samples cover the closed disc of radius `r`.
    pub fn cropped(&self, r: f64) -> KGrid {
        let half = ((r / self.spacing) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        KGrid {
            half: half.min(self.half),
            spacing: self.spacing,
        }
    }

    /// Map an index of `sub` (a cropped grid with the same spacing) into this grid.
    pub fn embed_index(&self, sub: &KGrid, idx: usize) -> usize {
        let m = sub.m();
        let (row, col) = (idx / m, idx % m);
        let off = self.half - sub.half;
        self.index(row + off, col + off)
    }
}

/// A labelled polygonal organ boundary (vertices in mm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonRegion {
    pub label: String,
    #[serde(with = "vertex_pairs")]
    pub vertices: Vec<Complex64>,
}

mod vertex_pairs {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|[x, y]| Complex64::new(x, y)).collect())
    }
}

impl PolygonRegion {
    pub fn new(label: impl Into<String>, vertices: Vec<Complex64>) -> Self {
        Self {
            label: label.into(),
            vertices,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.vertices.len() < 3 {
            return Err(Error::DegeneratePolygon {
                label: self.label.clone(),
                count: self.vertices.len(),
            });
        }
        Ok(())
    }

    /// Signed area (positive for counter-clockwise vertex order).
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                a.re * b.im - b.re * a.im
            })
            .sum::<f64>()
            * 0.5
    }

    /// Polygon scaled by `factor` about `center`.
    pub fn scaled(&self, center: Complex64, factor: f64) -> Self {
        Self {
            label: self.label.clone(),
            vertices: self.vertices.iter().map(|&v| center + (v - center) * factor).collect(),
        }
    }

    /// Split along the horizontal line `y = ordinate` into the parts above and below.
    ///
    /// Either part may come back with fewer than three vertices when the line
    /// misses the polygon; callers should drop those.
    pub fn split_horizontal(&self, ordinate: f64, upper_label: &str, lower_label: &str) -> (Self, Self) {
        let upper = clip_half_plane(&self.vertices, ordinate, true);
        let lower = clip_half_plane(&self.vertices, ordinate, false);
        (Self::new(upper_label, upper), Self::new(lower_label, lower))
    }
}

// Sutherland–Hodgman against a single horizontal half-plane.
fn clip_half_plane(vertices: &[Complex64], ordinate: f64, keep_above: bool) -> Vec<Complex64> {
    let inside = |p: &Complex64| if keep_above { p.im >= ordinate } else { p.im <= ordinate };
    let n = vertices.len();
    let mut out = Vec::with_capacity(n + 2);
    for i in 0..n {
        let cur = vertices[i];
        let prev = vertices[(i + n - 1) % n];
        let (cin, pin) = (inside(&cur), inside(&prev));
        if cin != pin {
            let t = (ordinate - prev.im) / (cur.im - prev.im);
            out.push(Complex64::new(prev.re + t * (cur.re - prev.re), ordinate));
        }
        if cin {
            out.push(cur);
        }
    }
    out.dedup_by(|a, b| (*a - *b).norm() < 1e-12);
    out
}

/// Point-in-polygon test by crossing number.
///
/// Points on an edge (within a relative tolerance) count as inside, so
/// rasterised masks are reproducible regardless of vertex order.
pub fn point_in_polygon(p: Complex64, poly: &PolygonRegion) -> Result<bool> {
    poly.validate()?;
    Ok(contains(p, &poly.vertices))
}

fn contains(p: Complex64, v: &[Complex64]) -> bool {
    let n = v.len();
    let scale = v.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = 1e-10 * scale;
    let mut inside = false;
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        if on_segment(p, a, b, tol) {
            return true;
        }
        if (a.im > p.im) != (b.im > p.im) {
            let x = a.re + (p.im - a.im) * (b.re - a.re) / (b.im - a.im);
            if p.re < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn on_segment(p: Complex64, a: Complex64, b: Complex64, tol: f64) -> bool {
    let ab = b - a;
    let ap = p - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return ap.norm() <= tol;
    }
    let cross = ab.re * ap.im - ab.im * ap.re;
    if cross.abs() > tol * len2.sqrt() {
        return false;
    }
    let t = (ab.re * ap.re + ab.im * ap.im) / len2;
    (-1e-12..=1.0 + 1e-12).contains(&t)
}

/// Grid samples lying inside (or on the boundary of) `region`.
pub fn region_mask(region: &PolygonRegion, grid: &ZGrid) -> Result<Vec<bool>> {
    region.validate()?;
    let (mut lo, mut hi) = (
        Complex64::new(f64::INFINITY, f64::INFINITY),
        Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
    );
    for v in &region.vertices {
        lo = Complex64::new(lo.re.min(v.re), lo.im.min(v.im));
        hi = Complex64::new(hi.re.max(v.re), hi.im.max(v.im));
    }
    let pad = 1e-9 * grid.radius();
    Ok((0..grid.len())
        .map(|i| {
            let p = grid.point(i);
            if p.re < lo.re - pad || p.re > hi.re + pad || p.im < lo.im - pad || p.im > hi.im + pad {
                false
            } else {
                contains(p, &region.vertices)
            }
        })
        .collect())
}

/// Organ geometry document: domain plus labelled polygons (mm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryDoc {
    pub radius: f64,
    pub electrode_count: usize,
    #[serde(default = "default_coverage")]
    pub electrode_coverage: f64,
    pub regions: Vec<PolygonRegion>,
}

fn default_coverage() -> f64 {
    0.5
}

impl GeometryDoc {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: GeometryDoc = serde_json::from_str(s)?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.domain()?;
        for r in &self.regions {
            r.validate()?;
            for v in &r.vertices {
                if v.norm() > self.radius * (1.0 + 1e-9) {
                    return Err(Error::InvalidParameter(format!(
                        "vertex ({:.2}, {:.2}) of '{}' lies outside the domain",
                        v.re, v.im, r.label
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<DomainDisc> {
        DomainDisc::with_coverage(self.radius, self.electrode_count, self.electrode_coverage)
    }

    pub fn region(&self, label: &str) -> Option<&PolygonRegion> {
        self.regions.iter().find(|r| r.label == label)
    }

    /// Replace the region `label` by its parts above/below `ordinate`,
    /// labelled `{label}_top` and `{label}_bottom`.
    pub fn split_region(&self, label: &str, ordinate: f64) -> Result<GeometryDoc> {
        let mut regions = Vec::with_capacity(self.regions.len() + 1);
        let mut found = false;
        for r in &self.regions {
            if r.label == label {
                found = true;
                let (top, bottom) =
                    r.split_horizontal(ordinate, &format!("{label}_top"), &format!("{label}_bottom"));
                for part in [top, bottom] {
                    if part.vertices.len() >= 3 {
                        regions.push(part);
                    }
                }
            } else {
                regions.push(r.clone());
            }
        }
        if !found {
            return Err(Error::InvalidParameter(format!("no region labelled '{label}' to split")));
        }
        Ok(GeometryDoc {
            regions,
            ..self.clone()
        })
    }
}
