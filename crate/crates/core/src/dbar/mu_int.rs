//! Prior-averaged CGO solution `μ_int(z) = (1/πR2²) ∫_{|k|≤R2} μ_pr(z,k) dk`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cgo_interior::{InteriorCgoField, LsSolver};
use crate::error::{Error, Result};
use crate::geometry::{KGrid, ZGrid};
use crate::numerics::quadrature::disc_rect_area;

/// `μ_int` on the z-grid for one truncation radius. Exterior samples are 1.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MuIntField {
    pub r2: f64,
    pub values: Vec<Complex64>,
    /// Quadrature area over `πR2²`; 1 up to rounding with cell-fraction weights.
    pub area_ratio: f64,
}

impl MuIntField {
    /// `max |μ_int − 1|` over the samples inside Ω.
    pub fn deviation_from_one(&self, grid: &ZGrid) -> f64 {
        grid.masked_indices()
            .into_iter()
            .map(|i| (self.values[i] - 1.0).norm())
            .fold(0.0, f64::max)
    }
}

/// Quadrature weights for the average over `|k| ≤ r2`: the area of each
/// k-cell inside the disc over `πr2²`. Cells cut by the circle get their exact
/// fraction, so the weights sum to 1.
pub fn cell_weights(kgrid: &KGrid, r2: f64) -> Result<Vec<(usize, f64)>> {
    if !(r2 > 0.0) || !r2.is_finite() {
        return Err(Error::InvalidParameter(format!("R2 must be positive, got {r2}")));
    }
    let h = kgrid.spacing();
    if r2 > kgrid.extent() + 0.5 * h {
        return Err(Error::InvalidParameter(format!("k-grid extent {} does not cover the disc R2 = {r2}", kgrid.extent())));
    }
    let area = PI * r2 * r2;
    let mut out = Vec::new();
    for i in 0..kgrid.len() {
        let k = kgrid.point(i);
        let a = disc_rect_area(r2, k.re - 0.5 * h, k.re + 0.5 * h, k.im - 0.5 * h, k.im + 0.5 * h);
        if a <= 0.0 {
            continue;
        }
        out.push((i, a / area));
    }
    if out.is_empty() {
        return Err(Error::EmptySelection(format!("no k-cells inside R2 = {r2}")));
    }
    Ok(out)
}

/// `μ_int` from solved prior fields keyed by k-grid index.
pub fn compute_mu_int(
    fields: &BTreeMap<usize, InteriorCgoField>,
    r2: f64,
    kgrid: &KGrid,
    zgrid: &ZGrid,
) -> Result<MuIntField> {
    let weights = cell_weights(kgrid, r2)?;
    let mut values = vec![Complex64::new(0.0, 0.0); zgrid.len()];
    let mut ratio = 0.0;
    for (i, w) in weights {
        let f = fields
            .get(&i)
            .ok_or_else(|| Error::InvalidParameter(format!("no prior CGO solution at k = {}", kgrid.point(i))))?;
        if f.mu.len() != zgrid.len() {
            return Err(Error::ShapeMismatch(format!("CGO field has {} samples, z-grid {}", f.mu.len(), zgrid.len())));
        }
        values.iter_mut().zip(&f.mu).for_each(|(v, m)| *v += w * m);
        ratio += w;
    }
    finish(values, zgrid, r2, ratio)
}

fn finish(mut values: Vec<Complex64>, zgrid: &ZGrid, r2: f64, area_ratio: f64) -> Result<MuIntField> {
    for (i, v) in values.iter_mut().enumerate() {
        if !zgrid.inside(i) {
            *v = Complex64::new(1.0, 0.0);
        }
    }
    Ok(MuIntField { r2, values, area_ratio })
}

/// Statistics of the Lippmann–Schwinger solves behind a prior.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LsStats {
    pub solves: usize,
    pub max_residual: f64,
    pub max_iterations: usize,
}

/// Everything the D-bar stage needs from a prior: `t_pr` on the k-disc and
/// `μ_int` for each requested R2.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PriorScattering {
    pub t_pr: BTreeMap<usize, Complex64>,
    pub mu_int: Vec<MuIntField>,
    pub stats: LsStats,
}

impl PriorScattering {
    pub fn mu_int_for(&self, r2: f64) -> Option<&MuIntField> {
        self.mu_int.iter().find(|m| m.r2 == r2)
    }
}

const CHUNK: usize = 16;

/// Solve the prior's CGO problem on every k-cell touching the largest disc,
/// accumulating `t_pr` and all `μ_int` fields without storing `μ_pr`.
///
/// Partial sums are formed per fixed chunk of k-nodes and added in chunk
/// order, so the result does not depend on the thread count.
pub fn prior_scattering(solver: &LsSolver, kgrid: &KGrid, r2_list: &[f64]) -> Result<PriorScattering> {
    if r2_list.is_empty() {
        return Err(Error::InvalidParameter("no R2 values requested".into()));
    }
    let zgrid = solver.potential().grid().clone();
    let weights: Vec<BTreeMap<usize, f64>> =
        r2_list.iter().map(|&r| cell_weights(kgrid, r).map(|w| w.into_iter().collect())).collect::<Result<_>>()?;
    let mut nodes: Vec<usize> = weights.iter().flat_map(|w| w.keys().copied()).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let nz = zgrid.len();
    let partials: Vec<Result<(Vec<Vec<Complex64>>, Vec<(usize, Complex64)>, LsStats)>> = nodes
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut sums = vec![vec![Complex64::new(0.0, 0.0); nz]; r2_list.len()];
            let mut ts = Vec::with_capacity(chunk.len());
            let mut stats = LsStats::default();
            for &i in chunk {
                let f = solver.solve(kgrid.point(i))?;
                stats.solves += 1;
                stats.max_residual = stats.max_residual.max(f.residual);
                stats.max_iterations = stats.max_iterations.max(f.iterations);
                if !kgrid.is_origin(i) {
                    ts.push((i, solver.scattering(&f)));
                }
                for (s, w) in sums.iter_mut().zip(&weights) {
                    if let Some(&w) = w.get(&i) {
                        s.iter_mut().zip(&f.mu).for_each(|(v, m)| *v += w * m);
                    }
                }
            }
            Ok((sums, ts, stats))
        })
        .collect();
    let mut totals = vec![vec![Complex64::new(0.0, 0.0); nz]; r2_list.len()];
    let mut t_pr = BTreeMap::new();
    let mut stats = LsStats::default();
    for p in partials {
        let (sums, ts, st) = p?;
        for (t, s) in totals.iter_mut().zip(&sums) {
            t.iter_mut().zip(s).for_each(|(a, b)| *a += b);
        }
        t_pr.extend(ts);
        stats.solves += st.solves;
        stats.max_residual = stats.max_residual.max(st.max_residual);
        stats.max_iterations = stats.max_iterations.max(st.max_iterations);
    }
    let mu_int = totals
        .into_iter()
        .zip(r2_list.iter().zip(&weights))
        .map(|(v, (&r2, w))| finish(v, &zgrid, r2, w.values().sum()))
        .collect::<Result<_>>()?;
    Ok(PriorScattering { t_pr, mu_int, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgo_interior::{LsConfig, PotentialField};
    use crate::geometry::build_zgrid;

    #[test]
    fn weights_sum_to_one() {
        let kg = KGrid::with_extent(63, 10.25).unwrap();
        for r2 in [3.8, 5.0, 7.5, 10.0] {
            let s: f64 = cell_weights(&kg, r2).unwrap().iter().map(|p| p.1).sum();
            assert!((s - 1.0).abs() < 1e-12, "{r2}: {s}");
        }
        assert!(cell_weights(&kg, 11.0).is_err());
        assert!(cell_weights(&kg, 0.0).is_err());
    }

    #[test]
    fn constant_mu_gives_constant() {
        let kg = KGrid::with_extent(21, 5.0).unwrap();
        let zg = build_zgrid(1.0, 11).unwrap();
        let fields: BTreeMap<_, _> = (0..kg.len())
            .map(|i| {
                (i, InteriorCgoField { k: kg.point(i), mu: vec![Complex64::new(0.7, 0.1); zg.len()], iterations: 0, residual: 0.0 })
            })
            .collect();
        let m = compute_mu_int(&fields, 4.0, &kg, &zg).unwrap();
        for i in zg.masked_indices() {
            assert!((m.values[i] - Complex64::new(0.7, 0.1)).norm() < 1e-12);
        }
        assert!((m.area_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_potential_streams_ones() {
        let kg = KGrid::with_extent(21, 5.0).unwrap();
        let zg = build_zgrid(1.0, 21).unwrap();
        let s = LsSolver::new(PotentialField::zero(zg.clone()), LsConfig::default()).unwrap();
        let p = prior_scattering(&s, &kg, &[2.0, 4.0]).unwrap();
        assert!(p.t_pr.values().all(|t| *t == Complex64::new(0.0, 0.0)));
        for m in &p.mu_int {
            assert!(m.deviation_from_one(&zg) < 1e-12);
        }
    }
}
