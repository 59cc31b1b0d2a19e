//! Lippmann–Schwinger equation `μ + g_k * (q μ) = 1` on a periodic grid.
//!
//! The kernel `g_k` is truncated to a disc that covers every difference of
//! two points of Ω, so the periodic convolution of a function supported in Ω
//! agrees with the free-space one on Ω (Vainikko's trick).

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::potential::PotentialField;
use crate::cgo_boundary::greens::g_unchecked;
use crate::error::{Error, Result};
use crate::field::ConductivityField;
use crate::geometry::{KGrid, ZGrid};
use crate::numerics::quadrature::log_square_average;
use crate::numerics::{bicgstab, next_fast_len, relative_residual, Fft2, KrylovOptions, TARGET_FRACTION};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsConfig {
    /// Kernel truncation radius in unit-disc lengths; must be at least 2.
    pub truncation: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for LsConfig {
    fn default() -> Self {
        Self {
            truncation: 2.1,
            tolerance: 1e-6,
            max_iterations: 500,
        }
    }
}

/// Interior CGO solution `μ(·, k)` on the z-grid. Samples outside Ω are 1.
#[derive(Debug, Clone)]
pub struct InteriorCgoField {
    pub k: Complex64,
    pub mu: Vec<Complex64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Periodic square grid with the z-grid spacing on which the convolution runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    pub n: usize,
    /// Periodic index of z-grid row/column 0.
    pub offset: usize,
    /// Spacing in unit-disc lengths.
    pub spacing: f64,
}

impl PeriodicGrid {
    /// Smallest FFT-friendly grid with period at least `truncation + 2`.
    pub fn for_zgrid(grid: &ZGrid, truncation: f64) -> Result<Self> {
        if !(truncation >= 2.0) || !truncation.is_finite() {
            return Err(Error::InvalidParameter(format!("kernel truncation {truncation} must be >= 2")));
        }
        let h = grid.normalized_spacing();
        let need = ((truncation + 2.0) / h).ceil() as usize + 1;
        let n = next_fast_len(need.max(grid.n()));
        Ok(Self {
            n,
            offset: (n - grid.n()) / 2,
            spacing: h,
        })
    }

    fn embed(&self, grid: &ZGrid, idx: usize) -> usize {
        let (r, c) = grid.row_col(idx);
        (r + self.offset) * self.n + c + self.offset
    }

    fn signed(&self, i: usize) -> isize {
        if i < self.n.div_ceil(2) {
            i as isize
        } else {
            i as isize - self.n as isize
        }
    }
}

/// FFT of the truncated, `h²`-weighted kernel `g_k` on the periodic grid.
///
/// The sample at the origin is the cell average of the logarithmic
/// singularity.
pub fn periodized_gk(k: Complex64, grid: &PeriodicGrid, truncation: f64, fft: &Fft2) -> Result<Vec<Complex64>> {
    if k == C0 || !(k.re.is_finite() && k.im.is_finite()) {
        return Err(Error::InvalidParameter(format!("kernel needs finite k != 0, got {k}")));
    }
    let n = grid.n;
    let h = grid.spacing;
    let rt2 = truncation * truncation;
    let mut buf = vec![C0; n * n];
    for a in 0..n {
        let y = grid.signed(a) as f64 * h;
        if y * y > rt2 {
            continue;
        }
        for b in 0..n {
            let x = grid.signed(b) as f64 * h;
            if x * x + y * y > rt2 {
                continue;
            }
            buf[a * n + b] = if a == 0 && b == 0 {
                Complex64::new((-EULER_GAMMA - k.norm().ln() - log_square_average(h)) / (2.0 * PI), 0.0)
            } else {
                g_unchecked(Complex64::new(x, y), k)
            };
        }
    }
    let mut work = Vec::new();
    fft.forward(&mut buf, &mut work);
    let w = h * h;
    buf.iter_mut().for_each(|v| *v *= w);
    Ok(buf)
}

/// Solver for the Lippmann–Schwinger equation of one potential, reusable
/// across k.
#[derive(Debug, Clone)]
pub struct LsSolver {
    potential: Arc<PotentialField>,
    /// `√(σ/σ_bg)`, the k → 0 limit of `μ`, when the conductivity is known.
    zero_limit: Option<Arc<Vec<f64>>>,
    periodic: PeriodicGrid,
    fft: Fft2,
    support: Vec<usize>,
    support_periodic: Vec<usize>,
    inside_periodic: Vec<(usize, usize)>,
    cfg: LsConfig,
}

impl LsSolver {
    pub fn new(potential: PotentialField, cfg: LsConfig) -> Result<Self> {
        let grid = potential.grid().clone();
        let periodic = PeriodicGrid::for_zgrid(&grid, cfg.truncation)?;
        if !(cfg.tolerance > 0.0) || cfg.max_iterations == 0 {
            return Err(Error::InvalidParameter("Lippmann-Schwinger solver needs tolerance > 0 and iterations > 0".into()));
        }
        let support = potential.support();
        let support_periodic = support.iter().map(|&i| periodic.embed(&grid, i)).collect();
        let inside_periodic = grid.masked_indices().into_iter().map(|i| (i, periodic.embed(&grid, i))).collect();
        Ok(Self {
            potential: Arc::new(potential),
            zero_limit: None,
            fft: Fft2::new(periodic.n),
            periodic,
            support,
            support_periodic,
            inside_periodic,
            cfg,
        })
    }

    /// Solver for the potential of `sigma`, normalised by its boundary value
    /// `background`. Also enables k = 0, where `μ = √(σ/background)`.
    pub fn from_conductivity(sigma: &ConductivityField, background: f64, cfg: LsConfig) -> Result<Self> {
        if !(background > 0.0) {
            return Err(Error::InvalidParameter(format!("background {background} must be positive")));
        }
        let q = super::potential::q_from_sigma(sigma)?;
        let mut s = Self::new(q, cfg)?;
        let grid = sigma.grid();
        let limit = (0..grid.len())
            .map(|i| if grid.inside(i) { (sigma.values()[i] / background).sqrt() } else { 1.0 })
            .collect();
        s.zero_limit = Some(Arc::new(limit));
        Ok(s)
    }

    pub fn potential(&self) -> &PotentialField {
        &self.potential
    }

    pub fn periodic_grid(&self) -> PeriodicGrid {
        self.periodic
    }

    /// Solve for `μ(·, k)`, verifying the residual after the iteration.
    pub fn solve(&self, k: Complex64) -> Result<InteriorCgoField> {
        let grid = self.potential.grid();
        if self.support.is_empty() {
            return Ok(InteriorCgoField {
                k,
                mu: vec![C1; grid.len()],
                iterations: 0,
                residual: 0.0,
            });
        }
        if k == C0 {
            let limit = self.zero_limit.as_ref().ok_or_else(|| {
                Error::InvalidParameter("k = 0 needs the conductivity; build the solver with from_conductivity".into())
            })?;
            return Ok(InteriorCgoField {
                k,
                mu: limit.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
                iterations: 0,
                residual: 0.0,
            });
        }
        let ghat = periodized_gk(k, &self.periodic, self.cfg.truncation, &self.fft)?;
        let q = self.potential.values();
        let nn = self.periodic.n * self.periodic.n;
        let mut buf = vec![C0; nn];
        let mut work = Vec::new();
        let convolve = |src: &[Complex64], buf: &mut Vec<Complex64>, work: &mut Vec<Complex64>| {
            buf.iter_mut().for_each(|v| *v = C0);
            for ((&i, &p), &v) in self.support.iter().zip(&self.support_periodic).zip(src) {
                buf[p] = q[i] * v;
            }
            self.fft.forward(buf, work);
            buf.iter_mut().zip(&ghat).for_each(|(b, g)| *b *= g);
            self.fft.inverse(buf, work);
        };
        let mut op = |x: &[Complex64], out: &mut [Complex64]| {
            convolve(x, &mut buf, &mut work);
            for ((o, &p), &xi) in out.iter_mut().zip(&self.support_periodic).zip(x) {
                *o = xi + buf[p];
            }
        };
        let rhs = vec![C1; self.support.len()];
        let opts = KrylovOptions {
            tolerance: TARGET_FRACTION * self.cfg.tolerance,
            max_iterations: self.cfg.max_iterations,
        };
        let outcome = bicgstab(&mut op, &rhs, &rhs, opts);
        let residual = relative_residual(&mut op, &rhs, &outcome.solution);
        if !(residual <= self.cfg.tolerance) {
            return Err(Error::NotConverged {
                context: format!("Lippmann-Schwinger solve at k = {k}"),
                iterations: outcome.iterations,
                residual,
            });
        }
        // μ on the rest of Ω from the representation formula
        let mut buf = vec![C0; nn];
        let mut work = Vec::new();
        convolve(&outcome.solution, &mut buf, &mut work);
        let mut mu = vec![C1; grid.len()];
        for &(i, p) in &self.inside_periodic {
            mu[i] = C1 - buf[p];
        }
        for (&i, &v) in self.support.iter().zip(&outcome.solution) {
            mu[i] = v;
        }
        Ok(InteriorCgoField {
            k,
            mu,
            iterations: outcome.iterations,
            residual,
        })
    }

    /// `t_pr(k) = ∫ e^{i(kz + k̄z̄)} q μ dz` for a solved field.
    pub fn scattering(&self, field: &InteriorCgoField) -> Complex64 {
        let grid = self.potential.grid();
        let q = self.potential.values();
        let h = grid.normalized_spacing();
        let k = field.k;
        self.support
            .iter()
            .map(|&i| {
                let z = grid.normalized_point(i);
                Complex64::from_polar(q[i] * h * h, 2.0 * (k * z).re) * field.mu[i]
            })
            .sum()
    }

    /// Born approximation `∫ e^{i(kz + k̄z̄)} q dz`.
    pub fn born(&self, k: Complex64) -> Complex64 {
        let grid = self.potential.grid();
        let q = self.potential.values();
        let h = grid.normalized_spacing();
        self.support
            .iter()
            .map(|&i| Complex64::from_polar(q[i] * h * h, 2.0 * (k * grid.normalized_point(i)).re))
            .sum()
    }

    /// `t_pr` on every k-grid node with `0 < |k| ≤ r`, in index order.
    pub fn scattering_on_disc(&self, kgrid: &KGrid, r: f64) -> Result<Vec<(usize, Complex64)>> {
        kgrid
            .disc_indices(r)
            .into_par_iter()
            .map(|i| {
                let f = self.solve(kgrid.point(i))?;
                Ok((i, self.scattering(&f)))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_zgrid;

    fn bump(n: usize, amp: f64, w: f64) -> ConductivityField {
        let g = build_zgrid(1.0, n).unwrap();
        let vals = (0..g.len())
            .map(|i| {
                let r2 = g.point(i).norm_sqr();
                1.0 + amp * (-(r2 / (w * w))).exp() * if r2 < 0.81 { 1.0 } else { 0.0 }
            })
            .collect();
        ConductivityField::new(g, vals).unwrap()
    }

    #[test]
    fn zero_potential_gives_one() {
        let g = build_zgrid(1.0, 101).unwrap();
        let s = LsSolver::new(PotentialField::zero(g), LsConfig::default()).unwrap();
        let f = s.solve(Complex64::new(2.0, 1.0)).unwrap();
        assert!(f.mu.iter().all(|&v| v == C1));
        assert_eq!(s.scattering(&f), C0);
    }

    #[test]
    fn periodic_grid_covers_truncation() {
        let g = build_zgrid(1.0, 101).unwrap();
        let p = PeriodicGrid::for_zgrid(&g, 2.1).unwrap();
        assert!(p.n as f64 * p.spacing >= 4.1);
        assert!(PeriodicGrid::for_zgrid(&g, 1.5).is_err());
    }

    #[test]
    fn converges_and_satisfies_equation() {
        let s = LsSolver::from_conductivity(&bump(101, 0.5, 0.25), 1.0, LsConfig::default()).unwrap();
        for k in [Complex64::new(0.7, 0.2), Complex64::new(-3.0, 4.0)] {
            let f = s.solve(k).unwrap();
            assert!(f.residual <= 1e-6);
            assert!(f.mu.iter().all(|v| v.re.is_finite() && v.im.is_finite()));
        }
    }

    #[test]
    fn small_contrast_close_to_born() {
        let s = LsSolver::from_conductivity(&bump(101, 0.02, 0.25), 1.0, LsConfig::default()).unwrap();
        let k = Complex64::new(1.5, -0.5);
        let f = s.solve(k).unwrap();
        let t = s.scattering(&f);
        let b = s.born(k);
        assert!((t - b).norm() <= 0.05 * b.norm(), "t = {t}, born = {b}");
    }

    #[test]
    fn small_k_approaches_sqrt_sigma() {
        let sigma = bump(101, 0.5, 0.25);
        let s = LsSolver::from_conductivity(&sigma, 1.0, LsConfig::default()).unwrap();
        let f = s.solve(Complex64::new(0.01, 0.0)).unwrap();
        let g = sigma.grid();
        let i = g.index(50, 50);
        assert!((f.mu[i] - sigma.values()[i].sqrt()).norm() < 0.02, "{}", f.mu[i]);
    }
}
