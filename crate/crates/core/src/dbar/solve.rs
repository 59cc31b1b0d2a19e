//! The α-weighted D-bar integral equation
//! `μ − 𝒜(M conj μ) = α + (1−α) μ_int` at each z and the image `σ = μ(z,0)²`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mu_int::MuIntField;
use crate::cgo_interior::ScatteringTable;
use crate::error::{Error, Result};
use crate::field::ConductivityField;
use crate::geometry::{KGrid, ZGrid};
use crate::numerics::{bicgstab, next_fast_len, relative_residual, Fft2, KrylovOptions, TARGET_FRACTION};

const C0: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionParams {
    pub r1: f64,
    pub r2: f64,
    pub alpha: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl ReconstructionParams {
    /// Plain truncated D-bar: `R2 = R1`, `α = 1`.
    pub fn no_prior(r1: f64) -> Self {
        Self {
            r1,
            r2: r1,
            alpha: 1.0,
            tolerance: 1e-6,
            max_iterations: 500,
        }
    }

    pub fn with_prior(r1: f64, r2: f64, alpha: f64) -> Self {
        Self {
            r2,
            alpha,
            ..Self::no_prior(r1)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r1 > 0.0) || !self.r1.is_finite() {
            return Err(Error::InvalidParameter(format!("R1 must be positive, got {}", self.r1)));
        }
        if !(self.r2 >= self.r1) || !self.r2.is_finite() {
            return Err(Error::InvalidParameter(format!("R2 = {} must be at least R1 = {}", self.r2, self.r1)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("alpha = {} must lie in [0, 1]", self.alpha)));
        }
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(Error::InvalidParameter("solver tolerance and iteration cap must be positive".into()));
        }
        Ok(())
    }
}

/// `σ = Re μ0²` and the discarded `|Im μ0²|`.
pub fn sigma_from_mu(mu0: Complex64) -> (f64, f64) {
    let s = mu0 * mu0;
    (s.re, s.im.abs())
}

/// Solution at one z.
#[derive(Debug, Clone)]
pub struct DbarPoint {
    /// `μ(z, ·)` on the multiplier support, in [`DbarSolver::support`] order.
    pub mu: Vec<Complex64>,
    pub mu0: Complex64,
    pub iterations: usize,
    pub residual: f64,
}

/// Per-k data shared by all z: the multiplier `T(k)/(4πk̄)` and the FFT of
/// the Cauchy kernel on the zero-padded grid.
#[derive(Debug, Clone)]
pub struct DbarSolver {
    kgrid: KGrid,
    support: Vec<usize>,
    support_k: Vec<Complex64>,
    base: Vec<Complex64>,
    padded: usize,
    fft: Fft2,
    cauchy_hat: Vec<Complex64>,
    origin: usize,
    opts: KrylovOptions,
}

impl DbarSolver {
    /// Build from a scattering table; samples with `|k| > r2` must be zero.
    pub fn new(table: &ScatteringTable, params: &ReconstructionParams) -> Result<Self> {
        params.validate()?;
        let full = &table.kgrid;
        let kgrid = full.cropped(params.r2);
        let mut support = Vec::new();
        let mut support_k = Vec::new();
        let mut base = Vec::new();
        for i in 0..full.len() {
            let t = table.t[i];
            if t == C0 || full.is_origin(i) {
                continue;
            }
            let k = full.point(i);
            if k.norm() > params.r2 * (1.0 + 1e-12) {
                return Err(Error::InvalidParameter(format!("scattering sample at |k| = {} beyond R2 = {}", k.norm(), params.r2)));
            }
            if !(t.re.is_finite() && t.im.is_finite()) {
                return Err(Error::InvalidParameter(format!("non-finite scattering sample at k = {k}")));
            }
            // index in the cropped grid
            let off = full.half() - kgrid.half();
            let (row, col) = (i / full.m() - off, i % full.m() - off);
            support.push(kgrid.index(row, col));
            support_k.push(k);
            base.push(t / (4.0 * PI * k.conj()));
        }
        let m = kgrid.m();
        let padded = next_fast_len(2 * m - 1);
        let fft = Fft2::new(padded);
        let h = kgrid.spacing();
        let mut kernel = vec![C0; padded * padded];
        let span = m as isize - 1;
        for dr in -span..=span {
            for dc in -span..=span {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let d = Complex64::new(dc as f64 * h, dr as f64 * h);
                let r = dr.rem_euclid(padded as isize) as usize;
                let c = dc.rem_euclid(padded as isize) as usize;
                kernel[r * padded + c] = h * h / PI / d;
            }
        }
        let mut work = Vec::new();
        fft.forward(&mut kernel, &mut work);
        Ok(Self {
            origin: kgrid.origin_index(),
            kgrid,
            support,
            support_k,
            base,
            padded,
            fft,
            cauchy_hat: kernel,
            opts: KrylovOptions {
                tolerance: params.tolerance,
                max_iterations: params.max_iterations,
            },
        })
    }

    pub fn kgrid(&self) -> &KGrid {
        &self.kgrid
    }

    /// Cropped-grid indices where the multiplier is nonzero.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// `(𝒜 f)` at grid points `targets` for `f` given on the support.
    fn cauchy(&self, f: &[Complex64], buf: &mut Vec<Complex64>, work: &mut Vec<Complex64>) {
        let p = self.padded;
        let m = self.kgrid.m();
        buf.clear();
        buf.resize(p * p, C0);
        for (&i, &v) in self.support.iter().zip(f) {
            buf[(i / m) * p + i % m] = v;
        }
        self.fft.forward(buf, work);
        buf.iter_mut().zip(&self.cauchy_hat).for_each(|(b, k)| *b *= k);
        self.fft.inverse(buf, work);
    }

    fn read(&self, buf: &[Complex64], i: usize) -> Complex64 {
        let m = self.kgrid.m();
        buf[(i / m) * self.padded + i % m]
    }

    /// Solve at one z (unit-disc coordinates) with right-hand side `rhs`.
    pub fn solve_at(&self, z: Complex64, rhs: Complex64) -> Result<DbarPoint> {
        if self.support.is_empty() {
            return Ok(DbarPoint {
                mu: Vec::new(),
                mu0: rhs,
                iterations: 0,
                residual: 0.0,
            });
        }
        let mult: Vec<Complex64> = self
            .base
            .iter()
            .zip(&self.support_k)
            .map(|(b, k)| b * Complex64::from_polar(1.0, -2.0 * (k * z).re))
            .collect();
        let mut buf = Vec::new();
        let mut work = Vec::new();
        let mut f = vec![C0; self.support.len()];
        let mut op = |x: &[Complex64], out: &mut [Complex64]| {
            for ((fi, m), xi) in f.iter_mut().zip(&mult).zip(x) {
                *fi = m * xi.conj();
            }
            self.cauchy(&f, &mut buf, &mut work);
            for ((o, &i), xi) in out.iter_mut().zip(&self.support).zip(x) {
                *o = xi - self.read(&buf, i);
            }
        };
        let b = vec![rhs; self.support.len()];
        let target = KrylovOptions {
            tolerance: TARGET_FRACTION * self.opts.tolerance,
            ..self.opts
        };
        let outcome = bicgstab(&mut op, &b, &b, target);
        let residual = relative_residual(&mut op, &b, &outcome.solution);
        if !(residual <= self.opts.tolerance) {
            return Err(Error::NotConverged {
                context: format!("D-bar solve at z = {z}"),
                iterations: outcome.iterations,
                residual,
            });
        }
        let f: Vec<Complex64> = mult.iter().zip(&outcome.solution).map(|(m, x)| m * x.conj()).collect();
        let mut buf = Vec::new();
        let mut work = Vec::new();
        self.cauchy(&f, &mut buf, &mut work);
        let mu0 = rhs + self.read(&buf, self.origin);
        Ok(DbarPoint {
            mu: outcome.solution,
            mu0,
            iterations: outcome.iterations,
            residual,
        })
    }
}

/// Right-hand side `α + (1−α) μ_int`. At `α = 1` it is exactly 1 whatever
/// `μ_int` holds.
pub fn dbar_rhs(alpha: f64, mu_int: Complex64) -> Complex64 {
    if alpha == 1.0 {
        Complex64::new(1.0, 0.0)
    } else {
        alpha + (1.0 - alpha) * mu_int
    }
}

/// Solve at one z with the table and parameters; builds a one-off solver.
pub fn solve_dbar_at_z(z: Complex64, table: &ScatteringTable, params: &ReconstructionParams, mu_int: Complex64) -> Result<DbarPoint> {
    DbarSolver::new(table, params)?.solve_at(z, dbar_rhs(params.alpha, mu_int))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionDiagnostics {
    pub pixels: usize,
    /// z-grid indices whose solve failed; they carry the closed-form value
    /// `Re rhs²` (the solution for T ≡ 0).
    pub failed: Vec<usize>,
    pub max_residual: f64,
    pub max_iterations: usize,
    /// Median over Ω of `|Im μ0²| / |μ0²|`.
    pub median_imag_ratio: f64,
    pub max_imag_ratio: f64,
    /// Quadrature area ratio of the `μ_int` used, if any.
    pub mu_int_area_ratio: Option<f64>,
}

/// Reconstructed conductivity on the z-grid in S/m; exterior samples carry
/// the normalisation value (unit normalised conductivity).
#[derive(Debug, Clone)]
pub struct ConductivityImage {
    pub sigma: ConductivityField,
    pub params: ReconstructionParams,
    /// Conductivity scale the data were normalised by.
    pub scale: f64,
    pub diagnostics: ReconstructionDiagnostics,
}

/// Largest tolerated fraction of failed pixels.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

/// Solve the D-bar equation at every z in Ω and form `σ = scale · Re μ(z,0)²`.
///
/// `mu_int` is required when `α < 1` and ignored at `α = 1`.
pub fn reconstruct(
    table: &ScatteringTable,
    params: &ReconstructionParams,
    mu_int: Option<&MuIntField>,
    zgrid: &ZGrid,
    scale: f64,
) -> Result<ConductivityImage> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidParameter(format!("conductivity scale must be positive, got {scale}")));
    }
    let solver = DbarSolver::new(table, params)?;
    let mu_int = if params.alpha < 1.0 {
        let m = mu_int.ok_or_else(|| Error::InvalidParameter(format!("alpha = {} needs mu_int", params.alpha)))?;
        if m.values.len() != zgrid.len() {
            return Err(Error::ShapeMismatch(format!("mu_int has {} samples, z-grid {}", m.values.len(), zgrid.len())));
        }
        if (m.r2 - params.r2).abs() > 1e-12 * params.r2 {
            return Err(Error::InvalidParameter(format!("mu_int computed for R2 = {}, reconstruction uses {}", m.r2, params.r2)));
        }
        Some(m)
    } else {
        None
    };
    let pixels = zgrid.masked_indices();
    let results: Vec<(usize, Complex64, Result<DbarPoint>)> = pixels
        .par_iter()
        .map(|&i| {
            let m = mu_int.map_or(Complex64::new(1.0, 0.0), |m| m.values[i]);
            let rhs = dbar_rhs(params.alpha, m);
            (i, rhs, solver.solve_at(zgrid.normalized_point(i), rhs))
        })
        .collect();
    let mut values = vec![scale; zgrid.len()];
    let mut diag = ReconstructionDiagnostics {
        pixels: pixels.len(),
        mu_int_area_ratio: mu_int.map(|m| m.area_ratio),
        ..Default::default()
    };
    let mut ratios = Vec::with_capacity(pixels.len());
    let mut first_error = None;
    for (i, rhs, r) in results {
        match r {
            Ok(p) => {
                let (s, im) = sigma_from_mu(p.mu0);
                values[i] = scale * s;
                ratios.push(im / (p.mu0 * p.mu0).norm().max(f64::MIN_POSITIVE));
                diag.max_residual = diag.max_residual.max(p.residual);
                diag.max_iterations = diag.max_iterations.max(p.iterations);
            }
            Err(e) => {
                values[i] = scale * (rhs * rhs).re;
                diag.failed.push(i);
                first_error.get_or_insert(e);
            }
        }
    }
    if diag.failed.len() as f64 > MAX_FAILURE_FRACTION * pixels.len() as f64 {
        let e = first_error.expect("failures recorded");
        return Err(Error::Stage {
            stage: format!("D-bar: {} of {} pixels failed", diag.failed.len(), pixels.len()),
            source: Box::new(e),
        });
    }
    ratios.sort_by(f64::total_cmp);
    diag.median_imag_ratio = ratios.get(ratios.len() / 2).copied().unwrap_or(0.0);
    diag.max_imag_ratio = ratios.last().copied().unwrap_or(0.0);
    Ok(ConductivityImage {
        sigma: ConductivityField::new(zgrid.clone(), values)?,
        params: *params,
        scale,
        diagnostics: diag,
    })
}
