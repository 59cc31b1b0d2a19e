//! Boundary integral equation for the CGO trace and the scattering transform
//! computed from DN data.
//!
//! Everything lives on the unit circle: electrode `l` sits at `e^{iθ_l}`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::greens::{greens_regular_part, greens_unchecked};
use crate::error::{Error, Result};
use crate::geometry::{DomainDisc, KGrid};
use crate::numerics::quadrature::log_chord_average;

/// Quadrature weight attached to each electrode node on the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryWeight {
    /// Node spacing Δθ: trapezoidal rule for the boundary integral.
    ArcSpacing,
    /// Electrode arc A: weights only the electrode-covered part.
    ElectrodeArc,
}

impl BoundaryWeight {
    /// Weight and half-angle of the boundary cell around each node.
    fn cell(self, domain: &DomainDisc) -> (f64, f64) {
        let w = match self {
            BoundaryWeight::ArcSpacing => domain.angular_spacing(),
            BoundaryWeight::ElectrodeArc => domain.normalized_electrode_arc(),
        };
        (w, 0.5 * w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BieConfig {
    pub weight: BoundaryWeight,
    /// Sub-samples per cell for the diagonal of Γ_k.
    pub subsamples: usize,
}

impl Default for BieConfig {
    fn default() -> Self {
        Self {
            weight: BoundaryWeight::ArcSpacing,
            subsamples: 8,
        }
    }
}

/// `Γ_k(l, l') ≈ ∫_{cell l'} G_k(z_l − ζ) ds(ζ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaddeevKernelMatrix {
    pub k: Complex64,
    pub gamma: DMatrix<f64>,
    pub subsamples: usize,
}

/// Off-diagonal entries are `w · G_k(z_l − z_l')`. On the diagonal the
/// logarithmic part of `G_k` is integrated exactly over the cell and the
/// bounded remainder is averaged over `subsamples` cell midpoints.
pub fn gamma_matrix(k: Complex64, domain: &DomainDisc, subsamples: usize, weight: BoundaryWeight) -> Result<FaddeevKernelMatrix> {
    if k == Complex64::new(0.0, 0.0) {
        return Err(Error::InvalidParameter("Γ_k is undefined at k = 0".into()));
    }
    if subsamples < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 sub-samples, got {subsamples}")));
    }
    let z = domain.normalized_centers();
    let l = z.len();
    let (w, half) = weight.cell(domain);

    // the regular part only depends on the offset from the node, which is
    // the same for every electrode after rotation
    let offsets: Vec<f64> = (0..subsamples)
        .map(|s| -half + (s as f64 + 0.5) * 2.0 * half / subsamples as f64)
        .collect();
    let log_mean = log_chord_average(1.0, half) / (2.0 * std::f64::consts::PI);
    let mut gamma = DMatrix::zeros(l, l);
    for a in 0..l {
        for b in 0..l {
            gamma[(a, b)] = if a == b {
                let theta = z[a].arg();
                let regular = offsets
                    .iter()
                    .map(|&o| greens_regular_part(z[a] - Complex64::from_polar(1.0, theta + o), k))
                    .sum::<f64>()
                    / subsamples as f64;
                w * (regular - log_mean)
            } else {
                w * greens_unchecked(z[a] - z[b], k)
            };
        }
    }
    Ok(FaddeevKernelMatrix { k, gamma, subsamples })
}

/// Solution of the boundary integral equation at one `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCgoTrace {
    pub k: Complex64,
    /// Coefficients of `ψ(·, k)|∂Ω` in the pattern basis.
    pub b: DVector<Complex64>,
    /// Coefficients of `e^{ikz}|∂Ω` in the pattern basis.
    pub c: DVector<Complex64>,
    pub residual: f64,
}

fn check_shapes(l_sigma: &DMatrix<f64>, l_one: &DMatrix<f64>, j: &DMatrix<f64>, domain: &DomainDisc) -> Result<()> {
    let n = j.ncols();
    if l_sigma.shape() != (n, n) || l_one.shape() != (n, n) || j.nrows() != domain.electrode_count() {
        return Err(Error::ShapeMismatch(format!(
            "DN maps {:?}/{:?} do not match a {}x{} pattern basis on {} electrodes",
            l_sigma.shape(),
            l_one.shape(),
            j.nrows(),
            n,
            domain.electrode_count()
        )));
    }
    Ok(())
}

/// Solve `[I + Jᵀ Γ_k J (L_σ − L_1)] b_k = c_k` by dense LU.
pub fn solve_bie(
    k: Complex64,
    l_sigma: &DMatrix<f64>,
    l_one: &DMatrix<f64>,
    j: &DMatrix<f64>,
    domain: &DomainDisc,
    cfg: &BieConfig,
) -> Result<BoundaryCgoTrace> {
    check_shapes(l_sigma, l_one, j, domain)?;
    let dl = l_sigma - l_one;
    solve_with_difference(k, &dl, j, domain, cfg)
}

fn solve_with_difference(k: Complex64, dl: &DMatrix<f64>, j: &DMatrix<f64>, domain: &DomainDisc, cfg: &BieConfig) -> Result<BoundaryCgoTrace> {
    let n = j.ncols();
    let z = domain.normalized_centers();
    let e: DVector<Complex64> = DVector::from_iterator(z.len(), z.iter().map(|&zl| (Complex64::new(0.0, 1.0) * k * zl).exp()));
    let jc = j.map(|x| Complex64::new(x, 0.0));
    let c = jc.transpose() * &e;

    let system = if dl.iter().all(|&x| x == 0.0) {
        DMatrix::identity(n, n)
    } else {
        let gamma = gamma_matrix(k, domain, cfg.subsamples, cfg.weight)?.gamma;
        DMatrix::identity(n, n) + j.transpose() * gamma * j * dl
    };
    let lu = system.clone().lu();
    let re = lu
        .solve(&c.map(|v| v.re))
        .ok_or_else(|| Error::Singular(format!("boundary integral system is singular at k = {k}")))?;
    let im = lu
        .solve(&c.map(|v| v.im))
        .ok_or_else(|| Error::Singular(format!("boundary integral system is singular at k = {k}")))?;
    let b = DVector::from_fn(n, |i, _| Complex64::new(re[i], im[i]));
    let r = system.map(|x| Complex64::new(x, 0.0)) * &b - &c;
    let residual = r.norm() / c.norm().max(f64::MIN_POSITIVE);
    if !(residual < 1e-10) {
        return Err(Error::NotConverged {
            context: format!("boundary integral solve at k = {k}"),
            iterations: 1,
            residual,
        });
    }
    Ok(BoundaryCgoTrace { k, b, c, residual })
}

/// `t(k) ≈ Σ_l e^{i k̄ z̄_l} [J (L_σ − L_1) b_k]_l · w`.
pub fn t_bie(
    trace: &BoundaryCgoTrace,
    l_sigma: &DMatrix<f64>,
    l_one: &DMatrix<f64>,
    j: &DMatrix<f64>,
    domain: &DomainDisc,
    cfg: &BieConfig,
) -> Result<ScatteringSample> {
    check_shapes(l_sigma, l_one, j, domain)?;
    if trace.b.len() != j.ncols() {
        return Err(Error::ShapeMismatch("trace does not match the pattern basis".into()));
    }
    Ok(t_from_difference(trace, &(l_sigma - l_one), j, domain, cfg))
}

fn t_from_difference(trace: &BoundaryCgoTrace, dl: &DMatrix<f64>, j: &DMatrix<f64>, domain: &DomainDisc, cfg: &BieConfig) -> ScatteringSample {
    let (w, _) = cfg.weight.cell(domain);
    let jdl = j * dl;
    let flux = jdl.map(|x| Complex64::new(x, 0.0)) * &trace.b;
    let k = trace.k;
    let t = domain
        .normalized_centers()
        .iter()
        .zip(flux.iter())
        .map(|(&zl, &f)| (Complex64::new(0.0, 1.0) * k.conj() * zl.conj()).exp() * f)
        .sum::<Complex64>()
        * w;
    ScatteringSample { k, t }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringSample {
    pub k: Complex64,
    pub t: Complex64,
}

/// Scattering transform from DN data on every k-grid node with `0 < |k| ≤ r1`.
///
/// Returns `(grid index, sample)` in increasing index order.
pub fn t_bie_on_disc(
    kgrid: &KGrid,
    r1: f64,
    l_sigma: &DMatrix<f64>,
    l_one: &DMatrix<f64>,
    j: &DMatrix<f64>,
    domain: &DomainDisc,
    cfg: &BieConfig,
) -> Result<Vec<(usize, ScatteringSample)>> {
    check_shapes(l_sigma, l_one, j, domain)?;
    let dl = l_sigma - l_one;
    kgrid
        .disc_indices(r1)
        .into_par_iter()
        .map(|i| {
            let k = kgrid.point(i);
            let trace = solve_with_difference(k, &dl, j, domain, cfg)?;
            Ok((i, t_from_difference(&trace, &dl, j, domain, cfg)))
        })
        .collect()
}

/// Write samples as `k_re,k_im,t_re,t_im`.
pub fn write_samples_csv(path: &Path, samples: &[ScatteringSample]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse(e.to_string()))?;
    w.write_record(["k_re", "k_im", "t_re", "t_im"]).map_err(|e| Error::Parse(e.to_string()))?;
    for s in samples {
        w.write_record([s.k.re, s.k.im, s.t.re, s.t.im].iter().map(|x| format!("{x:.17e}")))
            .map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::CurrentPatternBasis;

    fn setup() -> (DomainDisc, CurrentPatternBasis, DMatrix<f64>) {
        let d = DomainDisc::with_coverage(143.2, 32, 0.5).unwrap();
        let b = CurrentPatternBasis::adjacent(32).unwrap();
        // diagonal-ish stand-in for L_1 with |n| growth
        let l1 = DMatrix::from_fn(31, 31, |i, j| if i == j { (i / 2 + 1) as f64 } else { 0.0 });
        (d, b, l1)
    }

    #[test]
    fn gamma_entries_finite_and_diag_stable() {
        let d = DomainDisc::with_coverage(143.2, 32, 0.5).unwrap();
        let k = Complex64::new(1.0, 0.0);
        let g8 = gamma_matrix(k, &d, 8, BoundaryWeight::ArcSpacing).unwrap();
        assert!(g8.gamma.iter().all(|x| x.is_finite()));
        let g4 = gamma_matrix(k, &d, 4, BoundaryWeight::ArcSpacing).unwrap();
        for l in 0..32 {
            let (a, b) = (g8.gamma[(l, l)], g4.gamma[(l, l)]);
            assert!((a - b).abs() < 0.01 * a.abs(), "{a} {b}");
        }
        let w = d.angular_spacing();
        let z = d.normalized_centers();
        let direct = w * crate::cgo_boundary::faddeev_greens(z[3] - z[10], k).unwrap();
        assert_eq!(g8.gamma[(3, 10)], direct);
        assert!(gamma_matrix(Complex64::new(0.0, 0.0), &d, 8, BoundaryWeight::ArcSpacing).is_err());
    }

    #[test]
    fn homogeneous_data_is_exact() {
        let (d, b, l1) = setup();
        let cfg = BieConfig::default();
        for k in [Complex64::new(0.5, 0.2), Complex64::new(-2.0, 3.0)] {
            let tr = solve_bie(k, &l1, &l1, &b.j, &d, &cfg).unwrap();
            assert_eq!(tr.b, tr.c);
            let t = t_bie(&tr, &l1, &l1, &b.j, &d, &cfg).unwrap();
            assert_eq!(t.t, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn small_k_trace_near_one() {
        let (d, b, l1) = setup();
        let ls = &l1 * 0.9;
        let k = Complex64::new(1e-4, 0.0);
        let tr = solve_bie(k, &ls, &l1, &b.j, &d, &BieConfig::default()).unwrap();
        // J b carries ψ up to its mean, which the zero-sum basis cannot hold;
        // restoring the mean of e^{ikz} gives boundary values close to 1
        let z = d.normalized_centers();
        let mean = z.iter().map(|&zl| (Complex64::new(0.0, 1.0) * k * zl).exp()).sum::<Complex64>() / 32.0;
        let psi = b.j.map(|x| Complex64::new(x, 0.0)) * &tr.b;
        for v in psi.iter() {
            assert!((v + mean - 1.0).norm() < 1e-3);
        }
        assert!(tr.residual < 1e-10);
    }
}
