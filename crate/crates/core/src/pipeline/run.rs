//! The a priori D-bar pipeline: simulate, build the scattering data, build the
//! prior, and reconstruct over the (R2, α) sweep.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cache::{hash_f64s, Cache};
use super::config::{ExperimentConfig, Normalization, PriorMethod};
use super::metrics::{compute_metrics, Metrics};
use crate::cgo_boundary::t_bie_on_disc;
use crate::cgo_interior::{assemble_piecewise_t, LsSolver};
use crate::dbar::{prior_scattering, reconstruct, ConductivityImage, LsStats, PriorScattering, ReconstructionParams};
use crate::error::{Error, Result, StageExt};
use crate::field::{ConductivityField, Constant};
use crate::forward::{
    add_noise, best_fit_scale, homogeneous_dn, simulate_voltages, CurrentPatternBasis, DiscMesh, DnMap, FemProblem,
};
use crate::geometry::{DomainDisc, GeometryDoc, KGrid, PolygonRegion, ZGrid};
use crate::prior::{
    assemble_piecewise_sigma, blind_estimate_prior, build_extraction_prior, iterate_prior, PiecewiseConductivity,
    PriorField,
};

/// Dense matrix in a serialisable form.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct MatrixData {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl From<&DMatrix<f64>> for MatrixData {
    fn from(m: &DMatrix<f64>) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.as_slice().to_vec(),
        }
    }
}

impl From<MatrixData> for DMatrix<f64> {
    fn from(m: MatrixData) -> Self {
        DMatrix::from_vec(m.rows, m.cols, m.data)
    }
}

/// Seed of the noise draw for one noise level.
pub fn noise_seed(seed: u64, level: f64) -> u64 {
    seed ^ level.to_bits().rotate_left(17)
}

/// Simulated electrode data of one noise case, normalised for the D-bar stage.
#[derive(Debug, Clone)]
pub struct MeasuredData {
    pub noise_level: f64,
    pub seed: u64,
    pub dn: DnMap,
    /// Conductivity scale σ₀; the D-bar stage sees σ/σ₀.
    pub scale: f64,
    /// DN matrix of σ/σ₀.
    pub dn_normalized: DMatrix<f64>,
}

/// Shared, read-only context of an experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub phantom_geometry: GeometryDoc,
    pub phantom_regions: Vec<PolygonRegion>,
    pub prior_geometry: GeometryDoc,
    pub domain: DomainDisc,
    pub basis: CurrentPatternBasis,
    pub zgrid: ZGrid,
    pub kgrid: KGrid,
    pub reference: DnMap,
    /// Phantom rasterised on the z-grid, for metrics.
    pub truth: ConductivityField,
    cache: Cache,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let cache = Cache::new(config.cache.as_deref())?;
        let phantom_geometry = config.phantom.geometry().stage("phantom")?;
        let phantom_regions = config.phantom.regions().stage("phantom")?;
        let prior_geometry = config.prior_geometry().stage("prior geometry")?;
        let domain = phantom_geometry.domain()?;
        let basis = CurrentPatternBasis::adjacent(domain.electrode_count())?;
        let zgrid = config.zgrid(domain.radius())?;
        let kgrid = config.kgrid()?;
        let key = (
            "reference",
            domain.radius(),
            domain.electrode_count(),
            domain.electrode_arc(),
            &config.forward,
        );
        let nd: MatrixData = cache
            .get_or_compute("dn", &key, || {
                let dn = homogeneous_dn(&domain, &basis, &config.forward.reference_mesh, config.forward.contact_impedance)?;
                Ok(MatrixData::from(&dn.nd))
            })
            .stage("reference DN map")?;
        let reference = DnMap::from_nd(nd.into()).stage("reference DN map")?;
        let truth = assemble_piecewise_sigma(&phantom_regions, &config.phantom.values(), &zgrid).stage("phantom")?;
        Ok(Self {
            config,
            phantom_geometry,
            phantom_regions,
            prior_geometry,
            domain,
            basis,
            zgrid,
            kgrid,
            reference,
            truth,
            cache,
        })
    }

    /// Simulate electrode data for the phantom at `noise_level`.
    pub fn measure(&self, noise_level: f64) -> Result<MeasuredData> {
        let cfg = &self.config;
        let seed = noise_seed(cfg.seed, noise_level);
        let key = ("measure", &self.phantom_regions, cfg.phantom.values(), &cfg.forward, self.domain.electrode_arc(), noise_level, seed);
        let nd: MatrixData = self
            .cache
            .get_or_compute("dn", &key, || {
                let sigma = PiecewiseConductivity::new(&self.phantom_regions, &cfg.phantom.values())?;
                let mesh = Arc::new(DiscMesh::build(
                    self.domain.electrode_count(),
                    self.domain.normalized_electrode_arc(),
                    &cfg.forward.data_mesh,
                )?);
                let problem = FemProblem::new(&self.domain, mesh, &sigma, cfg.forward.contact_impedance)?;
                let mut frame = simulate_voltages(&problem, &self.basis)?;
                if noise_level > 0.0 {
                    frame = add_noise(&frame, noise_level, seed)?;
                }
                Ok(MatrixData::from(&DnMap::from_frame(&self.basis, &frame, &self.domain)?.nd))
            })
            .stage("forward simulation")?;
        self.measured_from_nd(nd.into(), noise_level, seed)
    }

    /// Normalise an ND matrix measured elsewhere.
    pub fn measured_from_nd(&self, nd: DMatrix<f64>, noise_level: f64, seed: u64) -> Result<MeasuredData> {
        let dn = DnMap::from_nd(nd).stage("DN map")?;
        let scale = match self.config.normalization {
            Normalization::BestFit => best_fit_scale(&dn.nd, &self.reference.nd).stage("normalisation")?,
            Normalization::Known { value } => value,
        };
        let dn_normalized = &dn.dn / scale;
        Ok(MeasuredData {
            noise_level,
            seed,
            dn,
            scale,
            dn_normalized,
        })
    }

    /// `t_bie` on `0 < |k| ≤ R1`.
    pub fn boundary_scattering(&self, data: &MeasuredData) -> Result<BTreeMap<usize, Complex64>> {
        let cfg = &self.config;
        let key = (
            "tbie",
            hash_f64s(data.dn_normalized.as_slice()),
            hash_f64s(self.reference.dn.as_slice()),
            self.kgrid.m(),
            cfg.k_extent,
            cfg.r1,
            &cfg.bie,
        );
        let samples: Vec<(usize, Complex64)> = self
            .cache
            .get_or_compute("tbie", &key, || {
                let s = t_bie_on_disc(
                    &self.kgrid,
                    cfg.r1,
                    &data.dn_normalized,
                    &self.reference.dn,
                    &self.basis.j,
                    &self.domain,
                    &cfg.bie,
                )?;
                Ok(s.into_iter().map(|(i, s)| (i, s.t)).collect())
            })
            .stage("boundary scattering")?;
        Ok(samples.into_iter().collect())
    }

    fn params(&self, r2: f64, alpha: f64) -> ReconstructionParams {
        ReconstructionParams {
            r1: self.config.r1,
            r2,
            alpha,
            tolerance: self.config.dbar_tolerance,
            max_iterations: self.config.max_iterations,
        }
    }

    /// Regularised D-bar image without prior information.
    pub fn reconstruct_no_prior(&self, data: &MeasuredData, t_bie: &BTreeMap<usize, Complex64>) -> Result<ConductivityImage> {
        let r1 = self.config.r1;
        let table = assemble_piecewise_t(&self.kgrid, r1, r1, t_bie, &BTreeMap::new())?;
        reconstruct(&table, &self.params(r1, 1.0), None, &self.zgrid, data.scale).stage("D-bar without prior")
    }

    pub fn blind_prior(&self) -> Result<PriorField> {
        blind_estimate_prior(
            &self.prior_geometry.regions,
            &self.config.blind_values,
            &self.zgrid,
            self.config.mollification_radius,
        )
        .stage("blind prior")
    }

    pub fn extraction_prior(&self, recon: &ConductivityField) -> Result<PriorField> {
        build_extraction_prior(
            recon,
            &self.prior_geometry,
            &self.config.extraction,
            &self.zgrid,
            self.config.mollification_radius,
        )
        .stage("extraction prior")
    }

    pub fn iterated_prior(&self, recon: &ConductivityField) -> Result<PriorField> {
        iterate_prior(
            recon,
            &self.prior_geometry,
            &self.config.extraction,
            &self.zgrid,
            self.config.mollification_radius,
        )
        .stage("iterated prior")
    }

    /// `t_pr` and `μ_int` of a prior for the given R2 values.
    pub fn prior_scattering(&self, prior: &PriorField, r2_list: &[f64]) -> Result<PriorScattering> {
        let cfg = &self.config;
        let key = (
            "prior",
            hash_f64s(prior.sigma_pr.values()),
            prior.background(),
            self.zgrid.n(),
            self.kgrid.m(),
            cfg.k_extent,
            r2_list,
            cfg.ls_truncation,
            cfg.ls_tolerance,
            cfg.max_iterations,
        );
        self.cache
            .get_or_compute("prior", &key, || {
                let solver = LsSolver::from_conductivity(&prior.sigma_pr, prior.background(), cfg.ls_config())?;
                prior_scattering(&solver, &self.kgrid, r2_list)
            })
            .stage("prior scattering")
    }

    /// A priori image for one (R2, α).
    pub fn reconstruct_with_prior(
        &self,
        data: &MeasuredData,
        t_bie: &BTreeMap<usize, Complex64>,
        prior: &PriorScattering,
        r2: f64,
        alpha: f64,
    ) -> Result<ConductivityImage> {
        let table = assemble_piecewise_t(&self.kgrid, self.config.r1, r2, t_bie, &prior.t_pr)?;
        let mu_int = prior
            .mu_int_for(r2)
            .ok_or_else(|| Error::InvalidParameter(format!("prior scattering lacks mu_int for R2 = {r2}")))?;
        reconstruct(&table, &self.params(r2, alpha), Some(mu_int), &self.zgrid, data.scale)
    }

    /// Every (R2, α) cell; failures are recorded per cell.
    pub fn sweep(&self, data: &MeasuredData, t_bie: &BTreeMap<usize, Complex64>, prior: &PriorScattering) -> Vec<SweepCell> {
        let mut cells = Vec::new();
        for &r2 in &self.config.r2 {
            for &alpha in &self.config.alpha {
                let t = Instant::now();
                let result = self.reconstruct_with_prior(data, t_bie, prior, r2, alpha);
                cells.push(SweepCell::from_result(r2, alpha, result, self, t.elapsed().as_secs_f64()));
            }
        }
        cells
    }

    pub fn metrics(&self, image: &ConductivityImage) -> Result<Metrics> {
        compute_metrics(image, &self.truth, &self.phantom_regions)
    }

    /// Constant-conductivity data, for checks of the homogeneous case.
    pub fn measure_constant(&self, value: f64) -> Result<MeasuredData> {
        let mesh = Arc::new(DiscMesh::build(
            self.domain.electrode_count(),
            self.domain.normalized_electrode_arc(),
            &self.config.forward.data_mesh,
        )?);
        let problem = FemProblem::new(&self.domain, mesh, &Constant(value), self.config.forward.contact_impedance)?;
        let frame = simulate_voltages(&problem, &self.basis)?;
        self.measured_from_nd(DnMap::from_frame(&self.basis, &frame, &self.domain)?.nd, 0.0, 0)
    }
}

/// One (R2, α) reconstruction of a sweep.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub r2: f64,
    pub alpha: f64,
    pub image: Option<ConductivityImage>,
    pub metrics: Option<Metrics>,
    pub error: Option<String>,
    pub seconds: f64,
}

impl SweepCell {
    fn from_result(r2: f64, alpha: f64, result: Result<ConductivityImage>, exp: &Experiment, seconds: f64) -> Self {
        match result.and_then(|img| exp.metrics(&img).map(|m| (img, m))) {
            Ok((img, m)) => Self {
                r2,
                alpha,
                image: Some(img),
                metrics: Some(m),
                error: None,
                seconds,
            },
            Err(e) => {
                log::warn!("sweep cell R2 = {r2}, alpha = {alpha} failed: {e}");
                Self {
                    r2,
                    alpha,
                    image: None,
                    metrics: None,
                    error: Some(e.to_string()),
                    seconds,
                }
            }
        }
    }
}

/// Prior used in one sweep and its results.
#[derive(Debug, Clone)]
pub struct PriorRun {
    /// `blind`, `extract` or `iterate`.
    pub label: String,
    pub prior: PriorField,
    pub ls_stats: LsStats,
    /// `(R2, max_Ω |μ_int − 1|)`.
    pub mu_int_deviation: Vec<(f64, f64)>,
    pub cells: Vec<SweepCell>,
}

/// Everything computed for one noise level.
#[derive(Debug, Clone)]
pub struct NoiseCase {
    pub noise_level: f64,
    pub seed: u64,
    pub scale: f64,
    pub baseline: ConductivityImage,
    pub baseline_metrics: Metrics,
    pub priors: Vec<PriorRun>,
    /// Wall-clock seconds per stage.
    pub timings: Vec<(String, f64)>,
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub config: ExperimentConfig,
    pub cases: Vec<NoiseCase>,
}

fn prior_run(exp: &Experiment, label: &str, prior: PriorField, data: &MeasuredData, t_bie: &BTreeMap<usize, Complex64>, timings: &mut Vec<(String, f64)>) -> Result<PriorRun> {
    let t = Instant::now();
    let sc = exp.prior_scattering(&prior, &exp.config.r2)?;
    timings.push((format!("{label}: prior scattering"), t.elapsed().as_secs_f64()));
    let t = Instant::now();
    let cells = exp.sweep(data, t_bie, &sc);
    timings.push((format!("{label}: sweep"), t.elapsed().as_secs_f64()));
    Ok(PriorRun {
        label: label.into(),
        mu_int_deviation: sc.mu_int.iter().map(|m| (m.r2, m.deviation_from_one(&exp.zgrid))).collect(),
        ls_stats: sc.stats,
        prior,
        cells,
    })
}

/// Run the configured method for one noise level.
pub fn run_noise_case(exp: &Experiment, noise_level: f64) -> Result<NoiseCase> {
    let mut timings = Vec::new();
    let t = Instant::now();
    let data = exp.measure(noise_level)?;
    timings.push(("forward".into(), t.elapsed().as_secs_f64()));
    let t = Instant::now();
    let t_bie = exp.boundary_scattering(&data)?;
    timings.push(("boundary scattering".into(), t.elapsed().as_secs_f64()));
    let t = Instant::now();
    let baseline = exp.reconstruct_no_prior(&data, &t_bie)?;
    let baseline_metrics = exp.metrics(&baseline)?;
    timings.push(("D-bar without prior".into(), t.elapsed().as_secs_f64()));
    let mut priors = Vec::new();
    match exp.config.prior {
        PriorMethod::None => {}
        PriorMethod::Blind => priors.push(prior_run(exp, "blind", exp.blind_prior()?, &data, &t_bie, &mut timings)?),
        PriorMethod::Extract => {
            let prior = exp.extraction_prior(&baseline.sigma)?;
            priors.push(prior_run(exp, "extract", prior, &data, &t_bie, &mut timings)?);
        }
        PriorMethod::Iterate => {
            let blind = prior_run(exp, "blind", exp.blind_prior()?, &data, &t_bie, &mut timings)?;
            let src = exp.config.iterate_from;
            let source = match blind.cells.iter().find(|c| c.r2 == src.r2 && c.alpha == src.alpha) {
                Some(SweepCell { image: Some(img), .. }) => img.sigma.clone(),
                _ => {
                    // the source cell is not part of the sweep (or failed there)
                    let sc = exp.prior_scattering(&blind.prior, &[src.r2])?;
                    exp.reconstruct_with_prior(&data, &t_bie, &sc, src.r2, src.alpha)
                        .stage("iteration source image")?
                        .sigma
                }
            };
            let prior = exp.iterated_prior(&source)?;
            priors.push(blind);
            priors.push(prior_run(exp, "iterate", prior, &data, &t_bie, &mut timings)?);
        }
    }
    Ok(NoiseCase {
        noise_level,
        seed: data.seed,
        scale: data.scale,
        baseline,
        baseline_metrics,
        priors,
        timings,
    })
}

/// Full pipeline over all noise levels.
pub fn run_pipeline(config: &ExperimentConfig) -> Result<PipelineResult> {
    let exp = Experiment::new(config.clone())?;
    let cases = config
        .noise_levels
        .iter()
        .map(|&n| run_noise_case(&exp, n).stage(&format!("noise level {n}")))
        .collect::<Result<_>>()?;
    Ok(PipelineResult {
        config: config.clone(),
        cases,
    })
}
