//! Command-line driver: simulate data, reconstruct single images, run the
//! (R2, α) sweep, score images and render them.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dbar_eit::field::ConductivityField;
use dbar_eit::forward::io::{read_matrix_csv, write_matrix_csv};
use dbar_eit::pipeline::{
    field_metrics, read_grid_csv, run_pipeline, write_grid_csv, write_outputs, write_png, ColorScale, Experiment,
    ExperimentConfig, MeasuredData, PriorMethod,
};

#[derive(Parser)]
#[command(name = "dbar-eit", version, about = "Regularised D-bar EIT reconstruction with a priori information")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate electrode data for the configured phantom and write the ND matrices.
    Simulate(Common),
    /// Reconstruct one image for a single (R2, α).
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// ND matrix CSV to use instead of simulated data.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run the full pipeline over every noise level and (R2, α) cell.
    Sweep(Common),
    /// Score an image CSV against the configured phantom.
    Metrics {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        image: PathBuf,
    },
    /// Render an image CSV as a PNG heat map.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        min: Option<f64>,
        #[arg(long)]
        max: Option<f64>,
    },
}

/// Config file plus flags that override it.
#[derive(Args)]
struct Common {
    /// JSON experiment config; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Noise levels as fractions, comma separated (0.001 = 0.1%).
    #[arg(long, value_delimiter = ',')]
    noise: Option<Vec<f64>>,
    #[arg(long)]
    r1: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    r2: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// none, blind, extract or iterate.
    #[arg(long)]
    prior: Option<PriorMethod>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(n) = &self.noise {
            c.noise_levels = n.clone();
        }
        if let Some(r1) = self.r1 {
            c.r1 = r1;
        }
        if let Some(r2) = &self.r2 {
            c.r2 = r2.clone();
        }
        if let Some(a) = &self.alpha {
            c.alpha = a.clone();
        }
        if let Some(p) = self.prior {
            c.prior = p;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(o) = &self.out {
            c.output = o.clone();
        }
        c.validate().context("invalid configuration")?;
        Ok(c)
    }
}

fn tag(x: f64) -> String {
    format!("{x}").replace('.', "p")
}

fn single<T: Copy + std::fmt::Display>(what: &str, values: &[T]) -> Result<T> {
    match values {
        [v] => Ok(*v),
        _ => bail!("{what} needs exactly one value here, got {}", values.len()),
    }
}

fn simulate(common: &Common) -> Result<()> {
    let exp = Experiment::new(common.config()?)?;
    let out = &exp.config.output;
    std::fs::create_dir_all(out)?;
    write_grid_csv(&out.join("phantom.csv"), &exp.truth)?;
    write_matrix_csv(&out.join("reference_nd.csv"), &exp.reference.nd)?;
    for &n in &exp.config.noise_levels {
        let data = exp.measure(n)?;
        let path = out.join(format!("nd_noise{}.csv", tag(n * 100.0)));
        write_matrix_csv(&path, &data.dn.nd)?;
        println!("{}  seed {}  sigma0 {:.6}", path.display(), data.seed, data.scale);
    }
    Ok(())
}

fn write_image(out: &Path, stem: &str, sigma: &ConductivityField) -> Result<()> {
    write_grid_csv(&out.join(format!("{stem}.csv")), sigma)?;
    if let Some(s) = ColorScale::spanning([sigma]) {
        write_png(&out.join(format!("{stem}.png")), sigma, s, stem)?;
    }
    Ok(())
}

fn reconstruct(common: &Common, data_path: Option<&Path>) -> Result<()> {
    let exp = Experiment::new(common.config()?)?;
    let cfg = &exp.config;
    let noise = single("--noise", &cfg.noise_levels)?;
    let data: MeasuredData = match data_path {
        Some(p) => exp.measured_from_nd(read_matrix_csv(p)?, noise, cfg.seed)?,
        None => exp.measure(noise)?,
    };
    let t_bie = exp.boundary_scattering(&data)?;
    let baseline = exp.reconstruct_no_prior(&data, &t_bie)?;
    let out = &cfg.output;
    std::fs::create_dir_all(out)?;
    let (stem, image) = if cfg.prior == PriorMethod::None {
        ("none".to_string(), baseline)
    } else {
        let r2 = single("--r2", &cfg.r2)?;
        let alpha = single("--alpha", &cfg.alpha)?;
        let prior = match cfg.prior {
            PriorMethod::Blind => exp.blind_prior()?,
            PriorMethod::Extract => exp.extraction_prior(&baseline.sigma)?,
            PriorMethod::Iterate => {
                let src = cfg.iterate_from;
                let blind = exp.prior_scattering(&exp.blind_prior()?, &[src.r2])?;
                let first = exp.reconstruct_with_prior(&data, &t_bie, &blind, src.r2, src.alpha)?;
                exp.iterated_prior(&first.sigma)?
            }
            PriorMethod::None => unreachable!(),
        };
        let sc = exp.prior_scattering(&prior, &[r2])?;
        let image = exp.reconstruct_with_prior(&data, &t_bie, &sc, r2, alpha)?;
        (format!("{}_r2-{}_alpha-{}", cfg.prior, tag(r2), tag(alpha)), image)
    };
    write_image(out, &stem, &image.sigma)?;
    let metrics = exp.metrics(&image)?;
    println!("{}", serde_json::to_string_pretty(&metrics)?);
    if !image.diagnostics.failed.is_empty() {
        log::warn!("{} of {} pixels failed to converge", image.diagnostics.failed.len(), image.diagnostics.pixels);
    }
    Ok(())
}

fn sweep(common: &Common) -> Result<()> {
    let cfg = common.config()?;
    let result = run_pipeline(&cfg)?;
    let manifest = write_outputs(&result, &cfg.output)?;
    let mut failed = 0;
    for case in &manifest.cases {
        for img in &case.images {
            match (&img.metrics, &img.error) {
                (Some(m), _) => println!(
                    "noise {:>5.2}%  {:<8} R2 {:>4}  alpha {:>4}  rel-L2 {:.4}  contrast {:.3}",
                    case.noise_level * 100.0,
                    img.method,
                    img.r2,
                    img.alpha,
                    m.relative_l2_error,
                    m.effusion_contrast.unwrap_or(f64::NAN),
                ),
                (None, e) => {
                    failed += 1;
                    println!("noise {:>5.2}%  {:<8} R2 {:>4}  alpha {:>4}  FAILED {}", case.noise_level * 100.0, img.method, img.r2, img.alpha, e.as_deref().unwrap_or(""));
                }
            }
        }
    }
    println!("manifest: {}", cfg.output.join("manifest.json").display());
    if failed > 0 {
        log::warn!("{failed} sweep cells failed; see the manifest");
    }
    Ok(())
}

fn metrics(common: &Common, image: &Path) -> Result<()> {
    let exp = Experiment::new(common.config()?)?;
    let sigma = read_grid_csv(image, &exp.zgrid)?;
    let m = field_metrics(&sigma, &exp.truth, &exp.phantom_regions)?;
    println!("{}", serde_json::to_string_pretty(&m)?);
    Ok(())
}

fn render(common: &Common, image: &Path, min: Option<f64>, max: Option<f64>) -> Result<()> {
    let cfg = common.config()?;
    let domain = cfg.phantom.geometry()?.domain()?;
    let sigma = read_grid_csv(image, &cfg.zgrid(domain.radius())?)?;
    let auto = ColorScale::spanning([&sigma]).context("image has no finite pixels inside the domain")?;
    let scale = ColorScale {
        min: min.unwrap_or(auto.min),
        max: max.unwrap_or(auto.max),
    };
    if !(scale.max > scale.min) {
        bail!("empty colour range [{}, {}]", scale.min, scale.max);
    }
    let path = match &common.out {
        Some(p) => p.clone(),
        None => image.with_extension("png"),
    };
    let group = if min.is_some() || max.is_some() { "manual" } else { "auto" };
    write_png(&path, &sigma, scale, group)?;
    println!("{}", path.display());
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(c) => simulate(c),
        Command::Reconstruct { common, data } => reconstruct(common, data.as_deref()),
        Command::Sweep(c) => sweep(c),
        Command::Metrics { common, image } => metrics(common, image),
        Command::Render { common, image, min, max } => render(common, image, *min, *max),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
