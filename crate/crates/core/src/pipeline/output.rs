//! Artifacts: CSV grids, PNG heatmaps and a JSON manifest.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::cache::content_hash;
use super::config::ExperimentConfig;
use super::metrics::Metrics;
use super::run::{NoiseCase, PipelineResult};
use crate::dbar::{ConductivityImage, LsStats, ReconstructionDiagnostics};
use crate::error::{Error, Result};
use crate::field::ConductivityField;
use crate::geometry::ZGrid;

/// Write the field as an `n x n` grid, top row first (largest y), so the file
/// reads like the image.
pub fn write_grid_csv(path: &Path, field: &ConductivityField) -> Result<()> {
    let grid = field.grid();
    let n = grid.n();
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| Error::Parse(e.to_string()))?;
    for row in (0..n).rev() {
        let rec: Vec<String> = (0..n).map(|c| format!("{:.17e}", field.values()[grid.index(row, c)])).collect();
        w.write_record(&rec).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Read a grid written by [`write_grid_csv`] onto `grid`.
pub fn read_grid_csv(path: &Path, grid: &ZGrid) -> Result<ConductivityField> {
    let n = grid.n();
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path).map_err(|e| Error::Parse(e.to_string()))?;
    let mut values = vec![0.0; grid.len()];
    let mut rows = 0;
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if k >= n || rec.len() != n {
            return Err(Error::ShapeMismatch(format!("{} is not a {n} x {n} grid", path.display())));
        }
        let row = n - 1 - k;
        for (c, f) in rec.iter().enumerate() {
            values[grid.index(row, c)] = f.trim().parse().map_err(|_| Error::Parse(format!("bad number '{f}' in {}", path.display())))?;
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::ShapeMismatch(format!("{} has {rows} rows, expected {n}", path.display())));
    }
    ConductivityField::new(grid.clone(), values)
}

/// Colour scale shared by a group of images.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorScale {
    pub min: f64,
    pub max: f64,
}

impl ColorScale {
    /// Range of the Ω samples of all `fields`.
    pub fn spanning<'a>(fields: impl IntoIterator<Item = &'a ConductivityField>) -> Option<Self> {
        let mut s: Option<Self> = None;
        for f in fields {
            for i in f.grid().masked_indices() {
                let v = f.values()[i];
                if !v.is_finite() {
                    continue;
                }
                s = Some(match s {
                    None => Self { min: v, max: v },
                    Some(c) => Self { min: c.min.min(v), max: c.max.max(v) },
                });
            }
        }
        s
    }
}

// piecewise-linear blue → cyan → yellow → red map
const STOPS: [(f64, [f64; 3]); 5] = [
    (0.0, [0.0, 0.0, 0.55]),
    (0.3, [0.0, 0.6, 1.0]),
    (0.55, [0.55, 1.0, 0.45]),
    (0.8, [1.0, 0.8, 0.0]),
    (1.0, [0.6, 0.0, 0.0]),
];

fn colour(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let j = STOPS.iter().position(|s| s.0 >= t).unwrap_or(STOPS.len() - 1).max(1);
    let (t0, c0) = STOPS[j - 1];
    let (t1, c1) = STOPS[j];
    let u = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
    let mut out = [0u8; 3];
    for ch in 0..3 {
        out[ch] = ((c0[ch] + u * (c1[ch] - c0[ch])) * 255.0).round() as u8;
    }
    out
}

/// Heatmap of the Ω samples (white outside), one pixel per grid node, with
/// the colour range and its group recorded as text chunks.
pub fn write_png(path: &Path, field: &ConductivityField, scale: ColorScale, group: &str) -> Result<()> {
    let grid = field.grid();
    let n = grid.n();
    let span = (scale.max - scale.min).max(f64::MIN_POSITIVE);
    let mut data = Vec::with_capacity(n * n * 3);
    for row in (0..n).rev() {
        for c in 0..n {
            let i = grid.index(row, c);
            if grid.inside(i) {
                data.extend_from_slice(&colour((field.values()[i] - scale.min) / span));
            } else {
                data.extend_from_slice(&[255, 255, 255]);
            }
        }
    }
    let png_err = |e: png::EncodingError| Error::Io(std::io::Error::other(e));
    let mut enc = png::Encoder::new(BufWriter::new(File::create(path)?), n as u32, n as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    enc.add_text_chunk("sigma_min".into(), format!("{:.6e}", scale.min)).map_err(png_err)?;
    enc.add_text_chunk("sigma_max".into(), format!("{:.6e}", scale.max)).map_err(png_err)?;
    enc.add_text_chunk("shared_scale".into(), group.into()).map_err(png_err)?;
    let mut w = enc.write_header().map_err(png_err)?;
    w.write_image_data(&data).map_err(png_err)?;
    w.finish().map_err(png_err)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageEntry {
    pub method: String,
    pub r2: f64,
    pub alpha: f64,
    pub csv: Option<PathBuf>,
    pub png: Option<PathBuf>,
    pub metrics: Option<Metrics>,
    pub diagnostics: Option<ReconstructionDiagnostics>,
    pub error: Option<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PriorEntry {
    pub method: String,
    pub values: crate::prior::RegionValueMap,
    pub ls_stats: LsStats,
    pub mu_int_deviation: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseEntry {
    pub noise_level: f64,
    pub seed: u64,
    pub scale: f64,
    pub color_scale: Option<ColorScale>,
    pub images: Vec<ImageEntry>,
    pub priors: Vec<PriorEntry>,
    pub timings: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    /// μ_int is normalised by the true disc area πR2², with cut cells
    /// weighted by their covered fraction.
    pub mu_int_normalization: String,
    pub cases: Vec<CaseEntry>,
}

fn tag(x: f64) -> String {
    format!("{x}").replace('.', "p")
}

fn image_entry(dir: &Path, stem: &str, method: &str, r2: f64, alpha: f64, img: &ConductivityImage, metrics: &Metrics, scale: Option<ColorScale>, group: &str, seconds: f64) -> Result<ImageEntry> {
    let csv = PathBuf::from(format!("{stem}.csv"));
    write_grid_csv(&dir.join(&csv), &img.sigma)?;
    let png = match scale {
        Some(s) => {
            let p = PathBuf::from(format!("{stem}.png"));
            write_png(&dir.join(&p), &img.sigma, s, group)?;
            Some(p)
        }
        None => None,
    };
    Ok(ImageEntry {
        method: method.into(),
        r2,
        alpha,
        csv: Some(csv),
        png,
        metrics: Some(metrics.clone()),
        diagnostics: Some(img.diagnostics.clone()),
        error: None,
        seconds,
    })
}

fn case_entry(dir: &Path, case: &NoiseCase, r1: f64) -> Result<CaseEntry> {
    let noise = tag(case.noise_level * 100.0);
    let group = format!("noise {}%", case.noise_level * 100.0);
    let all = std::iter::once(&case.baseline.sigma)
        .chain(case.priors.iter().flat_map(|p| p.cells.iter().filter_map(|c| c.image.as_ref().map(|i| &i.sigma))));
    let scale = ColorScale::spanning(all);
    let mut images = vec![image_entry(
        dir,
        &format!("noise{noise}_none"),
        "none",
        r1,
        1.0,
        &case.baseline,
        &case.baseline_metrics,
        scale,
        &group,
        0.0,
    )?];
    for p in &case.priors {
        for c in &p.cells {
            let stem = format!("noise{noise}_{}_r2-{}_alpha-{}", p.label, tag(c.r2), tag(c.alpha));
            match (&c.image, &c.metrics) {
                (Some(img), Some(m)) => images.push(image_entry(dir, &stem, &p.label, c.r2, c.alpha, img, m, scale, &group, c.seconds)?),
                _ => images.push(ImageEntry {
                    method: p.label.clone(),
                    r2: c.r2,
                    alpha: c.alpha,
                    csv: None,
                    png: None,
                    metrics: None,
                    diagnostics: None,
                    error: c.error.clone(),
                    seconds: c.seconds,
                }),
            }
        }
    }
    Ok(CaseEntry {
        noise_level: case.noise_level,
        seed: case.seed,
        scale: case.scale,
        color_scale: scale,
        images,
        priors: case
            .priors
            .iter()
            .map(|p| PriorEntry {
                method: p.label.clone(),
                values: p.prior.values.clone(),
                ls_stats: p.ls_stats,
                mu_int_deviation: p.mu_int_deviation.clone(),
            })
            .collect(),
        timings: case.timings.clone(),
    })
}

/// Write every image and `manifest.json` into `dir`.
pub fn write_outputs(result: &PipelineResult, dir: &Path) -> Result<Manifest> {
    std::fs::create_dir_all(dir)?;
    let cases = result.cases.iter().map(|c| case_entry(dir, c, result.config.r1)).collect::<Result<_>>()?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: content_hash(&result.config)?,
        config: result.config.clone(),
        mu_int_normalization: "true disc area, fractional cut cells".into(),
        cases,
    };
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_zgrid;

    #[test]
    fn grid_csv_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = build_zgrid(143.2, 21).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|i| 0.1 + (i as f64).sin().abs() / 3.0).collect();
        let f = ConductivityField::new(g.clone(), vals).unwrap();
        let p = dir.path().join("a.csv");
        write_grid_csv(&p, &f).unwrap();
        assert_eq!(read_grid_csv(&p, &g).unwrap().values(), f.values());
        assert!(read_grid_csv(&p, &build_zgrid(143.2, 23).unwrap()).is_err());
    }

    #[test]
    fn png_carries_scale_text() {
        let dir = tempfile::tempdir().unwrap();
        let g = build_zgrid(1.0, 11).unwrap();
        let f = ConductivityField::constant(g, 0.5);
        let p = dir.path().join("a.png");
        write_png(&p, &f, ColorScale { min: 0.2, max: 0.8 }, "noise 0%").unwrap();
        let dec = png::Decoder::new(File::open(&p).unwrap());
        let reader = dec.read_info().unwrap();
        let texts: Vec<(String, String)> = reader.info().uncompressed_latin1_text.iter().map(|t| (t.keyword.clone(), t.text.clone())).collect();
        assert!(texts.contains(&("shared_scale".into(), "noise 0%".into())));
        assert!(texts.iter().any(|(k, _)| k == "sigma_max"));
    }

    #[test]
    fn colour_map_endpoints() {
        assert_eq!(colour(0.0), [0, 0, 140]);
        assert_eq!(colour(1.0), [153, 0, 0]);
        assert_eq!(colour(-3.0), colour(0.0));
    }
}
