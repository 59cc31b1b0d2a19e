//! Image quality measures against a known phantom.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dbar::ConductivityImage;
use crate::error::{Error, Result};
use crate::field::ConductivityField;
use crate::geometry::{region_mask, PolygonRegion};
use crate::prior::BACKGROUND;

/// Labels whose mean ratio measures how visible the effusion is.
pub const EFFUSION_LOWER: &str = "l_lung_bottom";
pub const EFFUSION_UPPER: &str = "l_lung_top";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `‖σ − σ_true‖ / ‖σ_true‖` over Ω.
    pub relative_l2_error: f64,
    /// Mean image value over each phantom region and the background.
    pub region_means: BTreeMap<String, f64>,
    /// Lower over upper left-lung mean, when both regions exist.
    pub effusion_contrast: Option<f64>,
    /// Median and maximum of `|Im μ0²| / |μ0²|`, when known.
    pub median_imag_ratio: Option<f64>,
    pub max_imag_ratio: Option<f64>,
    pub failed_pixels: usize,
}

/// Metrics of a plain field; all sums run over grid nodes inside Ω.
pub fn field_metrics(image: &ConductivityField, phantom: &ConductivityField, regions: &[PolygonRegion]) -> Result<Metrics> {
    let grid = image.grid();
    if grid != phantom.grid() {
        return Err(Error::ShapeMismatch("image and phantom live on different grids".into()));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for i in grid.masked_indices() {
        let (a, b) = (image.values()[i], phantom.values()[i]);
        num += (a - b) * (a - b);
        den += b * b;
    }
    if !(den > 0.0) {
        return Err(Error::InvalidParameter("phantom has zero norm".into()));
    }
    let mut region_means = BTreeMap::new();
    let mut covered = vec![false; grid.len()];
    for r in regions {
        let mask = region_mask(r, grid)?;
        let (mut s, mut n) = (0.0, 0usize);
        for i in grid.masked_indices() {
            if mask[i] {
                s += image.values()[i];
                n += 1;
                covered[i] = true;
            }
        }
        if n == 0 {
            return Err(Error::EmptySelection(format!("region '{}' contains no grid nodes", r.label)));
        }
        region_means.insert(r.label.clone(), s / n as f64);
    }
    let bg: Vec<f64> = grid.masked_indices().into_iter().filter(|&i| !covered[i]).map(|i| image.values()[i]).collect();
    if !bg.is_empty() {
        region_means.insert(BACKGROUND.into(), bg.iter().sum::<f64>() / bg.len() as f64);
    }
    let effusion_contrast = match (region_means.get(EFFUSION_LOWER), region_means.get(EFFUSION_UPPER)) {
        (Some(lo), Some(up)) => Some(lo / up),
        _ => None,
    };
    Ok(Metrics {
        relative_l2_error: (num / den).sqrt(),
        region_means,
        effusion_contrast,
        median_imag_ratio: None,
        max_imag_ratio: None,
        failed_pixels: 0,
    })
}

/// Metrics of a reconstruction, including its solver diagnostics.
pub fn compute_metrics(image: &ConductivityImage, phantom: &ConductivityField, regions: &[PolygonRegion]) -> Result<Metrics> {
    let mut m = field_metrics(&image.sigma, phantom, regions)?;
    m.median_imag_ratio = Some(image.diagnostics.median_imag_ratio);
    m.max_imag_ratio = Some(image.diagnostics.max_imag_ratio);
    m.failed_pixels = image.diagnostics.failed.len();
    Ok(m)
}
