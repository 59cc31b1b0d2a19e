//! Conductivity values read off a reconstruction to build or refine a prior.

use serde::{Deserialize, Serialize};

use super::assemble::PriorField;
use super::{RegionValueMap, BACKGROUND};
use crate::error::{Error, Result};
use crate::field::ConductivityField;
use crate::geometry::{region_mask, GeometryDoc, PolygonRegion, ZGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionParams {
    /// Heart threshold fraction, in (0.5, 1).
    pub c: f64,
    /// Background band fractions, 0 < c1 < c2 < 1.
    pub c1: f64,
    pub c2: f64,
    /// Ordinate (mm) splitting `split_label` into `_top` and `_bottom` parts.
    #[serde(default)]
    pub lung_divider: Option<f64>,
    #[serde(default = "default_split_label")]
    pub split_label: String,
    /// Extra subregions that get their own mean value.
    #[serde(default)]
    pub pathology_subsets: Vec<PolygonRegion>,
}

fn default_split_label() -> String {
    "l_lung".into()
}

impl Default for ExtractionParams {
    fn default() -> Self {
        Self {
            c: 0.85,
            c1: 0.25,
            c2: 0.95,
            lung_divider: Some(super::phantom::PRIOR_LUNG_DIVIDER),
            split_label: default_split_label(),
            pathology_subsets: Vec::new(),
        }
    }
}

impl ExtractionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.5 && self.c < 1.0) {
            return Err(Error::InvalidParameter(format!("c must lie in (0.5, 1), got {}", self.c)));
        }
        if !(self.c1 > 0.0 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < c1 < c2 < 1, got c1 = {}, c2 = {}",
                self.c1, self.c2
            )));
        }
        Ok(())
    }
}

fn mean_where(recon: &ConductivityField, select: impl Fn(usize, f64) -> bool) -> Option<f64> {
    let grid = recon.grid();
    let (mut sum, mut count) = (0.0, 0usize);
    for (i, &v) in recon.values().iter().enumerate() {
        if grid.inside(i) && select(i, v) {
            sum += v;
            count += 1;
        }
    }
    (count > 0).then(|| sum / count as f64)
}

/// Mean of the reconstruction over each region (grid nodes inside Ω).
pub fn extract_lungs(recon: &ConductivityField, regions: &[PolygonRegion]) -> Result<RegionValueMap> {
    let mut out = RegionValueMap::new();
    for r in regions {
        let mask = region_mask(r, recon.grid())?;
        let m = mean_where(recon, |i, _| mask[i])
            .ok_or_else(|| Error::EmptySelection(format!("region '{}' contains no grid node", r.label)))?;
        out.insert(r.label.clone(), m);
    }
    Ok(out)
}

/// Mean over `{σ ≥ σ_min + c (σ_max − σ_min)}`.
pub fn extract_heart_aorta(recon: &ConductivityField, c: f64) -> Result<f64> {
    if !(c > 0.5 && c < 1.0) {
        return Err(Error::InvalidParameter(format!("c must lie in (0.5, 1), got {c}")));
    }
    let (lo, hi) = recon.masked_range()?;
    let tau = lo + c * (hi - lo);
    mean_where(recon, |_, v| v >= tau)
        .ok_or_else(|| Error::EmptySelection(format!("no node reaches the heart threshold {tau:.4}; use a smaller c")))
}

/// The most resistive value in Ω.
pub fn extract_spine(recon: &ConductivityField) -> Result<f64> {
    Ok(recon.masked_range()?.0)
}

/// Mean over `{σ ∈ [σ_min + c1 Δ, σ_min + c2 Δ]}` with `Δ = σ_max − σ_min`.
pub fn extract_background(recon: &ConductivityField, c1: f64, c2: f64) -> Result<f64> {
    if !(c1 > 0.0 && c1 < c2 && c2 < 1.0) {
        return Err(Error::InvalidParameter(format!("need 0 < c1 < c2 < 1, got {c1}, {c2}")));
    }
    let (lo, hi) = recon.masked_range()?;
    let (t1, t2) = (lo + c1 * (hi - lo), lo + c2 * (hi - lo));
    // a flat reconstruction makes the band degenerate; every node then belongs to it
    mean_where(recon, |_, v| (v >= t1 && v <= t2) || hi == lo)
        .ok_or_else(|| Error::EmptySelection(format!("no node in the background band [{t1:.4}, {t2:.4}]")))
}

/// Prior regions after optional lung splitting, plus pathology subsets.
pub fn prior_regions(geometry: &GeometryDoc, params: &ExtractionParams) -> Result<Vec<PolygonRegion>> {
    let geo = match params.lung_divider {
        Some(y) => geometry.split_region(&params.split_label, y)?,
        None => geometry.clone(),
    };
    let mut regions = geo.regions;
    regions.extend(params.pathology_subsets.iter().cloned());
    Ok(regions)
}

/// Extraction values for every prior region from `recon`.
pub fn extracted_values(recon: &ConductivityField, regions: &[PolygonRegion], params: &ExtractionParams) -> Result<RegionValueMap> {
    params.validate()?;
    let heart = extract_heart_aorta(recon, params.c)?;
    let spine = extract_spine(recon)?;
    let background = extract_background(recon, params.c1, params.c2)?;
    let mut values = RegionValueMap::new();
    values.insert(BACKGROUND.into(), background);
    let averaged: Vec<PolygonRegion> = regions
        .iter()
        .filter(|r| !matches!(r.label.as_str(), "heart" | "aorta" | "spine"))
        .cloned()
        .collect();
    values.extend(extract_lungs(recon, &averaged)?);
    for r in regions {
        match r.label.as_str() {
            "heart" | "aorta" => {
                values.insert(r.label.clone(), heart);
            }
            "spine" => {
                values.insert(r.label.clone(), spine);
            }
            _ => {}
        }
    }
    Ok(values)
}

/// Prior from a reconstruction without a priori information.
pub fn build_extraction_prior(
    recon: &ConductivityField,
    geometry: &GeometryDoc,
    params: &ExtractionParams,
    grid: &ZGrid,
    radius: f64,
) -> Result<PriorField> {
    let regions = prior_regions(geometry, params)?;
    let values = extracted_values(recon, &regions, params)?;
    PriorField::new(&regions, values, grid, radius)
}

/// Refined prior extracted from an a priori reconstruction. Identical
/// mechanics to [`build_extraction_prior`]; only the source image differs.
pub fn iterate_prior(
    recon_aposteriori: &ConductivityField,
    geometry: &GeometryDoc,
    params: &ExtractionParams,
    grid: &ZGrid,
    radius: f64,
) -> Result<PriorField> {
    build_extraction_prior(recon_aposteriori, geometry, params, grid, radius)
}
