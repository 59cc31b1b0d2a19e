//! Experiment description: phantom, prior method, noise, truncation radii and
//! the (R2, α) sweep.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cgo_boundary::BieConfig;
use crate::cgo_interior::LsConfig;
use crate::error::{Error, Result};
use crate::forward::ForwardConfig;
use crate::geometry::{build_zgrid, GeometryDoc, KGrid, ZGrid};
use crate::prior::{blind_estimates, phantom_geometry, phantom_values, thorax_geometry, ExtractionParams, RegionValueMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorMethod {
    None,
    Blind,
    Extract,
    Iterate,
}

impl std::str::FromStr for PriorMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "blind" => Ok(Self::Blind),
            "extract" => Ok(Self::Extract),
            "iterate" => Ok(Self::Iterate),
            _ => Err(Error::Parse(format!("unknown prior method '{s}' (none, blind, extract, iterate)"))),
        }
    }
}

impl std::fmt::Display for PriorMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::None => "none",
            Self::Blind => "blind",
            Self::Extract => "extract",
            Self::Iterate => "iterate",
        };
        f.write_str(s)
    }
}

/// The conductivity the data are simulated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhantomSpec {
    /// Built-in thorax with the left-lung effusion.
    Effusion,
    /// Constant conductivity on the built-in domain.
    Homogeneous { value: f64 },
    /// Polygons from a geometry file with one value per label.
    Regions { geometry: PathBuf, values: RegionValueMap },
}

impl PhantomSpec {
    pub fn geometry(&self) -> Result<GeometryDoc> {
        match self {
            Self::Effusion | Self::Homogeneous { .. } => Ok(phantom_geometry()),
            Self::Regions { geometry, .. } => GeometryDoc::load(geometry),
        }
    }

    /// Region values including the background.
    pub fn values(&self) -> RegionValueMap {
        match self {
            Self::Effusion => phantom_values(),
            Self::Homogeneous { value } => [(crate::prior::BACKGROUND.to_string(), *value)].into_iter().collect(),
            Self::Regions { values, .. } => values.clone(),
        }
    }

    /// Regions that carry a value (none for the homogeneous phantom).
    pub fn regions(&self) -> Result<Vec<crate::geometry::PolygonRegion>> {
        match self {
            Self::Homogeneous { .. } => Ok(Vec::new()),
            _ => Ok(self.geometry()?.regions),
        }
    }
}

/// How the data are normalised before the D-bar stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Normalization {
    /// Least-squares fit of the data ND map to the unit-conductivity one.
    BestFit,
    /// A known boundary conductivity.
    Known { value: f64 },
}

/// (R2, α) of the a priori image the iteration step extracts from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationSource {
    pub r2: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub phantom: PhantomSpec,
    /// Prior organ outlines; `None` uses the built-in thorax.
    pub prior_geometry: Option<PathBuf>,
    pub prior: PriorMethod,
    pub blind_values: RegionValueMap,
    pub extraction: ExtractionParams,
    pub iterate_from: IterationSource,
    pub noise_levels: Vec<f64>,
    pub seed: u64,
    pub r1: f64,
    pub r2: Vec<f64>,
    pub alpha: Vec<f64>,
    pub z_points: usize,
    pub k_points: usize,
    pub k_extent: f64,
    /// Mollifier standard deviation in mm.
    pub mollification_radius: f64,
    pub normalization: Normalization,
    pub forward: ForwardConfig,
    pub bie: BieConfig,
    pub ls_tolerance: f64,
    pub ls_truncation: f64,
    pub dbar_tolerance: f64,
    pub max_iterations: usize,
    pub output: PathBuf,
    /// Content-addressed cache for DN maps, scattering data and prior solves.
    pub cache: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            phantom: PhantomSpec::Effusion,
            prior_geometry: None,
            prior: PriorMethod::Blind,
            blind_values: blind_estimates(),
            extraction: ExtractionParams::default(),
            iterate_from: IterationSource { r2: 5.0, alpha: 0.75 },
            noise_levels: vec![0.0, 0.001, 0.002],
            seed: 20_240_601,
            r1: 3.8,
            r2: vec![3.8, 5.0, 7.5, 10.0],
            alpha: vec![0.0, 0.5, 0.75, 0.9],
            z_points: 101,
            k_points: 63,
            k_extent: 10.25,
            mollification_radius: 6.0,
            normalization: Normalization::BestFit,
            forward: ForwardConfig::default(),
            bie: BieConfig::default(),
            ls_tolerance: 1e-6,
            ls_truncation: 2.1,
            dbar_tolerance: 1e-6,
            max_iterations: 500,
            output: PathBuf::from("out"),
            cache: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.r1 > 0.0) {
            return bad(format!("R1 must be positive, got {}", self.r1));
        }
        if self.r2.is_empty() || self.alpha.is_empty() || self.noise_levels.is_empty() {
            return bad("R2, alpha and noise lists must be non-empty".into());
        }
        if let Some(r2) = self.r2.iter().find(|&&r| !(r >= self.r1)) {
            return bad(format!("R2 = {r2} is below R1 = {}", self.r1));
        }
        if let Some(a) = self.alpha.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return bad(format!("alpha = {a} outside [0, 1]"));
        }
        if let Some(n) = self.noise_levels.iter().find(|n| !(**n >= 0.0)) {
            return bad(format!("noise level {n} must be non-negative"));
        }
        if self.z_points < 3 || self.z_points % 2 == 0 || self.k_points < 3 || self.k_points % 2 == 0 {
            return bad("grid sizes must be odd and at least 3".into());
        }
        let r2max = self.r2.iter().cloned().fold(self.r1, f64::max);
        let h = self.k_extent / (self.k_points / 2) as f64;
        if self.k_extent + 0.5 * h < r2max {
            return bad(format!("k-grid extent {} does not cover R2 = {r2max}", self.k_extent));
        }
        if self.prior == PriorMethod::Iterate && !(self.iterate_from.r2 >= self.r1 && (0.0..=1.0).contains(&self.iterate_from.alpha)) {
            return bad("iteration source (R2, alpha) out of range".into());
        }
        if let Normalization::Known { value } = self.normalization {
            if !(value > 0.0) {
                return bad(format!("normalisation value {value} must be positive"));
            }
        }
        self.extraction.validate()
    }

    pub fn zgrid(&self, radius: f64) -> Result<ZGrid> {
        build_zgrid(radius, self.z_points)
    }

    pub fn kgrid(&self) -> Result<KGrid> {
        KGrid::with_extent(self.k_points, self.k_extent)
    }

    pub fn prior_geometry(&self) -> Result<GeometryDoc> {
        match &self.prior_geometry {
            Some(p) => GeometryDoc::load(p),
            None => Ok(thorax_geometry()),
        }
    }

    pub fn ls_config(&self) -> LsConfig {
        LsConfig {
            truncation: self.ls_truncation,
            tolerance: self.ls_tolerance,
            max_iterations: self.max_iterations,
        }
    }

    pub fn r2_max(&self) -> f64 {
        self.r2.iter().cloned().fold(self.r1, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_valid_and_roundtrip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        let s = serde_json::to_string_pretty(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json_str(&s).unwrap(), c);
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let c = ExperimentConfig::from_json_str(r#"{"prior": "extract", "noise_levels": [0.001], "phantom": {"kind": "homogeneous", "value": 1.0}}"#).unwrap();
        assert_eq!(c.prior, PriorMethod::Extract);
        assert_eq!(c.r1, 3.8);
        assert!(ExperimentConfig::from_json_str(r#"{"r1": 5.0}"#).is_err());
        assert!(ExperimentConfig::from_json_str(r#"{"alpha": [1.5]}"#).is_err());
        assert!(ExperimentConfig::from_json_str(r#"{"bogus": 1}"#).is_err());
        assert!(ExperimentConfig::from_json_str(r#"{"r2": [12.0]}"#).is_err());
    }
}
