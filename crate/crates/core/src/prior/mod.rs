//! Phantoms and a priori conductivity distributions.

pub mod assemble;
pub mod extract;
pub mod phantom;

use std::collections::BTreeMap;

pub use assemble::{
    assemble_piecewise_sigma, blind_estimate_prior, mollify, ordered_regions, PiecewiseConductivity, PriorField,
};
pub use extract::{
    extracted_values, prior_regions,
    build_extraction_prior, extract_background, extract_heart_aorta, extract_lungs, extract_spine, iterate_prior,
    ExtractionParams,
};
pub use phantom::{
    blind_estimates, phantom_geometry, phantom_values, thorax_geometry, PRIOR_LUNG_DIVIDER, TRUE_LUNG_DIVIDER,
};

/// Region label → conductivity (S/m). Must contain [`BACKGROUND`].
pub type RegionValueMap = BTreeMap<String, f64>;

pub const BACKGROUND: &str = "background";
