//! Built-in thoracic test geometry and conductivity tables.
//!
//! The organ outlines are approximations of a transverse chest slice with the
//! left lung drawn on the left of the image. The conductivities are those of
//! the pleural-effusion test case: the bottom of the left lung carries fluid.

use super::RegionValueMap;
use crate::geometry::GeometryDoc;

const THORAX_JSON: &str = include_str!("../../data/thorax.json");

/// Ordinate (mm) separating the healthy top of the left lung from the
/// effusion in the phantom.
pub const TRUE_LUNG_DIVIDER: f64 = -30.0;

/// Dividing line picked by eye from a priori reconstructions; it sits a little
/// above the true one, as in the original study.
pub const PRIOR_LUNG_DIVIDER: f64 = -22.0;

/// The unsplit organ polygons: both lungs, heart, aorta and spine.
pub fn thorax_geometry() -> GeometryDoc {
    GeometryDoc::from_json_str(THORAX_JSON).expect("built-in thorax geometry is valid")
}

/// Phantom polygons with the left lung split at the true divider.
pub fn phantom_geometry() -> GeometryDoc {
    thorax_geometry()
        .split_region("l_lung", TRUE_LUNG_DIVIDER)
        .expect("left lung present")
}

fn table(entries: &[(&str, f64)]) -> RegionValueMap {
    entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Conductivities (S/m) of the effusion phantom.
pub fn phantom_values() -> RegionValueMap {
    table(&[
        ("background", 0.424),
        ("heart", 0.750),
        ("l_lung_top", 0.240),
        ("l_lung_bottom", 0.600),
        ("r_lung", 0.240),
        ("aorta", 0.750),
        ("spine", 0.150),
    ])
}

/// Blind estimates (S/m): two homogeneous lungs, other organs close to truth.
pub fn blind_estimates() -> RegionValueMap {
    table(&[
        ("background", 0.500),
        ("heart", 0.800),
        ("l_lung", 0.200),
        ("r_lung", 0.200),
        ("aorta", 0.800),
        ("spine", 0.100),
    ])
}
