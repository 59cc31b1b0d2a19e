//! Discrete ND and DN maps from electrode data.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::fem::{simulate_voltages, FemProblem, VoltageFrame};
use super::mesh::{DiscMesh, MeshConfig};
use super::patterns::CurrentPatternBasis;
use crate::error::{Error, Result};
use crate::field::Constant;
use crate::geometry::DomainDisc;

/// Largest condition number accepted when inverting an ND matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// An ND matrix together with its inverse, the DN matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DnMap {
    pub nd: DMatrix<f64>,
    pub dn: DMatrix<f64>,
}

impl DnMap {
    pub fn from_nd(nd: DMatrix<f64>) -> Result<Self> {
        let dn = dn_from_nd(&nd)?;
        Ok(Self { nd, dn })
    }

    pub fn from_frame(basis: &CurrentPatternBasis, frame: &VoltageFrame, domain: &DomainDisc) -> Result<Self> {
        Self::from_nd(nd_from_data(
            &basis.j,
            &frame.v,
            domain.normalized_electrode_arc(),
            domain.angular_spacing(),
        )?)
    }

    pub fn size(&self) -> usize {
        self.nd.nrows()
    }
}

/// `R = (Δθ / A) Jᵀ V` with `A` the electrode arc on the unit circle.
pub fn nd_from_data(j: &DMatrix<f64>, v: &DMatrix<f64>, arc: f64, dtheta: f64) -> Result<DMatrix<f64>> {
    if j.shape() != v.shape() {
        return Err(Error::ShapeMismatch(format!(
            "patterns are {:?} but voltages are {:?}",
            j.shape(),
            v.shape()
        )));
    }
    if !(arc > 0.0) || !(dtheta > 0.0) {
        return Err(Error::InvalidParameter("electrode arc and spacing must be positive".into()));
    }
    Ok(j.transpose() * v * (dtheta / arc))
}

/// `L = R⁻¹`, refusing matrices whose condition number exceeds [`MAX_CONDITION`].
pub fn dn_from_nd(r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !r.is_square() || r.nrows() == 0 {
        return Err(Error::ShapeMismatch(format!("ND matrix must be square, got {:?}", r.shape())));
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("ND matrix has non-finite entries".into()));
    }
    let sv = r.clone().svd(false, false).singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned(format!(
            "ND matrix condition number {cond:.3e} exceeds {MAX_CONDITION:.0e} (singular values {smin:.3e}..{smax:.3e})"
        )));
    }
    r.clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Singular("ND matrix is singular".into()))
}

/// Scale `σ₀` of the data relative to the homogeneous reference: the least
/// squares factor with `R_σ ≈ R_1 / σ₀`.
pub fn best_fit_scale(nd_sigma: &DMatrix<f64>, nd_one: &DMatrix<f64>) -> Result<f64> {
    if nd_sigma.shape() != nd_one.shape() {
        return Err(Error::ShapeMismatch("ND matrices differ in size".into()));
    }
    let num = nd_one.dot(nd_one);
    let den = nd_sigma.dot(nd_one);
    if !(den > 0.0) {
        return Err(Error::InvalidParameter("data ND map is not positively correlated with the reference".into()));
    }
    Ok(num / den)
}

/// Forward-model settings shared by data generation and the reference map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForwardConfig {
    /// Contact impedance in Ω·mm.
    pub contact_impedance: f64,
    pub data_mesh: MeshConfig,
    pub reference_mesh: MeshConfig,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        Self {
            contact_impedance: 1e-3,
            data_mesh: MeshConfig::data(),
            reference_mesh: MeshConfig::reference(),
        }
    }
}

/// DN map of σ ≡ 1 on the reference mesh.
pub fn homogeneous_dn(domain: &DomainDisc, basis: &CurrentPatternBasis, mesh: &MeshConfig, contact_impedance: f64) -> Result<DnMap> {
    let mesh = Arc::new(DiscMesh::build(
        domain.electrode_count(),
        domain.normalized_electrode_arc(),
        mesh,
    )?);
    let problem = FemProblem::new(domain, mesh, &Constant(1.0), contact_impedance)?;
    let frame = simulate_voltages(&problem, basis)?;
    DnMap::from_frame(basis, &frame, domain)
}
