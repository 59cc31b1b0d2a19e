//! Complete electrode model with piecewise-linear triangles.
//!
//! The problem is posed on the unit disc. Contact impedance and electrode
//! arcs are scaled by the radius, which leaves electrode voltages unchanged.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::mesh::DiscMesh;
use super::patterns::CurrentPatternBasis;
use crate::error::{Error, Result};
use crate::field::Conductivity;
use crate::geometry::DomainDisc;
use crate::numerics::skyline::{SkylineCholesky, SkylineMatrix};

/// Mesh, element conductivities and electrode model of one forward problem.
#[derive(Debug, Clone)]
pub struct FemProblem {
    mesh: Arc<DiscMesh>,
    element_sigma: Vec<f64>,
    contact: f64,
    electrode_arc: f64,
}

impl FemProblem {
    /// `contact_impedance` in Ω·mm; `sigma` is sampled in physical coordinates.
    pub fn new(domain: &DomainDisc, mesh: Arc<DiscMesh>, sigma: &dyn Conductivity, contact_impedance: f64) -> Result<Self> {
        if !(contact_impedance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "contact impedance must be positive, got {contact_impedance}"
            )));
        }
        if mesh.electrode_edges.len() != domain.electrode_count() {
            return Err(Error::ShapeMismatch(format!(
                "mesh has {} electrodes, domain has {}",
                mesh.electrode_edges.len(),
                domain.electrode_count()
            )));
        }
        let r = domain.radius();
        let element_sigma: Vec<f64> = mesh
            .triangles
            .iter()
            .map(|t| {
                // mean over edge midpoints: exact for quadratic σ
                (0..3)
                    .map(|k| {
                        let (a, b) = (mesh.nodes[t[k]], mesh.nodes[t[(k + 1) % 3]]);
                        sigma.at(Complex64::new(0.5 * r * (a[0] + b[0]), 0.5 * r * (a[1] + b[1])))
                    })
                    .sum::<f64>()
                    / 3.0
            })
            .collect();
        if let Some(bad) = element_sigma.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParameter(format!("conductivity must be positive, found {bad}")));
        }
        Ok(Self {
            mesh,
            element_sigma,
            contact: contact_impedance / r,
            electrode_arc: domain.normalized_electrode_arc(),
        })
    }

    pub fn mesh(&self) -> &DiscMesh {
        &self.mesh
    }

    pub fn element_sigma(&self) -> &[f64] {
        &self.element_sigma
    }

    pub fn electrodes(&self) -> usize {
        self.mesh.electrode_edges.len()
    }

    /// Normalised electrode arc used to convert current densities to currents.
    pub fn electrode_arc(&self) -> f64 {
        self.electrode_arc
    }

    /// Assemble and factor the grounded CEM system.
    pub fn factorize(&self) -> Result<CemSolver> {
        let mesh = &*self.mesh;
        let nn = mesh.node_count();
        let ne = self.electrodes();
        // the last electrode potential is grounded and dropped
        let dim = nn + ne - 1;
        let mut first: Vec<usize> = (0..dim).collect();
        let mut touch = |i: usize, j: usize| {
            let (r, c) = if i >= j { (i, j) } else { (j, i) };
            if r < dim && c < first[r] {
                first[r] = c;
            }
        };
        for t in &mesh.triangles {
            for &a in t {
                for &b in t {
                    touch(a, b);
                }
            }
        }
        for (l, edges) in mesh.electrode_edges.iter().enumerate() {
            for &(a, b) in edges {
                touch(nn + l, a);
                touch(nn + l, b);
            }
        }
        let mut m = SkylineMatrix::with_envelope(first);

        for (t, tri) in mesh.triangles.iter().enumerate() {
            let p: Vec<[f64; 2]> = tri.iter().map(|&i| mesh.nodes[i]).collect();
            let area = mesh.area(t);
            // gradients of barycentric coordinates times 2*area
            let g = [
                [p[1][1] - p[2][1], p[2][0] - p[1][0]],
                [p[2][1] - p[0][1], p[0][0] - p[2][0]],
                [p[0][1] - p[1][1], p[1][0] - p[0][0]],
            ];
            let s = self.element_sigma[t] / (4.0 * area);
            for i in 0..3 {
                for j in 0..=i {
                    let v = s * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                    if i == j {
                        m.add(tri[i], tri[i], v);
                    } else {
                        m.add(tri[i], tri[j], v);
                    }
                }
            }
        }
        let zi = 1.0 / self.contact;
        let mut lengths = vec![0.0; ne];
        for (l, edges) in mesh.electrode_edges.iter().enumerate() {
            for &(a, b) in edges {
                let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
                let len = (pa[0] - pb[0]).hypot(pa[1] - pb[1]);
                lengths[l] += len;
                m.add(a, a, zi * len / 3.0);
                m.add(b, b, zi * len / 3.0);
                m.add(a, b, zi * len / 6.0);
                if l + 1 < ne {
                    m.add(nn + l, a, -zi * len / 2.0);
                    m.add(nn + l, b, -zi * len / 2.0);
                }
            }
            if l + 1 < ne {
                m.add(nn + l, nn + l, zi * lengths[l]);
            }
        }
        let chol = m.factor()?;
        Ok(CemSolver {
            chol,
            nodes: nn,
            electrodes: ne,
        })
    }
}

/// Factored CEM system ready for many current patterns.
#[derive(Debug, Clone)]
pub struct CemSolver {
    chol: SkylineCholesky,
    nodes: usize,
    electrodes: usize,
}

/// Nodal potential and electrode voltages, both shifted so the electrode
/// voltages have zero mean.
#[derive(Debug, Clone)]
pub struct CemSolution {
    pub potential: Vec<f64>,
    pub electrode_voltages: Vec<f64>,
}

impl CemSolver {
    /// Solve for the injected electrode currents `currents` (must sum to zero).
    pub fn solve(&self, currents: &[f64]) -> Result<CemSolution> {
        if currents.len() != self.electrodes {
            return Err(Error::ShapeMismatch(format!(
                "{} currents for {} electrodes",
                currents.len(),
                self.electrodes
            )));
        }
        let scale = currents.iter().map(|c| c.abs()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Err(Error::Singular("all-zero current pattern".into()));
        }
        if currents.iter().sum::<f64>().abs() > 1e-10 * scale * self.electrodes as f64 {
            return Err(Error::InvalidParameter("injected currents do not sum to zero".into()));
        }
        let mut rhs = vec![0.0; self.chol.dim()];
        rhs[self.nodes..].copy_from_slice(&currents[..self.electrodes - 1]);
        let x = self.chol.solve(&rhs);
        let mut u = x[..self.nodes].to_vec();
        let mut v = x[self.nodes..].to_vec();
        v.push(0.0);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter_mut().for_each(|e| *e -= mean);
        u.iter_mut().for_each(|e| *e -= mean);
        Ok(CemSolution {
            potential: u,
            electrode_voltages: v,
        })
    }
}

/// Solve a single pattern on a freshly factored system.
pub fn fem_solve_cem(problem: &FemProblem, currents: &[f64]) -> Result<CemSolution> {
    problem.factorize()?.solve(currents)
}

/// Electrode voltages for every pattern, expressed in the orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageFrame {
    /// `L x N`, one column per orthonormal pattern.
    pub v: DMatrix<f64>,
    pub noise_level: f64,
    pub seed: Option<u64>,
}

/// Drive every raw adjacent pattern, then change to the orthonormal basis.
///
/// Pattern entries are current densities; the injected current is the
/// density times the electrode arc.
pub fn simulate_voltages(problem: &FemProblem, basis: &CurrentPatternBasis) -> Result<VoltageFrame> {
    if basis.electrodes() != problem.electrodes() {
        return Err(Error::ShapeMismatch(format!(
            "basis for {} electrodes, problem has {}",
            basis.electrodes(),
            problem.electrodes()
        )));
    }
    let solver = problem.factorize()?;
    let arc = problem.electrode_arc();
    let cols: Vec<Vec<f64>> = (0..basis.patterns())
        .into_par_iter()
        .map(|m| {
            let currents: Vec<f64> = basis.raw.column(m).iter().map(|j| arc * j).collect();
            solver.solve(&currents).map(|s| s.electrode_voltages)
        })
        .collect::<Result<_>>()?;
    let raw = DMatrix::from_fn(basis.electrodes(), basis.patterns(), |l, m| cols[m][l]);
    let mut v = basis.to_orthonormal(&raw)?;
    for mut c in v.column_iter_mut() {
        let mean = c.mean();
        c.add_scalar_mut(-mean);
    }
    Ok(VoltageFrame {
        v,
        noise_level: 0.0,
        seed: None,
    })
}

/// Add i.i.d. Gaussian noise with standard deviation `level * max|V|`.
pub fn add_noise(frame: &VoltageFrame, level: f64, seed: u64) -> Result<VoltageFrame> {
    if !(level >= 0.0) || !level.is_finite() {
        return Err(Error::InvalidParameter(format!("noise level must be non-negative, got {level}")));
    }
    if level == 0.0 {
        return Ok(frame.clone());
    }
    let std = level * frame.v.amax();
    let normal = Normal::new(0.0, std).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // column-major traversal fixes the draw order
    let v = frame.v.map(|x| x + normal.sample(&mut rng));
    Ok(VoltageFrame {
        v,
        noise_level: level,
        seed: Some(seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Constant;
    use crate::forward::mesh::MeshConfig;

    fn setup(l: usize) -> (DomainDisc, Arc<DiscMesh>) {
        let d = DomainDisc::with_coverage(1.0, l, 0.5).unwrap();
        let mesh = DiscMesh::build(l, d.normalized_electrode_arc(), &MeshConfig::reference()).unwrap();
        (d, Arc::new(mesh))
    }

    #[test]
    fn opposite_pattern_is_antisymmetric() {
        let (d, mesh) = setup(16);
        let p = FemProblem::new(&d, mesh, &Constant(1.0), 1e-3).unwrap();
        let mut c = vec![0.0; 16];
        c[0] = 1.0;
        c[8] = -1.0;
        let s = fem_solve_cem(&p, &c).unwrap();
        let v = &s.electrode_voltages;
        // reflection through the perpendicular bisector swaps l and 8 - l and flips sign
        for l in 0..16 {
            let m = (8 + 16 - l) % 16;
            assert!((v[l] + v[m]).abs() < 1e-3 * v[0].abs(), "{l}");
        }
        assert!(v.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let (d, mesh) = setup(8);
        assert!(FemProblem::new(&d, mesh.clone(), &Constant(-1.0), 1e-3).is_err());
        assert!(FemProblem::new(&d, mesh.clone(), &Constant(1.0), 0.0).is_err());
        let p = FemProblem::new(&d, mesh, &Constant(1.0), 1e-3).unwrap();
        assert!(fem_solve_cem(&p, &[0.0; 8]).is_err());
    }

    #[test]
    fn noise_statistics_and_determinism() {
        let frame = VoltageFrame {
            v: DMatrix::from_fn(32, 31, |i, j| ((i * 31 + j) as f64 * 0.1).sin()),
            noise_level: 0.0,
            seed: None,
        };
        assert_eq!(add_noise(&frame, 0.0, 1).unwrap(), frame);
        let a = add_noise(&frame, 0.001, 7).unwrap();
        let b = add_noise(&frame, 0.001, 7).unwrap();
        assert_eq!(a, b);
        let diff = &a.v - &frame.v;
        let n = diff.len() as f64;
        let mean = diff.sum() / n;
        let std = (diff.map(|x| (x - mean).powi(2)).sum() / (n - 1.0)).sqrt();
        let target = 0.001 * frame.v.amax();
        assert!((std - target).abs() < 0.05 * target, "{std} vs {target}");
        assert!(add_noise(&frame, -0.1, 1).is_err());
    }

    #[test]
    fn doubling_sigma_and_halving_impedance_halves_voltages() {
        let (d, mesh) = setup(8);
        let basis = CurrentPatternBasis::adjacent(8).unwrap();
        let a = simulate_voltages(&FemProblem::new(&d, mesh.clone(), &Constant(1.0), 1e-2).unwrap(), &basis).unwrap();
        let b = simulate_voltages(&FemProblem::new(&d, mesh, &Constant(2.0), 5e-3).unwrap(), &basis).unwrap();
        assert!((&a.v - &b.v * 2.0).amax() < 1e-10 * a.v.amax());
    }
}
