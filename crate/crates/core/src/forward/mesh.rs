//! Triangulation of the unit disc by concentric rings.
//!
//! The outer ring carries the electrode edges exactly; interior rings are
//! graded from the boundary spacing to a uniform interior spacing and joined
//! by a zipper triangulation. Nodes are numbered from the centre outwards,
//! which keeps the stiffness matrix envelope close to one ring wide.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshConfig {
    /// Boundary segments per electrode.
    pub electrode_segments: usize,
    /// Target interior edge length in units of the radius.
    pub interior_spacing: f64,
    /// Growth factor of the ring spacing away from the boundary.
    pub grading: f64,
}

impl MeshConfig {
    /// Mesh used to generate measurement data.
    pub fn data() -> Self {
        Self {
            electrode_segments: 12,
            interior_spacing: 0.018,
            grading: 1.12,
        }
    }

    /// Coarser mesh used for the homogeneous reference map, so that the data
    /// and the reference do not share discretisation error.
    pub fn reference() -> Self {
        Self {
            electrode_segments: 8,
            interior_spacing: 0.022,
            grading: 1.15,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.electrode_segments < 1 {
            return Err(Error::InvalidParameter("need at least one segment per electrode".into()));
        }
        if !(self.interior_spacing > 0.0 && self.interior_spacing < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "interior spacing {} out of range (0, 0.5)",
                self.interior_spacing
            )));
        }
        if !(self.grading >= 1.0 && self.grading < 2.0) {
            return Err(Error::InvalidParameter(format!("grading {} out of range [1, 2)", self.grading)));
        }
        Ok(())
    }
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self::data()
    }
}

#[derive(Debug, Clone)]
pub struct DiscMesh {
    pub nodes: Vec<[f64; 2]>,
    /// Counter-clockwise triangles.
    pub triangles: Vec<[usize; 3]>,
    /// Boundary edges `(a, b)` under each electrode.
    pub electrode_edges: Vec<Vec<(usize, usize)>>,
}

impl DiscMesh {
    /// Mesh of the unit disc for `electrodes` electrodes, each spanning the
    /// angle `arc` (radians) centred at `2πl/L`.
    pub fn build(electrodes: usize, arc: f64, cfg: &MeshConfig) -> Result<Self> {
        cfg.validate()?;
        let dtheta = 2.0 * PI / electrodes as f64;
        if electrodes < 2 || !(arc > 0.0) || arc > dtheta * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "electrode arc {arc} does not fit {electrodes} electrodes"
            )));
        }
        let gap = (dtheta - arc).max(0.0);
        let se = cfg.electrode_segments;
        let sg = if gap < 1e-12 * dtheta {
            0
        } else {
            ((se as f64 * gap / arc).round() as usize).max(1)
        };

        // boundary ring, electrode edges aligned with nodes
        let mut boundary = Vec::with_capacity(electrodes * (se + sg));
        let mut electrode_start = Vec::with_capacity(electrodes);
        for l in 0..electrodes {
            let start = l as f64 * dtheta - 0.5 * arc;
            electrode_start.push(boundary.len());
            for i in 0..se {
                boundary.push(start + arc * i as f64 / se as f64);
            }
            for i in 0..sg {
                boundary.push(start + arc + gap * i as f64 / sg as f64);
            }
        }
        let nb = boundary.len();
        let hb = 2.0 * PI / nb as f64;

        // radii and node counts of interior rings, outside in
        let row = 3f64.sqrt() / 2.0;
        let mut rings: Vec<(f64, Vec<f64>)> = vec![(1.0, boundary)];
        let mut h = hb;
        let mut rho = 1.0;
        let mut parity = 0.0;
        loop {
            h = (h * cfg.grading).min(cfg.interior_spacing);
            let dr = h * row;
            if rho - dr < 1.2 * dr {
                break;
            }
            rho -= dr;
            parity = 0.5 - parity;
            let n = ((2.0 * PI * rho / h).round() as usize).max(6);
            let step = 2.0 * PI / n as f64;
            rings.push((rho, (0..n).map(|i| (i as f64 + parity) * step).collect()));
        }

        // number nodes centre first
        let mut nodes = vec![[0.0, 0.0]];
        let mut ring_index: Vec<Vec<usize>> = vec![Vec::new(); rings.len()];
        for (r, (rho, angles)) in rings.iter().enumerate().rev() {
            for &a in angles {
                ring_index[r].push(nodes.len());
                nodes.push([rho * a.cos(), rho * a.sin()]);
            }
        }

        let mut triangles = Vec::new();
        let innermost = rings.len() - 1;
        let inner = &ring_index[innermost];
        for i in 0..inner.len() {
            triangles.push([0, inner[i], inner[(i + 1) % inner.len()]]);
        }
        for r in 0..innermost {
            zipper(&rings[r + 1].1, &ring_index[r + 1], &rings[r].1, &ring_index[r], &mut triangles);
        }
        for t in &mut triangles {
            if signed_area(&nodes, t) < 0.0 {
                t.swap(1, 2);
            }
        }

        let bidx = &ring_index[0];
        let electrode_edges = electrode_start
            .iter()
            .map(|&s| (0..se).map(|i| (bidx[s + i], bidx[(s + i + 1) % nb])).collect())
            .collect();

        let mesh = Self {
            nodes,
            triangles,
            electrode_edges,
        };
        mesh.check()?;
        Ok(mesh)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn area(&self, t: usize) -> f64 {
        signed_area(&self.nodes, &self.triangles[t])
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0]
    }

    fn check(&self) -> Result<()> {
        // inscribed polygon area, each triangle non-degenerate
        let total: f64 = (0..self.triangles.len()).map(|t| self.area(t)).sum();
        let nb = self.electrode_edges.iter().map(|e| e.len()).sum::<usize>();
        if (0..self.triangles.len()).any(|t| self.area(t) <= 0.0) || nb == 0 || !(total > 3.0 && total <= PI) {
            return Err(Error::InvalidParameter(format!("degenerate disc mesh (area {total})")));
        }
        Ok(())
    }
}

fn signed_area(nodes: &[[f64; 2]], t: &[usize; 3]) -> f64 {
    let (a, b, c) = (nodes[t[0]], nodes[t[1]], nodes[t[2]]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

// Triangulate the band between two rings whose angles increase around the circle.
fn zipper(a_ang: &[f64], a_idx: &[usize], b_ang: &[f64], b_idx: &[usize], out: &mut Vec<[usize; 3]>) {
    let norm = |x: f64| x.rem_euclid(2.0 * PI);
    let order = |ang: &[f64]| {
        let mut o: Vec<usize> = (0..ang.len()).collect();
        o.sort_by(|&i, &j| norm(ang[i]).total_cmp(&norm(ang[j])));
        o
    };
    let (oa, ob) = (order(a_ang), order(b_ang));
    let (na, nb) = (oa.len(), ob.len());
    let angle = |ang: &[f64], o: &[usize], i: usize| norm(ang[o[i % o.len()]]) + if i >= o.len() { 2.0 * PI } else { 0.0 };
    let (mut i, mut j) = (0, 0);
    while i < na || j < nb {
        let next_a = angle(a_ang, &oa, i + 1);
        let next_b = angle(b_ang, &ob, j + 1);
        let (ai, bj) = (a_idx[oa[i % na]], b_idx[ob[j % nb]]);
        if j >= nb || (i < na && next_a <= next_b) {
            out.push([ai, a_idx[oa[(i + 1) % na]], bj]);
            i += 1;
        } else {
            out.push([ai, b_idx[ob[(j + 1) % nb]], bj]);
            j += 1;
        }
    }
}
