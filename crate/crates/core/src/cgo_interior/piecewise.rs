//! Piecewise scattering data: boundary-computed t inside R1, prior-computed
//! t between R1 and R2, zero beyond.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::KGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TSource {
    Bie,
    Prior,
    Zero,
}

/// `t(k)` on every node of a k-grid with the source of each sample.
#[derive(Debug, Clone)]
pub struct ScatteringTable {
    pub kgrid: KGrid,
    pub t: Vec<Complex64>,
    pub source: Vec<TSource>,
}

impl ScatteringTable {
    pub fn zeros(kgrid: KGrid) -> Self {
        let n = kgrid.len();
        Self {
            kgrid,
            t: vec![Complex64::new(0.0, 0.0); n],
            source: vec![TSource::Zero; n],
        }
    }

    pub fn count(&self, s: TSource) -> usize {
        self.source.iter().filter(|&&x| x == s).count()
    }

    /// Write `k_re,k_im,t_re,t_im,source` for every node.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse(e.to_string()))?;
        w.write_record(["k_re", "k_im", "t_re", "t_im", "source"]).map_err(|e| Error::Parse(e.to_string()))?;
        for (i, (t, s)) in self.t.iter().zip(&self.source).enumerate() {
            let k = self.kgrid.point(i);
            let mut rec: Vec<String> = [k.re, k.im, t.re, t.im].iter().map(|x| format!("{x:.17e}")).collect();
            rec.push(format!("{s:?}").to_lowercase());
            w.write_record(&rec).map_err(|e| Error::Parse(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Combine samples: `t_bie` on `0 < |k| ≤ r1`, `t_pr` on `r1 < |k| ≤ r2`,
/// zero elsewhere (including k = 0).
///
/// With `r2 <= r1` the prior contributes nothing and the table is the plain
/// truncated boundary data.
pub fn assemble_piecewise_t(
    kgrid: &KGrid,
    r1: f64,
    r2: f64,
    t_bie: &BTreeMap<usize, Complex64>,
    t_pr: &BTreeMap<usize, Complex64>,
) -> Result<ScatteringTable> {
    if !(r1 >= 0.0) || !(r2 >= 0.0) {
        return Err(Error::InvalidParameter(format!("truncation radii must be non-negative, got {r1}, {r2}")));
    }
    let mut table = ScatteringTable::zeros(kgrid.clone());
    for i in 0..kgrid.len() {
        if kgrid.is_origin(i) {
            continue;
        }
        // same closed-disc test as `KGrid::disc_indices`
        let r = kgrid.point(i).norm();
        let (src, map, name) = if r <= r1 * (1.0 + 1e-12) {
            (TSource::Bie, t_bie, "boundary")
        } else if r <= r2 * (1.0 + 1e-12) {
            (TSource::Prior, t_pr, "prior")
        } else {
            continue;
        };
        let v = *map.get(&i).ok_or_else(|| {
            Error::InvalidParameter(format!("missing {name} scattering sample at k = {}", kgrid.point(i)))
        })?;
        table.t[i] = v;
        table.source[i] = src;
    }
    Ok(table)
}
