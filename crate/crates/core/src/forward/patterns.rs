//! Adjacent current patterns and their orthonormal basis.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Drive patterns for `L` electrodes.
///
/// `raw` holds the bipolar patterns column by column, `j` the orthonormalised
/// ones, and `raw = j * r` with `r` upper triangular, so data measured for the
/// raw patterns map to the `j` basis by right-multiplying with `r^{-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentPatternBasis {
    pub raw: DMatrix<f64>,
    pub j: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl CurrentPatternBasis {
    pub fn adjacent(electrodes: usize) -> Result<Self> {
        let raw = adjacent_patterns(electrodes)?;
        let (j, r) = orthonormalize_patterns(&raw)?;
        Ok(Self { raw, j, r })
    }

    pub fn electrodes(&self) -> usize {
        self.j.nrows()
    }

    pub fn patterns(&self) -> usize {
        self.j.ncols()
    }

    /// Express a frame measured for the raw patterns in the orthonormal basis.
    pub fn to_orthonormal(&self, raw_frame: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if raw_frame.ncols() != self.patterns() {
            return Err(Error::ShapeMismatch(format!(
                "frame has {} columns, basis has {} patterns",
                raw_frame.ncols(),
                self.patterns()
            )));
        }
        // V_J = V_raw r^{-1}  <=>  r^T V_J^T = V_raw^T
        let rt = self.r.transpose();
        let sol = rt
            .solve_lower_triangular(&raw_frame.transpose())
            .ok_or_else(|| Error::Singular("pattern change of basis".into()))?;
        Ok(sol.transpose())
    }
}

/// `L - 1` adjacent patterns: pattern `m` drives +1 into electrode `m` and
/// -1 into electrode `m + 1`.
pub fn adjacent_patterns(electrodes: usize) -> Result<DMatrix<f64>> {
    if electrodes < 3 {
        return Err(Error::InvalidParameter(format!(
            "adjacent patterns need at least 3 electrodes, got {electrodes}"
        )));
    }
    let n = electrodes - 1;
    let mut m = DMatrix::zeros(electrodes, n);
    for p in 0..n {
        m[(p, p)] = 1.0;
        m[(p + 1, p)] = -1.0;
    }
    Ok(m)
}

/// Modified Gram–Schmidt with one re-orthogonalisation pass, in column order.
///
/// Returns `(j, r)` with `raw = j r`. Each column's sign is kept so that the
/// diagonal of `r` is positive; orthonormal input comes back unchanged.
pub fn orthonormalize_patterns(raw: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (rows, cols) = raw.shape();
    if cols == 0 || cols > rows {
        return Err(Error::ShapeMismatch(format!("cannot orthonormalise a {rows}x{cols} pattern matrix")));
    }
    let mut q = raw.clone();
    let mut r = DMatrix::zeros(cols, cols);
    let scale = raw.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    for k in 0..cols {
        for _pass in 0..2 {
            for i in 0..k {
                let proj = q.column(i).dot(&q.column(k));
                r[(i, k)] += proj;
                let qi = q.column(i).clone_owned();
                q.column_mut(k).axpy(-proj, &qi, 1.0);
            }
        }
        let nrm = q.column(k).norm();
        if !(nrm > 1e-10 * scale) {
            return Err(Error::Singular(format!("current patterns are rank deficient at column {k}")));
        }
        r[(k, k)] = nrm;
        q.column_mut(k).scale_mut(1.0 / nrm);
    }
    Ok((q, r))
}
