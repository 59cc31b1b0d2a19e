//! Envelope (skyline) Cholesky factorisation for sparse SPD matrices whose
//! nonzeros stay close to the diagonal.

use crate::error::{Error, Result};

/// Lower triangle of a symmetric matrix stored row by row from the first
/// structurally nonzero column to the diagonal.
#[derive(Debug, Clone)]
pub struct SkylineMatrix {
    first: Vec<usize>,
    offset: Vec<usize>,
    values: Vec<f64>,
}

impl SkylineMatrix {
    /// `first[i]` is the leftmost column that row `i` may touch (`<= i`).
    pub fn with_envelope(first: Vec<usize>) -> Self {
        let mut offset = Vec::with_capacity(first.len() + 1);
        let mut acc = 0;
        for (i, &f) in first.iter().enumerate() {
            assert!(f <= i, "envelope start beyond the diagonal");
            offset.push(acc);
            acc += i - f + 1;
        }
        offset.push(acc);
        Self {
            first,
            offset,
            values: vec![0.0; acc],
        }
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn stored(&self) -> usize {
        self.values.len()
    }

    /// Add `v` to entry `(i, j)` and its mirror. Panics outside the envelope.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        assert!(c >= self.first[r], "entry ({r}, {c}) outside the envelope");
        self.values[self.offset[r] + c - self.first[r]] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if c < self.first[r] {
            0.0
        } else {
            self.values[self.offset[r] + c - self.first[r]]
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.values[self.offset[i]..self.offset[i + 1]]
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let f = self.first[i];
            let row = self.row(i);
            let (diag, off) = row.split_last().expect("empty row");
            y[i] += diag * x[i];
            for (k, &a) in off.iter().enumerate() {
                y[i] += a * x[f + k];
                y[f + k] += a * x[i];
            }
        }
        y
    }

    /// In-place Cholesky `A = L L^T`.
    pub fn factor(mut self) -> Result<SkylineCholesky> {
        let n = self.dim();
        for i in 0..n {
            let fi = self.first[i];
            let oi = self.offset[i];
            for j in fi..=i {
                let fj = self.first[j];
                let oj = self.offset[j];
                let k0 = fi.max(fj);
                let mut s = self.values[oi + j - fi];
                let a = &self.values[oi + k0 - fi..oi + j - fi];
                let b = &self.values[oj + k0 - fj..oj + j - fj];
                s -= a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
                if j < i {
                    let d = self.values[oj + j - fj];
                    self.values[oi + j - fi] = s / d;
                } else {
                    if !(s > 0.0) {
                        return Err(Error::Singular(format!("matrix not positive definite at row {i}")));
                    }
                    self.values[oi + i - fi] = s.sqrt();
                }
            }
        }
        Ok(SkylineCholesky { l: self })
    }
}

#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    l: SkylineMatrix,
}

impl SkylineCholesky {
    pub fn dim(&self) -> usize {
        self.l.dim()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let f = self.l.first[i];
            let row = self.l.row(i);
            let (diag, off) = row.split_last().expect("empty row");
            let s: f64 = off.iter().zip(&y[f..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - s) / diag;
        }
        for i in (0..n).rev() {
            let f = self.l.first[i];
            let row = self.l.row(i);
            let (diag, off) = row.split_last().expect("empty row");
            y[i] /= diag;
            let xi = y[i];
            for (k, &a) in off.iter().enumerate() {
                y[f + k] -= a * xi;
            }
        }
        y
    }
}
