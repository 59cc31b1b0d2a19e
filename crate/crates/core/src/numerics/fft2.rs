//! Square 2-D FFTs on row-major buffers.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Smallest `n' >= n` whose only prime factors are 2, 3 and 5.
pub fn next_fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Forward/inverse 2-D transform of an `n x n` buffer. The inverse is scaled
/// by `1/n^2`, so `inverse(forward(x)) == x`.
#[derive(Clone)]
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forward(&self, buf: &mut [Complex64], work: &mut Vec<Complex64>) {
        self.apply(&*self.forward, buf, work);
    }

    pub fn inverse(&self, buf: &mut [Complex64], work: &mut Vec<Complex64>) {
        self.apply(&*self.inverse, buf, work);
        let s = 1.0 / (self.n * self.n) as f64;
        buf.iter_mut().for_each(|v| *v *= s);
    }

    fn apply(&self, plan: &dyn Fft<f64>, buf: &mut [Complex64], work: &mut Vec<Complex64>) {
        let n = self.n;
        assert_eq!(buf.len(), n * n, "buffer is not n x n");
        work.resize(n * n, Complex64::new(0.0, 0.0));
        // rows, transpose, rows (former columns), transpose back
        plan.process(buf);
        transpose(buf, work, n);
        plan.process(work);
        transpose(work, buf, n);
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for ib in (0..n).step_by(B) {
        for jb in (0..n).step_by(B) {
            for i in ib..(ib + B).min(n) {
                for j in jb..(jb + B).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}
