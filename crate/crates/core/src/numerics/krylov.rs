//! BiCGSTAB for real-linear operators on complex vectors.
//!
//! The operators in this crate involve complex conjugation, so they are only
//! linear over the reals. Treating `C^n` as `R^{2n}` with the inner product
//! `Re <a, b>` lets the usual BiCGSTAB recurrences run with real scalars while
//! the data stay in complex storage.

use num_complex::Complex64;

/// Iterations aim at this fraction of an acceptance tolerance, so the
/// independently recomputed residual clears the tolerance with margin.
pub const TARGET_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    /// Target relative residual `||b - Ax|| / ||b||`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KrylovOutcome {
    pub solution: Vec<Complex64>,
    pub iterations: usize,
    /// Relative residual recomputed from scratch at exit.
    pub residual: f64,
    pub converged: bool,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    dot(a, a).sqrt()
}

/// `||b - A x|| / ||b||` computed by a fresh operator application.
pub fn relative_residual<F>(op: &mut F, b: &[Complex64], x: &[Complex64]) -> f64
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    let mut ax = vec![Complex64::new(0.0, 0.0); b.len()];
    op(x, &mut ax);
    let r: Vec<Complex64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let nb = norm(b);
    if nb == 0.0 {
        norm(&r)
    } else {
        norm(&r) / nb
    }
}

/// Solve `A x = b` for a real-linear `A`, starting from `x0`.
///
/// On a breakdown of the recurrences the iteration restarts from the current
/// iterate with a fresh shadow residual. The returned residual is always
/// recomputed by applying `op` once more, never taken from the recurrence.
pub fn bicgstab<F>(mut op: F, b: &[Complex64], x0: &[Complex64], opts: KrylovOptions) -> KrylovOutcome
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    let n = b.len();
    assert_eq!(x0.len(), n, "initial guess has the wrong length");
    let zero = Complex64::new(0.0, 0.0);
    let nb = norm(b);
    if nb == 0.0 {
        return KrylovOutcome {
            solution: vec![zero; n],
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }

    let mut x = x0.to_vec();
    let mut r = vec![zero; n];
    let mut v = vec![zero; n];
    let mut p = vec![zero; n];
    let mut s = vec![zero; n];
    let mut t = vec![zero; n];

    let mut iterations = 0;
    let mut restarts = 0;
    'outer: loop {
        op(&x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        if norm(&r) / nb <= opts.tolerance {
            break;
        }
        let r_hat = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0_f64, 1.0_f64, 1.0_f64);
        v.iter_mut().for_each(|e| *e = zero);
        p.iter_mut().for_each(|e| *e = zero);

        while iterations < opts.max_iterations {
            iterations += 1;
            let rho_new = dot(&r_hat, &r);
            if rho_new.abs() < 1e-300 || omega.abs() < 1e-300 {
                restarts += 1;
                if restarts > 20 {
                    break 'outer;
                }
                continue 'outer;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            op(&p, &mut v);
            let rv = dot(&r_hat, &v);
            if rv.abs() < 1e-300 {
                restarts += 1;
                if restarts > 20 {
                    break 'outer;
                }
                continue 'outer;
            }
            alpha = rho / rv;
            for i in 0..n {
                s[i] = r[i] - alpha * v[i];
            }
            if norm(&s) / nb <= opts.tolerance {
                for i in 0..n {
                    x[i] += alpha * p[i];
                }
                break 'outer;
            }
            op(&s, &mut t);
            let tt = dot(&t, &t);
            omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
            for i in 0..n {
                x[i] += alpha * p[i] + omega * s[i];
                r[i] = s[i] - omega * t[i];
            }
            if norm(&r) / nb <= opts.tolerance {
                break 'outer;
            }
        }
        break;
    }

    let residual = relative_residual(&mut op, b, &x);
    KrylovOutcome {
        converged: residual <= opts.tolerance,
        solution: x,
        iterations,
        residual,
    }
}
