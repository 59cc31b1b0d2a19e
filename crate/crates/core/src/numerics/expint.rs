//! Exponential integral E1 for complex arguments (principal branch).
//!
//! Small arguments and arguments near the negative real axis use the power
//! series; everything else uses the continued fraction for `e^w E1(w)`, which
//! is what callers actually need since it stays bounded for large `|w|`.

use num_complex::Complex64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_RADIUS: f64 = 2.0;
const SERIES_RADIUS_NEG_AXIS: f64 = 40.0;
const NEG_AXIS_ANGLE: f64 = 5.0 * std::f64::consts::PI / 6.0;
const CF_MAX_ITER: usize = 2000;

fn use_series(w: Complex64) -> bool {
    let r = w.norm();
    r <= SERIES_RADIUS || (w.arg().abs() > NEG_AXIS_ANGLE && r < SERIES_RADIUS_NEG_AXIS)
}

fn series(w: Complex64) -> Complex64 {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 1..=500 {
        let nf = n as f64;
        term *= -w / nf;
        let c = term / nf;
        sum += c;
        if n > 2 && c.norm() < 1e-17 * sum.norm() {
            break;
        }
    }
    -EULER_GAMMA - w.ln() - sum
}

// Modified Lentz evaluation of the even continued fraction of e^w E1(w).
fn continued_fraction(w: Complex64) -> Complex64 {
    let tiny = 1e-300;
    let mut b = w + 1.0;
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=CF_MAX_ITER {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h
}

/// E1(w) on the principal branch. Diverges logarithmically at `w = 0`.
pub fn e1(w: Complex64) -> Complex64 {
    if use_series(w) {
        series(w)
    } else {
        continued_fraction(w) * (-w).exp()
    }
}

/// `e^w E1(w)`, evaluated without overflow for large `|w|`.
pub fn scaled_e1(w: Complex64) -> Complex64 {
    if use_series(w) {
        series(w) * w.exp()
    } else {
        continued_fraction(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn real_axis_values() {
        // E1(1) and E1(5) to 16 digits
        assert!(rel(e1(Complex64::new(1.0, 0.0)), Complex64::new(0.219_383_934_395_520_3, 0.0)) < 1e-14);
        assert!(rel(e1(Complex64::new(5.0, 0.0)), Complex64::new(0.001_148_295_591_275_325_8, 0.0)) < 1e-13);
    }

    #[test]
    fn branch_cut_imaginary_part() {
        // just above the negative real axis Im E1 = -pi
        let v = e1(Complex64::new(-3.0, 1e-300));
        assert!((v.im + std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn scaled_agrees_with_unscaled() {
        for &w in &[
            Complex64::new(0.5, 0.5),
            Complex64::new(3.0, -4.0),
            Complex64::new(-6.0, 2.0),
            Complex64::new(0.0, 15.0),
        ] {
            assert!(rel(scaled_e1(w), e1(w) * w.exp()) < 1e-12, "{w}");
        }
    }

    #[test]
    fn series_and_fraction_agree_at_switch() {
        // the fraction is only used away from the negative real axis
        for k in 0..21 {
            let t = -2.5 + 0.25 * k as f64;
            let w = Complex64::from_polar(2.5, t);
            let a = series(w);
            let b = continued_fraction(w) * (-w).exp();
            assert!(rel(a, b) < 1e-11, "{w}: {a} vs {b}");
        }
    }
}
