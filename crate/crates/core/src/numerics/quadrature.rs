//! Gauss–Legendre rules and a few closed-form integrals.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `∫_a^b f` by an `n`-point Gauss–Legendre rule.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    x.iter().zip(&w).map(|(&xi, &wi)| wi * f(c + h * xi)).sum::<f64>() * h
}

// ∫_0^x sqrt(r^2 - t^2) dt for |x| <= r
fn half_chord_primitive(r: f64, x: f64) -> f64 {
    let x = x.clamp(-r, r);
    0.5 * (x * (r * r - x * x).max(0.0).sqrt() + r * r * (x / r).asin())
}

// Area of {x >= a, y >= b, x^2 + y^2 <= r^2}.
fn corner_area(r: f64, a: f64, b: f64) -> f64 {
    if b >= r || a >= r {
        return 0.0;
    }
    let p = |x: f64| half_chord_primitive(r, x);
    if b >= 0.0 {
        let c = (r * r - b * b).sqrt();
        let lo = a.max(-c);
        if lo >= c {
            0.0
        } else {
            p(c) - p(lo) - b * (c - lo)
        }
    } else {
        let c = if b <= -r { 0.0 } else { (r * r - b * b).sqrt() };
        let lo = a.max(-r);
        // |x| <= c: height s(x) - b ; c < |x| <= r: height 2 s(x)
        let mut area = 0.0;
        let seg = |x0: f64, x1: f64| if x1 > x0 { Some((x0, x1)) } else { None };
        if let Some((x0, x1)) = seg(lo.max(-c), c) {
            area += p(x1) - p(x0) - b * (x1 - x0);
        }
        if let Some((x0, x1)) = seg(lo, -c) {
            area += 2.0 * (p(x1) - p(x0));
        }
        if let Some((x0, x1)) = seg(lo.max(c), r) {
            area += 2.0 * (p(x1) - p(x0));
        }
        area
    }
}

/// Exact area of the rectangle `[x0, x1] x [y0, y1]` intersected with the
/// disc of radius `r` centred at the origin.
pub fn disc_rect_area(r: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let a = corner_area(r, x0, y0) - corner_area(r, x1, y0) - corner_area(r, x0, y1) + corner_area(r, x1, y1);
    a.max(0.0)
}

/// Mean of `ln(2 r sin(phi/2))` over `phi ∈ (0, a]`, i.e. the mean log chord
/// length from a point on a circle of radius `r` to the arc within angle `a`.
pub fn log_chord_average(r: f64, a: f64) -> f64 {
    assert!(a > 0.0 && a <= PI, "arc half-width must lie in (0, pi]");
    // ln(2 sin(phi/2)) = ln(phi) + ln(sin(phi/2)/(phi/2)); the second part is smooth
    let smooth = integrate(
        |phi| {
            let h = 0.5 * phi;
            if h == 0.0 {
                0.0
            } else {
                (h.sin() / h).ln()
            }
        },
        0.0,
        a,
        24,
    );
    let log_part = a * a.ln() - a;
    r.ln() + (log_part + smooth) / a
}

/// Mean of `ln|z|` over the square `[-h/2, h/2]^2`.
pub fn log_square_average(h: f64) -> f64 {
    // (ln(1/2) - 3 + pi/2) / 2 is the mean over the unit square
    h.ln() + 0.5 * (0.5_f64.ln() - 3.0 + PI / 2.0)
}
