//! Independent quadrature of Faddeev's Green's function from its
//! Fourier-space definition.

use std::f64::consts::PI;

use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// 15-point Kronrod nodes on [0, 1] (symmetric half) with Kronrod and
/// 7-point Gauss weights.
const XK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let s = f(c - h * XK[j]) + f(c + h * XK[j]);
        k += s * WK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// Adaptive Gauss–Kronrod over consecutive break points.
fn adaptive<F: FnMut(f64) -> Complex64>(mut f: F, breaks: &[f64], tol: f64) -> Complex64 {
    let mut stack: Vec<(f64, f64, u32)> = breaks.windows(2).map(|w| (w[0], w[1], 0)).collect();
    let total = breaks[breaks.len() - 1] - breaks[0];
    let mut sum = Complex64::new(0.0, 0.0);
    while let Some((a, b, depth)) = stack.pop() {
        let (v, err) = gk15(&mut f, a, b);
        if err <= tol * (b - a) / total || depth >= 40 {
            sum += v;
        } else {
            let m = 0.5 * (a + b);
            stack.push((a, m, depth + 1));
            stack.push((m, b, depth + 1));
        }
    }
    sum
}

/// `∫ e^{i x·ξ − ε|ξ|²} / (|ξ|² + 2k(ξ₁ + iξ₂)) dξ` in polar coordinates,
/// where the Jacobian cancels the zero of the symbol at ξ = 0 and the second
/// zero sits at ρ = 2|k|, φ = π − arg k.
fn damped_symbol_integral(z: Complex64, k: Complex64, eps: f64) -> Complex64 {
    let r = z.norm();
    let theta = z.arg();
    let rho0 = 2.0 * k.norm();
    let phi0 = (PI - k.arg()).rem_euclid(2.0 * PI);
    let rho_max = (40.0 / eps).sqrt();
    let mut rho_breaks: Vec<f64> = (0..=((rho_max / 4.0).ceil() as usize)).map(|i| (i as f64 * 4.0).min(rho_max)).collect();
    rho_breaks.push(rho0);
    rho_breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    rho_breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let inner = |phi: f64| {
        let e = Complex64::from_polar(1.0, phi);
        let a = r * (phi - theta).cos();
        adaptive(
            |rho| (I * rho * a).exp() * (-eps * rho * rho).exp() / (rho + 2.0 * k * e),
            &rho_breaks,
            1e-10,
        )
    };
    let mut phi_breaks: Vec<f64> = (0..=16).map(|i| i as f64 * PI / 8.0).collect();
    phi_breaks.push(phi0);
    phi_breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    phi_breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    adaptive(inner, &phi_breaks, 1e-9)
}

/// `G_k(z) = e^{ikz} g_k(z)` with `g_k` the inverse Fourier transform of
/// `1/(|ξ|² + 2k(ξ₁ + iξ₂))`. The Gaussian damping smooths `g_k` by a heat
/// kernel of variance 2ε; Richardson extrapolation in ε removes the leading
/// term.
pub fn greens_by_quadrature(z: Complex64, k: Complex64) -> Complex64 {
    let (e1_, e2_) = (4e-4, 2e-4);
    let a = damped_symbol_integral(z, k, e1_);
    let b = damped_symbol_integral(z, k, e2_);
    let g = (2.0 * b - a) / (4.0 * PI * PI);
    (I * k * z).exp() * g
}

/// `(1, 1)` followed by `count` random pairs with `0.3 ≤ |z| ≤ 1.5` and
/// `0.3 ≤ |k| ≤ 2`. Pairs where `|G_k(z)| ≤ 0.01` are redrawn, since a
/// relative comparison is meaningless at a sign change.
pub fn sample_pairs(count: usize, seed: u64) -> Vec<(Complex64, Complex64)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = vec![(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0))];
    while pairs.len() < count + 1 {
        let z = Complex64::from_polar(rng.gen_range(0.3..1.5), rng.gen_range(0.0..2.0 * PI));
        let k = Complex64::from_polar(rng.gen_range(0.3..2.0), rng.gen_range(0.0..2.0 * PI));
        if dbar_eit::cgo_boundary::faddeev_greens(z, k).unwrap().abs() > 0.01 {
            pairs.push((z, k));
        }
    }
    pairs
}
