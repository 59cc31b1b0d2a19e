//! Faddeev's Green's function against an independent quadrature of its
//! Fourier-space definition, and the exponential integral against
//! high-precision reference values.

mod common;

use num_complex::Complex64;

use common::greens::greens_by_quadrature;
use dbar_eit::cgo_boundary::{faddeev_g, faddeev_greens};
use dbar_eit::numerics::e1;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[test]
fn greens_matches_fourier_quadrature_at_random_points() {
    for (z, k) in common::greens::sample_pairs(20, 7) {
        let expected = greens_by_quadrature(z, k);
        let got = faddeev_greens(z, k).unwrap();
        let rel = (got - expected.re).abs() / expected.re.abs();
        assert!(expected.im.abs() < 1e-3 * expected.re.abs(), "quadrature not real at z={z}, k={k}: {expected}");
        assert!(rel < 1e-3, "z={z}, k={k}: G={got}, quadrature {}, rel {rel:e}", expected.re);
        let g = faddeev_g(z, k).unwrap();
        assert!(((I * k * z).exp() * g - got).norm() < 1e-12 * (1.0 + got.abs()));
    }
}

#[test]
fn greens_unit_arguments() {
    // −Ci(1)/2π
    let g = faddeev_greens(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)).unwrap();
    assert!((g + 0.053_699_502_1).abs() < 1e-10, "{g}");
}

#[test]
fn greens_is_harmonic_away_from_origin() {
    let k = Complex64::new(2.0, 0.0);
    let z = Complex64::new(1.0, 0.5);
    let g = |w: Complex64| faddeev_greens(w, k).unwrap();
    let mut prev = f64::INFINITY;
    for h in [1e-2, 5e-3] {
        let lap = (g(z + h) + g(z - h) + g(z + I * h) + g(z - I * h) - 4.0 * g(z)) / (h * h);
        assert!(lap.abs() < prev / 3.0 || prev.is_infinite());
        assert!(lap.abs() < 1e-3, "{lap}");
        prev = lap.abs();
    }
}

#[test]
fn e1_matches_reference_values() {
    // principal branch, 30-digit arithmetic
    let cases = [
        ((1.0, 0.0), (0.2193839343955202736772, 0.0)),
        ((0.1, 0.0), (1.822923958419390615852, 0.0)),
        ((5.0, 0.0), (0.001148295591275325797331, 0.0)),
        ((0.0, 1.0), (-0.3374039229009681346626, -0.62471325642771360429)),
        ((1.0, 1.0), (0.0002816244519814183255099, -0.1793245350393589401453)),
        ((-2.0, 0.5), (-4.725749944798861697589, -1.332341852814199672072)),
        ((3.0, -4.0), (0.0008639539589795851115823, -0.008786208377197442041805)),
        ((0.0, 20.0), (-0.04441982084535331653977, -0.02255462575145677906768)),
    ];
    for ((x, y), (re, im)) in cases {
        let got = e1(Complex64::new(x, y));
        let want = Complex64::new(re, im);
        assert!((got - want).norm() < 1e-12 * want.norm().max(1e-3), "E1({x}+{y}i) = {got}, want {want}");
    }
}
