//! Property checks shared by the invariant suite and the acceptance run.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use dbar_eit::cgo_interior::{assemble_piecewise_t, ScatteringTable, TSource};
use dbar_eit::dbar::{dbar_rhs, reconstruct, MuIntField, ReconstructionParams};
use dbar_eit::field::Conductivity;
use dbar_eit::forward::{
    adjacent_patterns, simulate_voltages, CurrentPatternBasis, DiscMesh, DnMap, FemProblem, MeshConfig,
};
use dbar_eit::geometry::{build_zgrid, DomainDisc, KGrid};

/// Background plus Gaussian bumps, in physical coordinates.
#[derive(Debug, Clone)]
pub struct Bumps {
    background: f64,
    bumps: Vec<(f64, f64, f64, f64)>,
}

impl Conductivity for Bumps {
    fn at(&self, p: Complex64) -> f64 {
        self.background
            + self
                .bumps
                .iter()
                .map(|&(x, y, w, a)| a * (-((p.re - x).powi(2) + (p.im - y).powi(2)) / (w * w)).exp())
                .sum::<f64>()
    }
}

pub fn bumps() -> impl Strategy<Value = Bumps> {
    (
        0.2f64..2.0,
        prop::collection::vec((-0.5f64..0.5, -0.5f64..0.5, 0.05f64..0.3, -0.15f64..1.0), 0..4),
    )
        .prop_map(|(background, bumps)| Bumps { background, bumps })
}

fn problem(l: usize, sigma: &Bumps, contact: f64) -> (DomainDisc, FemProblem) {
    let domain = DomainDisc::with_coverage(1.0, l, 0.5).unwrap();
    let mesh_cfg = MeshConfig {
        electrode_segments: 2,
        interior_spacing: 0.12,
        grading: 1.3,
    };
    let mesh = Arc::new(DiscMesh::build(l, domain.normalized_electrode_arc(), &mesh_cfg).unwrap());
    let p = FemProblem::new(&domain, mesh, sigma, contact).unwrap();
    (domain, p)
}

fn zero_sum_currents(l: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, l).prop_filter_map("all-zero pattern", |mut c| {
        let mean = c.iter().sum::<f64>() / c.len() as f64;
        c.iter_mut().for_each(|x| *x -= mean);
        (c.iter().map(|x| x.abs()).fold(0.0, f64::max) > 1e-3).then_some(c)
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub type ReciprocityCase = (Bumps, f64, Vec<f64>, Vec<f64>);

pub fn reciprocity_case() -> impl Strategy<Value = ReciprocityCase> {
    (bumps(), 0.01f64..1.0, zero_sum_currents(8), zero_sum_currents(8))
}

/// `⟨V(I₁), I₂⟩ = ⟨V(I₂), I₁⟩` for the CEM transfer map.
pub fn cem_reciprocity((sigma, contact, i1, i2): ReciprocityCase) -> Result<(), TestCaseError> {
    let (_, p) = problem(8, &sigma, contact);
    let solver = p.factorize().unwrap();
    let v1 = solver.solve(&i1).unwrap().electrode_voltages;
    let v2 = solver.solve(&i2).unwrap().electrode_voltages;
    let (a, b) = (dot(&v1, &i2), dot(&v2, &i1));
    prop_assert!((a - b).abs() <= 1e-10 * (a.abs() + b.abs() + 1e-12), "{} vs {}", a, b);
    Ok(())
}

pub fn frame_case() -> impl Strategy<Value = (Bumps, usize)> {
    (bumps(), 6usize..14)
}

pub fn nd_symmetry((sigma, l): (Bumps, usize)) -> Result<(), TestCaseError> {
    let (domain, p) = problem(l, &sigma, 0.1);
    let basis = CurrentPatternBasis::adjacent(l).unwrap();
    let frame = simulate_voltages(&p, &basis).unwrap();
    let nd = DnMap::from_frame(&basis, &frame, &domain).unwrap().nd;
    let asym = (&nd - nd.transpose()).abs().max();
    prop_assert!(asym <= 1e-10 * nd.abs().max(), "asymmetry {}", asym);
    Ok(())
}

pub fn voltages_mean_free((sigma, l): (Bumps, usize)) -> Result<(), TestCaseError> {
    let (_, p) = problem(l, &sigma, 0.1);
    let basis = CurrentPatternBasis::adjacent(l).unwrap();
    let frame = simulate_voltages(&p, &basis).unwrap();
    let scale = frame.v.abs().max();
    for c in frame.v.column_iter() {
        prop_assert!(c.sum().abs() <= 1e-10 * scale * l as f64);
    }
    Ok(())
}

pub fn unbalanced_case() -> impl Strategy<Value = (Bumps, f64)> {
    (bumps(), 0.01f64..1.0)
}

pub fn unbalanced_rejected((sigma, shift): (Bumps, f64)) -> Result<(), TestCaseError> {
    let (_, p) = problem(8, &sigma, 0.1);
    let mut c = vec![0.0; 8];
    c[0] = 1.0;
    c[1] = -1.0 + shift;
    prop_assert!(p.factorize().unwrap().solve(&c).is_err());
    Ok(())
}

pub fn electrode_count() -> impl Strategy<Value = usize> {
    3usize..80
}

pub fn patterns_zero_sum(l: usize) -> Result<(), TestCaseError> {
    let raw = adjacent_patterns(l).unwrap();
    let basis = CurrentPatternBasis::adjacent(l).unwrap();
    prop_assert_eq!(raw.ncols(), l - 1);
    for c in raw.column_iter() {
        prop_assert!(c.sum().abs() < 1e-14);
    }
    for c in basis.j.column_iter() {
        prop_assert!(c.sum().abs() < 1e-12);
    }
    let gram = basis.j.transpose() * &basis.j;
    let eye = nalgebra::DMatrix::<f64>::identity(l - 1, l - 1);
    prop_assert!((gram - eye).abs().max() < 1e-12);
    prop_assert!((&basis.j * &basis.r - &basis.raw).abs().max() < 1e-12);
    Ok(())
}

pub type ProvenanceCase = (usize, f64, f64, f64, u64);

pub fn provenance_case() -> impl Strategy<Value = ProvenanceCase> {
    (4usize..20, 2.0f64..12.0, 0.05f64..1.0, 0.0f64..1.5, any::<u64>())
}

/// Every table sample carries the source its radius calls for, and its value
/// comes from that source.
pub fn table_provenance((half, extent, r1_frac, r2_frac, seed): ProvenanceCase) -> Result<(), TestCaseError> {
    let kg = KGrid::with_extent(2 * half + 1, extent).unwrap();
    let r1 = r1_frac * extent;
    let r2 = r1 + r2_frac * extent;
    let value = |i: usize, tag: f64| Complex64::new(tag, (i as f64 + seed as f64).sin());
    let bie: BTreeMap<_, _> = kg.disc_indices(r1).into_iter().map(|i| (i, value(i, 1.0))).collect();
    let pr: BTreeMap<_, _> = kg.disc_indices(r2).into_iter().map(|i| (i, value(i, 2.0))).collect();
    let t = assemble_piecewise_t(&kg, r1, r2, &bie, &pr).unwrap();
    let in_r1 = kg.disc_mask(r1);
    let in_r2 = kg.disc_mask(r2);
    for i in 0..kg.len() {
        let expect = if kg.is_origin(i) || !in_r2[i] {
            TSource::Zero
        } else if in_r1[i] {
            TSource::Bie
        } else {
            TSource::Prior
        };
        prop_assert_eq!(t.source[i], expect);
        match expect {
            TSource::Zero => prop_assert_eq!(t.t[i], Complex64::new(0.0, 0.0)),
            TSource::Bie => prop_assert_eq!(t.t[i], bie[&i]),
            TSource::Prior => prop_assert_eq!(t.t[i], pr[&i]),
        }
    }
    prop_assert_eq!(t.count(TSource::Bie) + t.count(TSource::Prior) + t.count(TSource::Zero), kg.len());
    Ok(())
}

fn wavy_mu_int(n: usize, r2: f64, phase: f64, amp: f64) -> MuIntField {
    MuIntField {
        r2,
        values: (0..n)
            .map(|i| Complex64::new(1.0 + amp * (i as f64 * 0.37 + phase).sin(), amp * (i as f64 * 0.11 - phase).cos()))
            .collect(),
        area_ratio: 1.0,
    }
}

/// Smooth scattering data on `|k| ≤ r2` of size `amp`.
fn smooth_table(kg: &KGrid, r1: f64, r2: f64, amp: f64, phase: f64) -> ScatteringTable {
    let f = |k: Complex64| amp * Complex64::from_polar((-0.3 * k.norm_sqr()).exp(), phase + k.arg());
    let bie: BTreeMap<_, _> = kg.disc_indices(r1).into_iter().map(|i| (i, f(kg.point(i)))).collect();
    let pr: BTreeMap<_, _> = kg.disc_indices(r2).into_iter().map(|i| (i, f(kg.point(i)) * 0.9)).collect();
    assemble_piecewise_t(kg, r1, r2, &bie, &pr).unwrap()
}

pub type AlphaOneCase = (f64, f64, f64, f64, (f64, f64));

pub fn alpha_one_case() -> impl Strategy<Value = AlphaOneCase> {
    (1.0f64..2.5, 0.0f64..1.5, 0.0f64..2.0, 0.0f64..(2.0 * PI), (0.0f64..6.0, 0.0f64..6.0))
}

/// At α = 1 the image is bitwise independent of μ_int.
pub fn alpha_one_independence((r1, extra, amp, phase, (p1, p2)): AlphaOneCase) -> Result<(), TestCaseError> {
    let kg = KGrid::with_extent(21, 4.5).unwrap();
    let zg = build_zgrid(1.0, 11).unwrap();
    let r2 = r1 + extra;
    let table = smooth_table(&kg, r1, r2, amp, phase);
    let params = ReconstructionParams::with_prior(r1, r2, 1.0);
    let a = reconstruct(&table, &params, Some(&wavy_mu_int(zg.len(), r2, p1, 0.3)), &zg, 1.0).unwrap();
    let b = reconstruct(&table, &params, Some(&wavy_mu_int(zg.len(), r2, p2, 0.1)), &zg, 1.0).unwrap();
    let c = reconstruct(&table, &params, None, &zg, 1.0).unwrap();
    for i in 0..zg.len() {
        prop_assert_eq!(a.sigma.values()[i].to_bits(), b.sigma.values()[i].to_bits());
        prop_assert_eq!(a.sigma.values()[i].to_bits(), c.sigma.values()[i].to_bits());
    }
    Ok(())
}

pub type CollapseCase = (f64, f64, f64, f64, f64);

pub fn collapse_case() -> impl Strategy<Value = CollapseCase> {
    (0.0f64..1.0, 0.0f64..(2.0 * PI), 0.0f64..0.4, 0.1f64..3.0, 1.0f64..4.0)
}

/// With T ≡ 0 the solution is μ ≡ α + (1 − α)μ_int, so σ = scale · Re(rhs²).
pub fn zero_scattering_collapse((alpha, phase, amp, scale, r2): CollapseCase) -> Result<(), TestCaseError> {
    let kg = KGrid::with_extent(21, 4.5).unwrap();
    let zg = build_zgrid(1.0, 11).unwrap();
    let table = ScatteringTable::zeros(kg);
    let mu_int = wavy_mu_int(zg.len(), r2, phase, amp);
    let params = ReconstructionParams::with_prior(r2.min(1.0), r2, alpha);
    let img = reconstruct(&table, &params, Some(&mu_int), &zg, scale).unwrap();
    for i in 0..zg.len() {
        let want = if zg.inside(i) { scale * dbar_rhs(alpha, mu_int.values[i]).powi(2).re } else { scale };
        let got = img.sigma.values()[i];
        prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "pixel {}: {} vs {}", i, got, want);
    }
    prop_assert!(img.diagnostics.failed.is_empty());
    Ok(())
}
