//! Property tests of the structural invariants on small grids.

use finsler_lab::corpus;
use finsler_lab::exec;
use finsler_lab::expr::Expr;
use finsler_lab::finsler::{curvature_package, log_curvatures, log_jets, validate_metric, FinslerMetric, Potential};
use finsler_lab::functionals::{l_between, lambda_const, segre_mass, tangent_inner_product, Family};
use finsler_lab::geometry_base::{build_base, build_bundle, BaseKind, BundleKind};
use finsler_lab::fiber::build_fiber_quadrature;
use finsler_lab::lab::Lab;
use finsler_lab::path::{MetricPath, Shape};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::sync::OnceLock;

fn torus() -> &'static Lab {
    static LAB: OnceLock<Lab> = OnceLock::new();
    LAB.get_or_init(|| Lab::torus(8, 8).unwrap())
}

fn sphere() -> &'static Lab {
    static LAB: OnceLock<Lab> = OnceLock::new();
    LAB.get_or_init(|| Lab::sphere(8, 8, 1, 1).unwrap())
}

/// A small Finsler potential: three direction-corpus modes.
fn potential(lab: &Lab, c: &[f64]) -> Expr {
    corpus::directions(lab).into_iter().skip(1).step_by(3).zip(c).fold(Expr::c(0.0), |acc, ((_, e), k)| acc + *k * e)
}

fn metric(lab: &Lab, c: &[f64]) -> FinslerMetric {
    FinslerMetric { reference: corpus::base_reference(lab), potential: Potential::Analytic(potential(lab, c)) }
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.03..0.03_f64, 3)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn torus_volume_is_twice_im_tau_at_any_resolution(n in 8usize..24, re in -0.5..0.5_f64, im in 0.5..2.0_f64) {
        let b = build_base(BaseKind::Torus, n, C64::new(re, im)).unwrap();
        prop_assert!(b.points.iter().all(|p| p.g > 0.0));
        prop_assert!((b.volume() - 2.0 * im).abs() < 1e-12);
    }

    #[test]
    fn split_bundles_have_degree_equal_winding(a in -3i32..4, b in -3i32..4) {
        let base = build_base(BaseKind::ProjectiveLine, 8, C64::new(0.0, 0.0)).unwrap();
        let e = build_bundle(BundleKind::SplitOverP1 { a, b }, &base).unwrap();
        prop_assert_eq!(e.degree, a + b);
        prop_assert_eq!(e.winding_number(64), a + b);
        prop_assert!(e.cocycle_residual(C64::new(0.7, 0.9)) < 1e-12);
    }

    #[test]
    fn fiber_weights_sum_to_one_and_are_inversion_symmetric(mt in 8usize..24, mp in 8usize..24) {
        let q = build_fiber_quadrature(mt, mp).unwrap();
        let total: f64 = q.nodes.iter().map(|n| n.weight).sum();
        prop_assert!((total - 1.0).abs() < 1e-8);
        for n in &q.nodes {
            let image = C64::new(1.0, 0.0) / n.zeta.conj();
            let hit = q.nodes.iter().any(|m| (m.zeta - image).norm() < 1e-9 * (1.0 + image.norm()));
            prop_assert!(hit, "no node at 1/conj({})", n.zeta);
        }
    }

    #[test]
    fn curvature_is_scale_invariant(c in coeffs(), a in 0.1..10.0_f64) {
        let lab = torus();
        let m = metric(lab, &c);
        let j1 = log_jets(lab, &m).unwrap();
        let j2 = log_jets(lab, &m.scaled(a)).unwrap();
        for (x, y) in log_curvatures(lab, &j1).iter().zip(&log_curvatures(lab, &j2)) {
            prop_assert!((x.tr_psi - y.tr_psi).abs() < 1e-10);
            prop_assert!((x.xi - y.xi).abs() < 1e-10);
        }
    }

    #[test]
    fn small_potentials_satisfy_f4_and_euler(c in coeffs()) {
        for lab in [torus(), sphere()] {
            let r = validate_metric(lab, &metric(lab, &c));
            prop_assert!(r.f4);
            prop_assert!(r.max_euler_residual < 1e-8, "{}", r.max_euler_residual);
            prop_assert!(r.max_homogeneity_residual < 1e-8);
        }
    }

    #[test]
    fn kobayashi_contraction_is_real_and_fs_part_positive(c in coeffs()) {
        let lab = sphere();
        let pkg = curvature_package(lab, &metric(lab, &c)).unwrap();
        for s in &pkg.samples {
            prop_assert!(s.psi_imag.abs() < 1e-10 * (1.0 + s.psi.abs()));
            prop_assert!(s.omega_fs > 0.0);
        }
        prop_assert!(pkg.max_decomposition_residual() < 1e-6);
    }

    #[test]
    fn tangent_inner_product_is_symmetric_and_positive(c in coeffs(), i in 0usize..20, k in 0usize..20) {
        let lab = torus();
        let jets = log_jets(lab, &metric(lab, &c)).unwrap();
        let dirs = corpus::directions(lab);
        let (u, v) = (lab.expr_values(&dirs[i].1), lab.expr_values(&dirs[k].1));
        let uv = tangent_inner_product(lab, &jets, &u, &v).unwrap();
        let vu = tangent_inner_product(lab, &jets, &v, &u).unwrap();
        prop_assert!((uv - vu).abs() < 1e-12 * (1.0 + uv.abs()));
        prop_assert!(tangent_inner_product(lab, &jets, &u, &u).unwrap() > 0.0);
    }

    #[test]
    fn l_vanishes_on_scalings_and_satisfies_the_cocycle(c1 in coeffs(), c2 in coeffs(), a in 0.5..10.0_f64) {
        let lab = torus();
        let lambda = lambda_const(lab).unwrap();
        let bend = lab.expr_jets(&corpus::bend(lab));
        let (m1, m2) = (metric(lab, &c1), metric(lab, &c2));
        let j0 = log_jets(lab, &corpus::metrics(lab)[0].1).unwrap();
        let j1 = log_jets(lab, &m1).unwrap();
        let j2 = log_jets(lab, &m2).unwrap();
        let l = |g: &[_], h: &[_]| l_between(lab, g, h, Family::Linear, &bend, 16, lambda).unwrap();
        prop_assert!(l(&log_jets(lab, &m1.scaled(a)).unwrap(), &j1).abs() < 1e-6);
        prop_assert!((l(&j0, &j1) + l(&j1, &j2) + l(&j2, &j0)).abs() < 1e-4);
    }

    #[test]
    fn linear_paths_have_constant_velocity(c1 in coeffs(), c2 in coeffs(), k in 0usize..=16) {
        let lab = torus();
        let a = log_jets(lab, &metric(lab, &c1)).unwrap();
        let b = log_jets(lab, &metric(lab, &c2)).unwrap();
        let path = MetricPath::new(a.clone(), b.clone(), Shape::Linear, 16).unwrap();
        let v = path.velocity(k);
        for ((x, y), vel) in a.iter().zip(&b).zip(&v) {
            prop_assert!((vel.val - (y.val - x.val)).abs() < 1e-12);
        }
    }

    #[test]
    fn sequential_and_parallel_maps_agree(n in 0usize..5000) {
        let f = |i: usize| ((i * 7919) as f64).sin();
        prop_assert_eq!(exec::map_range(n, f), exec::with_sequential(|| exec::map_range(n, f)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 4, ..ProptestConfig::default() })]

    #[test]
    fn segre_mass_is_minus_the_degree(a in 0i32..3, b in 0i32..3, eps in 0.0..0.1_f64) {
        let lab = Lab::sphere(8, 8, a, b).unwrap();
        let m = FinslerMetric {
            reference: corpus::base_reference(&lab),
            potential: Potential::Analytic(eps * corpus::unitary_bump(&lab)),
        };
        prop_assert!((segre_mass(&lab, &m).unwrap() + (a + b) as f64).abs() < 1e-3);
    }
}
