//! Worked examples with closed-form or independently computed answers.

use finsler_lab::corpus;
use finsler_lab::expr::Expr;
use finsler_lab::finsler::{
    curvature_package, finsler_gradients, lemma_identities, log_jets, FinslerMetric, Potential, Reference,
};
use finsler_lab::flow::{convexity_audit, solve_epsilon_geodesic, GeodesicOptions};
use finsler_lab::functionals::{
    bracket, densities, donaldson_m, mean_curvature, path_connection, path_energy, pointwise_inner, q_integrals,
    segre_form, tangent_inner_product,
};
use finsler_lab::jet::FieldJet;
use finsler_lab::lab::Lab;
use finsler_lab::linalg;
use finsler_lab::path::MetricPath;
use finsler_lab::quad::gauss_legendre;
use finsler_lab::variation::{
    energy_first_variation, first_variation_formula, second_variation_formula, einstein_defect,
};
use num_complex::Complex64 as C64;

fn flat() -> FinslerMetric {
    FinslerMetric::hermitian(Reference::flat())
}

fn with_potential(r: Reference, u: Expr) -> FinslerMetric {
    FinslerMetric { reference: r, potential: Potential::Analytic(u) }
}

fn xi(lab: &Lab, jets: &[FieldJet]) -> Vec<f64> {
    densities(lab, jets).iter().map(|c| c.xi).collect()
}

#[test]
fn split_transitions_are_diagonal_powers() {
    let z = C64::new(0.6, -1.1);
    for (a, b) in [(1, 1), (2, 0)] {
        let lab = Lab::sphere(8, 8, a, b).unwrap();
        let t = lab.bundle.transition(z);
        assert_eq!(lab.bundle.degree, 2);
        assert!((t[0][0] - z.powi(a)).norm() < 1e-15 && (t[1][1] - z.powi(b)).norm() < 1e-15);
        assert!(t[0][1].norm() == 0.0 && t[1][0].norm() == 0.0);
    }
    let lab = Lab::torus(8, 8).unwrap();
    assert_eq!(lab.bundle.degree, 0);
    assert_eq!(lab.bundle.transition(z), [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]]);
}

#[test]
fn flat_fiber_moments() {
    let lab = Lab::torus(8, 16).unwrap();
    let x = xi(&lab, &log_jets(&lab, &flat()).unwrap());
    let moment = |f: &dyn Fn([C64; 2]) -> f64| -> Vec<f64> {
        let d: Vec<f64> = (0..lab.len())
            .map(|s| {
                let v = lab.node(s).section();
                f(v) / (v[0].norm_sqr() + v[1].norm_sqr()).powi(1) * x[s]
            })
            .collect();
        lab.fiber_integrate(&d)
    };
    for m in moment(&|v| v[0].norm_sqr()) {
        assert!((m - 0.5).abs() < 1e-12, "second moment {m}");
    }
    let g = |v: [C64; 2]| v[0].norm_sqr() + v[1].norm_sqr();
    for m in moment(&|v| v[0].norm_sqr().powi(2) / g(v)) {
        assert!((m - 1.0 / 3.0).abs() < 1e-10, "fourth moment {m}");
    }
    assert!(lab.fiber_integrate(&vec![0.0; lab.len()]).iter().all(|v| *v == 0.0));
}

#[test]
fn hermitian_second_moments_are_the_inverse_over_r() {
    let lab = Lab::torus(8, 16).unwrap();
    let (_, g, _) = corpus::hermitian_pairs(&lab).swap_remove(1);
    let jets = log_jets(&lab, &g).unwrap();
    let x = xi(&lab, &jets);
    let u = lab.expr_values(g.analytic_potential().unwrap());
    let nq = lab.nq();
    for p in (0..lab.nb()).step_by(7) {
        let pt = &lab.base.points[p];
        let h = linalg::scale(&g.reference.matrix_at(pt.chart, pt.z, &lab.bundle), C64::new(u[p * nq].exp(), 0.0));
        let inv = linalg::inv(&h);
        for i in 0..2 {
            for j in 0..2 {
                let mut m = C64::new(0.0, 0.0);
                for q in 0..nq {
                    let s = p * nq + q;
                    let v = lab.node(s).section();
                    let gv = linalg::form(&h, &v, &v).re;
                    m += v[i] * v[j].conj() / gv * x[s] * lab.node(s).weight;
                }
                // G^{ij̄} is the transpose of the matrix inverse of G_{ij̄}.
                assert!((m - inv[j][i] / 2.0).norm() < 1e-10, "({i},{j}): {m} vs {}", inv[j][i] / 2.0);
            }
        }
    }
}

#[test]
fn scaled_metric_has_the_same_curvature_package() {
    let lab = Lab::sphere(8, 8, 1, 1).unwrap();
    let m = with_potential(Reference::fubini_study(1, 1), 0.1 * corpus::bump());
    let a = curvature_package(&lab, &m).unwrap();
    let b = curvature_package(&lab, &m.scaled(5.0)).unwrap();
    for (x, y) in a.samples.iter().zip(&b.samples) {
        assert!((x.psi - y.psi).abs() < 1e-10 && (x.omega_fs - y.omega_fs).abs() < 1e-12);
        assert!((x.trace - y.trace).abs() < 1e-10);
        assert!((x.xi_delta[0] - y.xi_delta[0]).abs() < 1e-12 && (x.xi_delta[1] - y.xi_delta[1]).abs() < 1e-12);
    }
}

#[test]
fn gradients_of_constant_and_base_functions() {
    let lab = Lab::torus(8, 8).unwrap();
    let metric = log_jets(&lab, &flat()).unwrap();
    let c = finsler_gradients(&lab, &lab.expr_jets(&Expr::c(3.0)), &metric).unwrap();
    assert!(c.vertical_norm2.iter().chain(&c.horizontal_norm2).all(|v| v.abs() < 1e-24));
    let (x, _) = corpus::torus_xy(&lab);
    let f = (2.0 * std::f64::consts::PI * x).sin();
    let fj = lab.expr_jets(&f);
    let g = finsler_gradients(&lab, &fj, &metric).unwrap();
    for (s, f) in fj.iter().enumerate() {
        assert!(g.vertical_norm2[s].abs() < 1e-24);
        let want = f.z.norm_sqr() / lab.point(s).g;
        assert!((g.horizontal_norm2[s] - want).abs() < 1e-12);
    }
}

#[test]
fn vertical_norm_identity_for_the_fiber_height() {
    let lab = Lab::torus(8, 8).unwrap();
    let r2 = Expr::w() * Expr::wb();
    let f = r2.clone() / (1.0 + r2);
    for m in [flat(), with_potential(Reference::flat(), 0.1 * corpus::bump())] {
        let r = lemma_identities(&lab, &m, &f).unwrap();
        assert!(r.vertical < 1e-12 && r.horizontal < 1e-12, "{r:?}");
    }
}

#[test]
fn inner_product_examples() {
    let lab = Lab::torus(8, 16).unwrap();
    let jets = log_jets(&lab, &flat()).unwrap();
    let ones = vec![1.0; lab.len()];
    let gg = tangent_inner_product(&lab, &jets, &ones, &ones).unwrap();
    assert!((gg - lab.base.volume()).abs() < 1e-12);
    let odd = lab.expr_values(&corpus::fiber_odd());
    let even = lab.expr_values(&corpus::bump());
    assert!(tangent_inner_product(&lab, &jets, &odd, &even).unwrap().abs() < 1e-14);
    // Cauchy-Schwarz lower bound per base point, for a Finsler metric.
    let m = with_potential(Reference::flat(), 0.1 * corpus::bump());
    let jets = log_jets(&lab, &m).unwrap();
    let x = xi(&lab, &jets);
    for (_, d) in corpus::directions(&lab) {
        let nu = lab.expr_values(&d);
        let inner = pointwise_inner(&lab, &x, &nu, &nu);
        let sq: Vec<f64> = nu.iter().zip(&x).map(|(n, x)| n * n * x).collect();
        for (a, b) in inner.iter().zip(lab.fiber_integrate(&sq)) {
            assert!(*a >= b - 1e-12, "{a} < {b}");
        }
    }
}

#[test]
fn energy_of_a_fiber_perturbation_matches_direct_quadrature() {
    let lab = Lab::torus(8, 16).unwrap();
    let eps = 0.05;
    let phi = corpus::bump();
    let h = log_jets(&lab, &flat()).unwrap();
    let g = log_jets(&lab, &with_potential(Reference::flat(), eps * phi.clone())).unwrap();
    let e = path_energy(&lab, &MetricPath::linear(h, g, 32).unwrap());
    // E = ½∫₀¹ (εφ G_t, εφ G_t)_{G_t} dt, each slice built from scratch.
    let v: Vec<f64> = lab.expr_values(&phi).iter().map(|x| eps * x).collect();
    let (t, w) = gauss_legendre(8);
    let oracle: f64 = t
        .iter()
        .zip(&w)
        .map(|(ti, wi)| {
            let tt = 0.5 * (ti + 1.0);
            let jets = log_jets(&lab, &with_potential(Reference::flat(), (tt * eps) * phi.clone())).unwrap();
            0.5 * wi * tangent_inner_product(&lab, &jets, &v, &v).unwrap()
        })
        .sum::<f64>()
        * 0.5;
    assert!(((e - oracle) / oracle).abs() < 1e-6, "{e} vs {oracle}");
    let c = MetricPath::linear(log_jets(&lab, &flat()).unwrap(), log_jets(&lab, &flat()).unwrap(), 8).unwrap();
    assert_eq!(path_energy(&lab, &c), 0.0);
}

#[test]
fn q1_is_log_det_on_hermitian_pairs() {
    let lab = Lab::torus(8, 8).unwrap();
    for (name, g, h) in corpus::hermitian_pairs(&lab) {
        let path = MetricPath::linear(log_jets(&lab, &h).unwrap(), log_jets(&lab, &g).unwrap(), 32).unwrap();
        let q = q_integrals(&lab, &path, 0.0);
        let (ug, uh) = (lab.expr_values(g.analytic_potential().unwrap()), lab.expr_values(h.analytic_potential().unwrap()));
        for (p, pt) in lab.base.points.iter().enumerate() {
            let s = p * lab.nq();
            let dg = linalg::det(&g.reference.matrix_at(pt.chart, pt.z, &lab.bundle)).re * (2.0 * ug[s]).exp();
            let dh = linalg::det(&h.reference.matrix_at(pt.chart, pt.z, &lab.bundle)).re * (2.0 * uh[s]).exp();
            assert!((q.q1[p] - (dg / dh).ln()).abs() < 1e-4, "{name}: {} vs {}", q.q1[p], (dg / dh).ln());
        }
    }
    let j = log_jets(&lab, &flat()).unwrap();
    let q = q_integrals(&lab, &MetricPath::linear(j.clone(), j, 8).unwrap(), 0.0);
    assert!(q.q1.iter().chain(&q.q2).chain(&q.q3).all(|v| *v == 0.0));
}

#[test]
fn donaldson_m_identities() {
    let lab = Lab::sphere(12, 8, 1, 1).unwrap();
    let (_, g, h) = corpus::hermitian_pairs(&lab).swap_remove(0);
    assert!(donaldson_m(&lab, &h, &h, 1.0).unwrap().abs() < 1e-12);
    assert!(donaldson_m(&lab, &h.scaled(3.0), &h, 1.0).unwrap().abs() < 1e-10);
    let (a, b) = (donaldson_m(&lab, &g, &h, 1.0).unwrap(), donaldson_m(&lab, &h, &g, 1.0).unwrap());
    assert!((a + b).abs() < 1e-4, "{a} + {b}");
    let fs = FinslerMetric::hermitian(Reference::fubini_study(1, 1));
    assert!(mean_curvature(&lab, &fs, 1.0).unwrap().deviation < 1e-6);
    assert!(donaldson_m(&lab, &with_potential(Reference::fubini_study(1, 1), 0.1 * corpus::bump()), &fs, 1.0).is_err());
}

#[test]
fn flat_trivial_bundle_has_zero_segre_form() {
    let lab = Lab::torus(8, 8).unwrap();
    let s = segre_form(&lab, &log_jets(&lab, &flat()).unwrap(), 1).unwrap();
    assert!(s.iter().all(|v| v.abs() < 1e-14));
    assert!(segre_form(&lab, &log_jets(&lab, &flat()).unwrap(), 2).is_err());
}

#[test]
fn bracket_is_antisymmetric() {
    let lab = Lab::torus(8, 8).unwrap();
    let jets = log_jets(&lab, &with_potential(Reference::flat(), 0.1 * corpus::bump())).unwrap();
    let c = |e: &Expr| lab.expr_values(e).into_iter().map(|v| C64::new(v, 0.0)).collect::<Vec<_>>();
    let (a, b) = (c(&corpus::bump()), c(&corpus::fiber_odd()));
    assert!(bracket(&lab, &jets, &a, &a).unwrap().iter().all(|v| v.norm() < 1e-12));
    let ab = bracket(&lab, &jets, &a, &b).unwrap();
    let ba = bracket(&lab, &jets, &b, &a).unwrap();
    assert!(ab.iter().zip(&ba).all(|(x, y)| (x + y).norm() < 1e-12));
    assert!(ab.iter().any(|v| v.norm() > 1e-6));
}

#[test]
fn path_connection_is_metric_compatible() {
    let lab = Lab::torus(8, 8).unwrap();
    let steps = 16;
    let h = log_jets(&lab, &flat()).unwrap();
    let g = log_jets(&lab, &with_potential(Reference::flat(), 0.1 * corpus::bump())).unwrap();
    let path = MetricPath::linear(h, g, steps).unwrap();
    let d = lab.expr_jets(&corpus::directions(&lab)[13].1);
    let nu: Vec<Vec<FieldJet>> = (0..=steps).map(|k| d.iter().map(|j| j.scaled(1.0 + k as f64 / steps as f64)).collect()).collect();
    assert!(path_connection(&lab, &path, &nu).unwrap().compatibility_residual < 1e-3);
}

#[test]
fn variations_on_scaling_paths_and_einstein_metrics() {
    let lab = Lab::sphere(8, 8, 1, 1).unwrap();
    let fs = FinslerMetric::hermitian(Reference::fubini_study(1, 1));
    let jets = log_jets(&lab, &fs).unwrap();
    let scaling = MetricPath::linear(jets.clone(), log_jets(&lab, &fs.scaled(2.0)).unwrap(), 16).unwrap();
    let dirs = corpus::directions(&lab);
    let r = energy_first_variation(&lab, &scaling, &lab.expr_jets(&dirs[3].1)).unwrap();
    assert!(r.formula_value.abs() < 1e-6 && r.fd_value.abs() < 1e-6, "{r:?}");
    let zero = energy_first_variation(&lab, &scaling, &vec![FieldJet::default(); lab.len()]).unwrap();
    assert!(zero.formula_value == 0.0 && zero.fd_value.abs() < 1e-12);
    let acc = vec![0.0; lab.len()];
    for (_, d) in &dirs {
        let v = lab.expr_jets(d);
        let vals: Vec<f64> = v.iter().map(|j| j.val).collect();
        assert!(first_variation_formula(&lab, &jets, &vals, 1.0).abs() < 1e-6);
        let sv = second_variation_formula(&lab, &jets, &v, &acc, 1.0);
        assert!(sv.geodesic_part.abs() < 1e-8 && sv.horizontal_part >= -1e-12);
    }
    let constant = vec![FieldJet::constant(1.0); lab.len()];
    assert!(second_variation_formula(&lab, &jets, &constant, &acc, 1.0).total().abs() < 1e-10);
}

#[test]
fn flow_direction_decreases_l() {
    let lab = Lab::torus(8, 8).unwrap();
    let m = with_potential(Reference::flat(), 0.1 * corpus::bump() + 0.05 * corpus::directions(&lab)[2].1.clone());
    let jets = log_jets(&lab, &m).unwrap();
    let d = einstein_defect(&lab, &jets, 0.0);
    let down: Vec<f64> = d.iter().map(|x| -x).collect();
    let formula = first_variation_formula(&lab, &jets, &down, 0.0);
    let norm = tangent_inner_product(&lab, &jets, &d, &d).unwrap();
    assert!(formula < 0.0);
    assert!((formula + 2.0 * norm).abs() < 1e-10 * norm, "{formula} vs {}", -2.0 * norm);
}

#[test]
fn epsilon_geodesic_between_equal_endpoints_stays_near_constant() {
    let lab = Lab::torus(8, 8).unwrap();
    let g0 = with_potential(Reference::flat(), 0.1 * corpus::bump());
    let eps = 0.05;
    let opts = GeodesicOptions { steps: 16, ..Default::default() };
    let sol = solve_epsilon_geodesic(&lab, &g0, &g0, eps, &opts).unwrap();
    assert!(sol.converged);
    assert!(sol.deviation_from_linear() < 10.0 * eps);
    // Between two scalings of an Einstein metric the path is convex.
    let flat = flat();
    let sol = solve_epsilon_geodesic(&lab, &flat, &flat.scaled(0.5_f64.exp()), eps, &opts).unwrap();
    let audit = convexity_audit(&lab, &sol, 0.0).unwrap();
    assert!(audit.min_second_derivative >= -1e-6, "{}", audit.min_second_derivative);
}
