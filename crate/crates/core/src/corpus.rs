//! Fixed test corpus: metrics, Hermitian pairs, cocycle triples, bend
//! fields and variation directions for the torus and the projective line.
//!
//! Fields are written in home coordinates. On `O(1) ⊕ O(1)` the home fiber
//! coordinate is global along the base, so fiber-dependent potentials are
//! confined to that bundle and to the torus.

use crate::expr::{Expr, VarContext};
use crate::finsler::{FinslerMetric, Potential, Reference};
use crate::geometry_base::{BaseKind, BundleKind};
use crate::lab::Lab;
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// `|ζ|²/(1+|ζ|²)²`, the fiber bump. Invariant under `ζ ↦ 1/ζ`.
pub fn bump() -> Expr {
    let r2 = Expr::w() * Expr::wb();
    r2.clone() / (1.0 + r2).powi(2)
}

/// The fiber bump in the unitary coordinate of the reference:
/// `q/(1+q)²` with `q = |ζ|² h₂₂/h₁₁ = |ζ|²(1+|z|²)^{a-b}`. Global on every
/// split bundle, and equal to [`bump`] when `a = b`.
pub fn unitary_bump(lab: &Lab) -> Expr {
    let (a, b) = lab.bundle.exponents();
    if a == b {
        return bump();
    }
    let q = Expr::w() * Expr::wb() * (1.0 + Expr::z() * Expr::zb()).powi(a - b);
    q.clone() / (1.0 + q).powi(2)
}

/// `Re ζ / (1+|ζ|²)`, an odd fiber field.
pub fn fiber_odd() -> Expr {
    (Expr::w() + Expr::wb()) * 0.5 / (1.0 + Expr::w() * Expr::wb())
}

/// Lattice coordinates `(x, y)` of the torus.
pub fn torus_xy(lab: &Lab) -> (Expr, Expr) {
    let ctx = VarContext::torus(lab.base.tau);
    (ctx.names["x"].clone(), ctx.names["y"].clone())
}

/// Sphere coordinates `(x₁, x₂, x₃)` in home coordinates.
pub fn sphere_xyz() -> (Expr, Expr, Expr) {
    let ctx = VarContext::sphere();
    (ctx.names["x"].clone(), ctx.names["y"].clone(), ctx.names["h"].clone())
}

fn tw(e: Expr) -> Expr {
    (2.0 * PI * e).sin()
}

fn tc(e: Expr) -> Expr {
    (2.0 * PI * e).cos()
}

fn analytic(reference: Reference, u: Expr) -> FinslerMetric {
    FinslerMetric { reference, potential: Potential::Analytic(u) }
}

fn is_torus(lab: &Lab) -> bool {
    lab.base.kind == BaseKind::Torus
}

/// Whether fiber-dependent home-coordinate fields are global on this lab.
pub fn fiber_fields_allowed(lab: &Lab) -> bool {
    let (a, b) = lab.bundle.exponents();
    a == b
}

/// The default reference of a lab: flat on the torus, Fubini-Study on `P¹`.
pub fn base_reference(lab: &Lab) -> Reference {
    match lab.bundle.kind {
        BundleKind::TrivialOverTorus => Reference::flat(),
        BundleKind::SplitOverP1 { a, b } => Reference::fubini_study(a, b),
    }
}

/// Named metrics of the corpus suitable for `lab`.
pub fn metrics(lab: &Lab) -> Vec<(String, FinslerMetric)> {
    let mut out = vec![("reference".to_string(), FinslerMetric::hermitian(base_reference(lab)))];
    if is_torus(lab) {
        let (x, y) = torus_xy(lab);
        out.push(("bump-0.1".into(), analytic(Reference::flat(), 0.1 * bump())));
        out.push((
            "bump-mixed".into(),
            analytic(Reference::flat(), 0.1 * bump() * (1.0 + 0.5 * tw(x.clone())) + 0.1 * tc(y.clone())),
        ));
        out.push(("odd-mixed".into(), analytic(Reference::flat(), 0.15 * fiber_odd() * tw(x.clone() + y.clone()))));
        out.push((
            "hermitian-diag".into(),
            FinslerMetric::hermitian(Reference::diagonal((0.2 * tw(x)).exp(), (0.1 * tc(y)).exp())),
        ));
    } else {
        let (x1, _, x3) = sphere_xyz();
        let (a, b) = lab.bundle.exponents();
        out.push((
            "fs-twisted".into(),
            FinslerMetric::hermitian(Reference::fubini_study_twisted(a, b, [(0.25 * x1.clone()).exp(), Expr::c(1.0)])),
        ));
        let ub = unitary_bump(lab);
        out.push(("fs-bump-0.1".into(), analytic(base_reference(lab), 0.1 * ub.clone())));
        out.push(("fs-bump-x1".into(), analytic(base_reference(lab), 0.1 * ub * (1.0 + 0.5 * x1))));
        if fiber_fields_allowed(lab) {
            out.push(("fs-odd-x3".into(), analytic(base_reference(lab), 0.1 * fiber_odd() * x3)));
        }
    }
    out
}

/// The conformal perturbation `e^{a sin 2πx}` of the flat torus metric.
pub fn conformal_torus(lab: &Lab, a: f64) -> FinslerMetric {
    let (x, _) = torus_xy(lab);
    analytic(Reference::flat(), a * tw(x))
}

/// Five Hermitian pairs `(G, H)`, three on the torus and two on `P¹`.
/// Returns the pairs that live on `lab`.
pub fn hermitian_pairs(lab: &Lab) -> Vec<(String, FinslerMetric, FinslerMetric)> {
    let mut out = Vec::new();
    if is_torus(lab) {
        let (x, y) = torus_xy(lab);
        let i = C64::new(0.0, 1.0);
        let phase = |s: f64| (Expr::cc(i * (2.0 * PI * s)) * y.clone()).exp();
        let flat = FinslerMetric::hermitian(Reference::flat());
        out.push((
            "torus-diag".into(),
            FinslerMetric::hermitian(Reference::diagonal((0.2 * tw(x.clone())).exp(), (0.1 * tc(y.clone())).exp())),
            flat.clone(),
        ));
        let off = Reference::new([
            [Expr::c(1.0), 0.2 * phase(1.0)],
            [0.2 * phase(-1.0), Expr::c(1.0)],
        ]);
        out.push((
            "torus-offdiag".into(),
            analytic(off, 0.1 * tw(x.clone() + y.clone())),
            FinslerMetric::hermitian(Reference::diagonal((0.1 * tc(x.clone())).exp(), Expr::c(1.0))),
        ));
        let off2 = Reference::new([
            [Expr::c(1.2), 0.3 * (Expr::cc(i * (2.0 * PI)) * x.clone()).exp()],
            [0.3 * (Expr::cc(-i * (2.0 * PI)) * x.clone()).exp(), Expr::c(0.8)],
        ]);
        out.push(("torus-offdiag-x".into(), FinslerMetric::hermitian(off2), flat));
    } else {
        let (x1, _, x3) = sphere_xyz();
        let (a, b) = lab.bundle.exponents();
        let fs = FinslerMetric::hermitian(Reference::fubini_study(a, b));
        let g = if (a, b) == (1, 1) {
            Reference::fubini_study_twisted(a, b, [(0.25 * x1).exp(), (-0.15 * x3).exp()])
        } else {
            Reference::fubini_study_twisted(a, b, [(0.25 * x1).exp(), Expr::c(1.0)])
        };
        out.push((format!("p1-O({a})+O({b})"), FinslerMetric::hermitian(g), fs));
    }
    out
}

/// Cocycle triples `(G, G', G'')` that live on `lab`.
pub fn triples(lab: &Lab) -> Vec<(String, [FinslerMetric; 3])> {
    let mut out = Vec::new();
    if is_torus(lab) {
        let (x, y) = torus_xy(lab);
        let flat = FinslerMetric::hermitian(Reference::flat());
        out.push((
            "torus-finsler".into(),
            [
                flat.clone(),
                analytic(Reference::flat(), 0.1 * bump()),
                analytic(
                    Reference::diagonal((0.2 * tw(x.clone())).exp(), Expr::c(1.0)),
                    0.1 * bump() * tc(y.clone()),
                ),
            ],
        ));
        out.push((
            "torus-hermitian".into(),
            [
                flat,
                FinslerMetric::hermitian(Reference::diagonal((0.2 * tw(x.clone())).exp(), (0.1 * tc(y.clone())).exp())),
                FinslerMetric::hermitian(Reference::diagonal(Expr::c(1.0), (0.15 * tw(x + y)).exp())),
            ],
        ));
    } else if fiber_fields_allowed(lab) {
        let (x1, _, x3) = sphere_xyz();
        let fs = base_reference(lab);
        out.push((
            "p1-finsler".into(),
            [
                FinslerMetric::hermitian(fs.clone()),
                analytic(fs.clone(), 0.1 * bump()),
                analytic(
                    Reference::fubini_study_twisted(1, 1, [(0.2 * x1).exp(), Expr::c(1.0)]),
                    0.05 * bump() * x3,
                ),
            ],
        ));
    }
    out
}

/// Bend field `β` used by the bent and two-segment path families.
pub fn bend(lab: &Lab) -> Expr {
    if is_torus(lab) {
        let (x, y) = torus_xy(lab);
        0.2 * tw(x) + 0.1 * bump() * tc(y)
    } else {
        let (x1, x2, _) = sphere_xyz();
        0.2 * x1 + 0.1 * unitary_bump(lab) * x2
    }
}

/// Twenty directions: ten base modes times `{1, 4·bump}`, with the
/// unitary bump on `P¹`.
pub fn directions(lab: &Lab) -> Vec<(String, Expr)> {
    let modes: Vec<(String, Expr)> = if is_torus(lab) {
        let (x, y) = torus_xy(lab);
        vec![
            ("1".into(), Expr::c(1.0)),
            ("sin x".into(), tw(x.clone())),
            ("cos x".into(), tc(x.clone())),
            ("sin y".into(), tw(y.clone())),
            ("cos y".into(), tc(y.clone())),
            ("sin(x+y)".into(), tw(x.clone() + y.clone())),
            ("cos(x+y)".into(), tc(x.clone() + y.clone())),
            ("sin(x-y)".into(), tw(x.clone() - y.clone())),
            ("cos(x-y)".into(), tc(x.clone() - y.clone())),
            ("sin 2x".into(), tw(2.0 * x)),
        ]
    } else {
        let (x1, x2, x3) = sphere_xyz();
        vec![
            ("1".into(), Expr::c(1.0)),
            ("x1".into(), x1.clone()),
            ("x2".into(), x2.clone()),
            ("x3".into(), x3.clone()),
            ("x1 x2".into(), x1.clone() * x2.clone()),
            ("x1 x3".into(), x1.clone() * x3.clone()),
            ("x2 x3".into(), x2.clone() * x3.clone()),
            ("x1^2-x2^2".into(), x1.clone() * x1.clone() - x2.clone() * x2),
            ("3x3^2-1".into(), 3.0 * x3.clone() * x3.clone() - 1.0),
            ("x1(5x3^2-1)".into(), x1 * (5.0 * x3.clone() * x3 - 1.0)),
        ]
    };
    let fiber = 4.0 * unitary_bump(lab);
    let mut out = Vec::with_capacity(20);
    for (name, m) in &modes {
        out.push((name.clone(), m.clone()));
    }
    for (name, m) in &modes {
        out.push((format!("{name} * bump"), m.clone() * fiber.clone()));
    }
    out
}

/// Seeded random coefficients for extra corpus fields.
pub fn random_coefficients(seed: u64, n: usize, scale: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()
}

/// A seeded random smooth field on `P(E)` built from the direction modes.
pub fn random_field(lab: &Lab, seed: u64, scale: f64) -> Expr {
    let dirs = directions(lab);
    let c = random_coefficients(seed, dirs.len(), scale);
    dirs.into_iter().zip(c).fold(Expr::c(0.0), |acc, ((_, e), k)| acc + k * e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finsler::validate_metric;

    #[test]
    fn corpus_metrics_are_strongly_pseudoconvex() {
        for lab in [Lab::torus(8, 8).unwrap(), Lab::sphere(8, 8, 1, 1).unwrap(), Lab::sphere(8, 8, 2, 0).unwrap()] {
            for (name, m) in metrics(&lab) {
                assert!(validate_metric(&lab, &m).f4, "{name}");
            }
            assert_eq!(directions(&lab).len(), 20);
        }
    }

    #[test]
    fn random_fields_are_reproducible() {
        assert_eq!(random_coefficients(7, 5, 1.0), random_coefficients(7, 5, 1.0));
        assert_ne!(random_coefficients(7, 5, 1.0), random_coefficients(8, 5, 1.0));
    }
}
