//! The Riemannian structure on the space of Finsler metrics and the
//! functionals built on it.
//!
//! Tangent vectors `H` are stored through `ν = H/G`. With `ξ` the vertical
//! density of `Ξ` and `r = 2`,
//! `⟨H₁, H₂⟩_G = (r+1)∫ν₁ν₂ξ - r∫ν₁ξ∫ν₂ξ` fiberwise, integrated against `ω`.
//! Horizontal coefficients (`Ψ`, `Q₂`, `Q₃`, Segre forms) are stored against
//! `√−1 dz∧dz̄` and integrated with the plain area weights.

use crate::error::{Error, Result};
use crate::exec;
use crate::expr::Expr;
use crate::finsler::{hermitian_chern, log_curvatures, log_jets, FinslerMetric, Frame, LogCurvature};
use crate::jet::{FieldJet, Jet2, Scalar};
use crate::lab::Lab;
use crate::linalg::{self, M2, ZERO};
use crate::path::{stencil_values, MetricPath};
use crate::quad::gauss_legendre_on;
use crate::{C64, RANK};
use std::f64::consts::PI;

const R: f64 = RANK as f64;

/// `λ = (2πn/r) deg E / ∫ω` at `n = 1`.
pub fn lambda_const(lab: &Lab) -> Result<f64> {
    let vol = lab.base.volume();
    if !(vol > 0.0) {
        return Err(Error::Invalid("base volume must be positive".into()));
    }
    Ok(2.0 * PI / R * lab.bundle.degree as f64 / vol)
}

/// `(ξ, Ψ)` per sample of one metric.
pub fn densities(lab: &Lab, jets: &[FieldJet]) -> Vec<LogCurvature> {
    log_curvatures(lab, jets)
}

/// Fiberwise `⟨ν₁, ν₂⟩` at every base point.
pub fn pointwise_inner(lab: &Lab, xi: &[f64], nu1: &[f64], nu2: &[f64]) -> Vec<f64> {
    let nq = lab.nq();
    exec::map_range(lab.nb(), |p| {
        let (mut m11, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (q, node) in lab.fiber.nodes.iter().enumerate() {
            let s = p * nq + q;
            let w = node.weight * xi[s];
            m11 += w * nu1[s] * nu2[s];
            m1 += w * nu1[s];
            m2 += w * nu2[s];
        }
        (R + 1.0) * m11 - R * m1 * m2
    })
}

/// `(H₁, H₂)_G` with `H = νG`.
pub fn tangent_inner_product(lab: &Lab, jets: &[FieldJet], nu1: &[f64], nu2: &[f64]) -> Result<f64> {
    for v in [nu1, nu2] {
        if v.len() != lab.len() {
            return Err(Error::Shape { expected: lab.len(), got: v.len() });
        }
    }
    let xi: Vec<f64> = densities(lab, jets).iter().map(|c| c.xi).collect();
    Ok(lab.base.integrate(&pointwise_inner(lab, &xi, nu1, nu2)))
}

/// Fiber moments of one path slice at every base point:
/// `∫vξ`, `∫vΨξ`, `∫Ψξ`, `∫v²ξ`.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    v: f64,
    vpsi: f64,
    psi: f64,
    vv: f64,
}

fn slice_moments(lab: &Lab, path: &MetricPath, k: usize) -> Vec<Moments> {
    let nq = lab.nq();
    let d1 = path.grid.d1(k);
    exec::map_range(lab.nb(), |p| {
        let mut m = Moments::default();
        for q in 0..nq {
            let s = p * nq + q;
            let node = lab.node(s);
            let c = LogCurvature::from_jet(&path.member_sample(k, s), 1.0, node.fs);
            let v = path.velocity_sample(k, &d1, s).val;
            let w = node.weight * c.xi;
            m.v += w * v;
            m.vpsi += w * v * c.psi;
            m.psi += w * c.psi;
            m.vv += w * v * v;
        }
        m
    })
}

/// `Q₁`, `Q₂`, `Q₃` per base point and the per-slice traces of a path.
#[derive(Clone, Debug)]
pub struct QIntegrals {
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub q3: Vec<f64>,
    /// `dL/dt` at every grid time (λ included).
    pub rate: Vec<f64>,
    /// `|∂_t G|²_G` at every grid time.
    pub speed2: Vec<f64>,
}

pub fn q_integrals(lab: &Lab, path: &MetricPath, lambda: f64) -> QIntegrals {
    let steps = path.steps();
    let wts = path.grid.weights();
    let nb = lab.nb();
    let (mut q1, mut q2, mut q3) = (vec![0.0; nb], vec![0.0; nb], vec![0.0; nb]);
    let mut rate = Vec::with_capacity(steps + 1);
    let mut speed2 = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let mom = slice_moments(lab, path, k);
        let mut l = 0.0;
        let mut e = 0.0;
        for (p, m) in mom.iter().enumerate() {
            let pt = &lab.base.points[p];
            let (a, b, c) = (R * m.v, R * (R + 1.0) * m.vpsi, -R * R * m.v * m.psi);
            q1[p] += wts[k] * a;
            q2[p] += wts[k] * b;
            q3[p] += wts[k] * c;
            l += pt.area * (b + c - lambda * pt.g * a);
            e += pt.area * pt.g * ((R + 1.0) * m.vv - R * m.v * m.v);
        }
        rate.push(l);
        speed2.push(e);
    }
    QIntegrals { q1, q2, q3, rate, speed2 }
}

#[derive(Clone, Debug)]
pub struct FunctionalReport {
    pub lambda: f64,
    pub q: QIntegrals,
    pub l_value: f64,
    pub m_value: Option<f64>,
    pub steps: usize,
}

/// `L = ∫_M (Q₂ + Q₃ - λ Q₁ g)` along `path` (from `H` at t = 0 to `G` at t = 1).
pub fn donaldson_l(lab: &Lab, path: &MetricPath, lambda: f64) -> FunctionalReport {
    let q = q_integrals(lab, path, lambda);
    let l_value = lab
        .base
        .points
        .iter()
        .enumerate()
        .map(|(p, pt)| pt.area * (q.q2[p] + q.q3[p] - lambda * pt.g * q.q1[p]))
        .sum();
    FunctionalReport { lambda, q, l_value, m_value: None, steps: path.steps() }
}

/// `E = ½∫|∂_t G|²_G dt`.
pub fn path_energy(lab: &Lab, path: &MetricPath) -> f64 {
    0.5 * path.grid.integrate(&q_integrals(lab, path, 0.0).speed2)
}

/// Path families used to compute `L(G, H)` between two metrics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Linear,
    Bent,
    LinearInG,
    TwoSegment,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Linear, Family::Bent, Family::LinearInG, Family::TwoSegment];
}

/// `L(G, H)` along a path of the given family from `h` to `g` (jets of
/// `log G`). `bend` shapes the bent and two-segment families.
pub fn l_between(
    lab: &Lab,
    g: &[FieldJet],
    h: &[FieldJet],
    family: Family,
    bend: &[FieldJet],
    steps: usize,
    lambda: f64,
) -> Result<f64> {
    use crate::path::Shape;
    let path = |a: &[FieldJet], b: &[FieldJet], shape: Shape| MetricPath::new(a.to_vec(), b.to_vec(), shape, steps);
    Ok(match family {
        Family::Linear => donaldson_l(lab, &path(h, g, Shape::Linear)?, lambda).l_value,
        Family::Bent => donaldson_l(lab, &path(h, g, Shape::Bent(bend.to_vec()))?, lambda).l_value,
        Family::LinearInG => donaldson_l(lab, &path(h, g, Shape::LinearInG)?, lambda).l_value,
        Family::TwoSegment => {
            let mid: Vec<FieldJet> =
                h.iter().zip(g).zip(bend).map(|((a, b), c)| a.scaled(0.5).axpy(0.5, b).axpy(0.25, c)).collect();
            let s1 = donaldson_l(lab, &path(h, &mid, Shape::Linear)?, lambda).l_value;
            let s2 = donaldson_l(lab, &path(&mid, g, Shape::Linear)?, lambda).l_value;
            s1 + s2
        }
    })
}

fn hermitian_potential(lab: &Lab, m: &FinslerMetric) -> Result<Expr> {
    let u = m
        .analytic_potential()
        .ok_or_else(|| Error::Invalid("Hermitian metrics need an analytic potential".into()))?;
    let vals = lab.expr_values(u);
    let nq = lab.nq();
    for p in 0..lab.nb() {
        let c = &vals[p * nq..(p + 1) * nq];
        let (lo, hi) = c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        if hi - lo > 1e-12 * (1.0 + hi.abs()) {
            return Err(Error::Invalid("metric is not Hermitian: potential depends on the fiber".into()));
        }
    }
    Ok(u.clone())
}

/// Jets in `z` of the matrix `e^u h` at one base point.
fn hermitian_matrix_jets(lab: &Lab, m: &FinslerMetric, u: &Expr, p: usize) -> [[Jet2; 2]; 2] {
    let pt = &lab.base.points[p];
    let entries = m.reference.chart_entries(pt.chart, &lab.bundle);
    let ue = lab.to_chart(u, pt.chart, crate::fiber::FiberChart::Zeta);
    let zero = Jet2::constant(ZERO);
    let vars = [Jet2::var(pt.z, Jet2::Z), Jet2::var(pt.z.conj(), Jet2::ZB), zero, zero];
    let eu = ue.eval(&vars).exp();
    let mut out = [[zero; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = eu * entries[i][j].eval(&vars);
        }
    }
    out
}

fn slot(m: &[[Jet2; 2]; 2], k: usize) -> M2 {
    let mut out = linalg::zeros();
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = m[i][j].0[k];
        }
    }
    out
}

/// The Donaldson functional of two Hermitian metrics along the linear
/// Hermitian path, by matrix calculus alone:
/// `M(G, H) = ∫_M ∫₀¹ tr(P⁻¹ Ṗ P⁻¹ K) dt - λ ∫_M log det(G/H) ω`.
pub fn donaldson_m(lab: &Lab, g: &FinslerMetric, h: &FinslerMetric, lambda: f64) -> Result<f64> {
    let (ug, uh) = (hermitian_potential(lab, g)?, hermitian_potential(lab, h)?);
    let (tn, tw) = gauss_legendre_on(24, 0.0, 1.0);
    let per = exec::map_range(lab.nb(), |p| {
        let a = hermitian_matrix_jets(lab, h, &uh, p);
        let b = hermitian_matrix_jets(lab, g, &ug, p);
        let pdot = linalg::sub(&slot(&b, Jet2::ONE), &slot(&a, Jet2::ONE));
        let mut acc = 0.0;
        for (&t, &w) in tn.iter().zip(&tw) {
            let mut pt = a;
            for i in 0..2 {
                for j in 0..2 {
                    pt[i][j] = a[i][j] * Jet2::constant(C64::new(1.0 - t, 0.0)) + b[i][j] * Jet2::constant(C64::new(t, 0.0));
                }
            }
            let pv = slot(&pt, Jet2::ONE);
            let inv = linalg::inv(&pv);
            let k = linalg::sub(
                &linalg::mul(&linalg::mul(&slot(&pt, Jet2::Z), &inv), &slot(&pt, Jet2::ZB)),
                &slot(&pt, Jet2::ZZB),
            );
            let tr = linalg::trace(&linalg::mul(&linalg::mul(&inv, &pdot), &linalg::mul(&inv, &k)));
            acc += w * tr.re;
        }
        let ld = (linalg::det(&slot(&b, Jet2::ONE)) / linalg::det(&slot(&a, Jet2::ONE))).re.ln();
        let pt = &lab.base.points[p];
        pt.area * (acc - lambda * pt.g * ld)
    });
    Ok(per.iter().sum())
}

#[derive(Clone, Debug)]
pub struct MeanCurvature {
    /// `K^i_j = g^{11̄} h^{ik̄} K_{jk̄}` per base point.
    pub endo: Vec<M2>,
    /// `sup_M |K - λI|` with `|A|² = tr(A∘A)`.
    pub deviation: f64,
}

pub fn mean_curvature(lab: &Lab, m: &FinslerMetric, lambda: f64) -> Result<MeanCurvature> {
    let u = hermitian_potential(lab, m)?;
    let endo = exec::map_range(lab.nb(), |p| {
        let pt = &lab.base.points[p];
        let (pm, k) = hermitian_chern(lab, &m.reference, &u, pt.chart, pt.z);
        let e = linalg::mul(&k, &linalg::inv(&pm));
        let s = C64::new(1.0 / pt.g, 0.0);
        [[e[0][0] * s, e[1][0] * s], [e[0][1] * s, e[1][1] * s]]
    });
    let deviation = endo
        .iter()
        .map(|e| {
            let d = linalg::sub(e, &linalg::scale(&linalg::identity(), C64::new(lambda, 0.0)));
            linalg::trace(&linalg::mul(&d, &d)).norm().sqrt()
        })
        .fold(0.0, f64::max);
    Ok(MeanCurvature { endo, deviation })
}

/// First Segre form `s₁ = ∫_fiber Ξ²` as a coefficient against `√−1 dz∧dz̄`.
///
/// With `Ξ` the first Chern form of the tautological quotient, the total
/// mass is `-deg E` (the convention `s(E)c(E) = 1`).
pub fn segre_form(lab: &Lab, jets: &[FieldJet], j: usize) -> Result<Vec<f64>> {
    if j != 1 {
        return Err(Error::Invalid(format!("only the first Segre form is nonzero on a surface, got j = {j}")));
    }
    let nq = lab.nq();
    Ok(exec::map_range(lab.nb(), |p| {
        (0..nq)
            .map(|q| {
                let node = lab.node(p * nq + q);
                let f = &jets[p * nq + q];
                node.weight * (f.zzb * f.wwb - f.zwb.norm_sqr()) * node.fs / PI
            })
            .sum()
    }))
}

pub fn segre_mass(lab: &Lab, m: &FinslerMetric) -> Result<f64> {
    let jets = log_jets(lab, m)?;
    Ok(lab.base.integrate_form(&segre_form(lab, &jets, 1)?))
}

/// `[H₁, H₂]_G / G` for complex tangent fields `H = νG` at every sample.
pub fn bracket(lab: &Lab, jets: &[FieldJet], nu1: &[C64], nu2: &[C64]) -> Result<Vec<C64>> {
    for v in [nu1, nu2] {
        if v.len() != lab.len() {
            return Err(Error::Shape { expected: lab.len(), got: v.len() });
        }
    }
    let nq = lab.nq();
    let per: Vec<Vec<C64>> = exec::map_range(lab.nb(), |p| {
        let r = p * nq..(p + 1) * nq;
        let d1 = lab.fiber_derivatives(p, &nu1[r.clone()]);
        let d2 = lab.fiber_derivatives(p, &nu2[r]);
        (0..nq)
            .map(|q| {
                let s = p * nq + q;
                let f = Frame::new(&jets[s], &lab.node(s));
                let (y1, yb1) = f.lift(nu1[s], d1.dw[q], d1.dwb[q]);
                let (y2, yb2) = f.lift(nu2[s], d2.dw[q], d2.dwb[q]);
                let inv = f.inverse();
                let mut acc = ZERO;
                for i in 0..2 {
                    for j in 0..2 {
                        acc += inv[i][j] * (y1[i] * yb2[j] - y2[i] * yb1[j]);
                    }
                }
                acc / f.g
            })
            .collect()
    });
    Ok(per.into_iter().flatten().collect())
}

/// `(1/G) D(νG)/∂t` at grid time `k` for a field `ν` sampled along the path.
pub fn covariant_derivative(lab: &Lab, path: &MetricPath, nu: &[Vec<FieldJet>], k: usize) -> Vec<f64> {
    let jets = path.member(k);
    let v = path.velocity(k);
    let st = path.grid.d1(k);
    let nut: Vec<f64> = stencil_values(&st, &nu.iter().map(|s| s.iter().map(|j| j.val).collect()).collect::<Vec<_>>());
    let cur = &nu[k];
    exec::map_range(lab.len(), |s| {
        let f = Frame::new(&jets[s], &lab.node(s));
        let (yn, _) = f.lift(C64::new(cur[s].val, 0.0), cur[s].w, cur[s].w.conj());
        let (_, ybv) = f.lift(C64::new(v[s].val, 0.0), v[s].w, v[s].w.conj());
        let inv = f.inverse();
        let mut acc = ZERO;
        for i in 0..2 {
            for j in 0..2 {
                acc += inv[i][j] * yn[i] * ybv[j];
            }
        }
        // ∂_t(νG)/G - ½ G^{ij̄}(∂_j̄Ġ ∂_iV + ∂_iĠ ∂_j̄V)/G
        nut[s] + cur[s].val * v[s].val - acc.re / f.g
    })
}

#[derive(Clone, Debug)]
pub struct ConnectionReport {
    /// `(1/G) DV/∂t` at every grid time.
    pub derivative: Vec<Vec<f64>>,
    /// `max_k |d/dt (V,V) - 2(DV/∂t, V)|`.
    pub compatibility_residual: f64,
}

pub fn path_connection(lab: &Lab, path: &MetricPath, nu: &[Vec<FieldJet>]) -> Result<ConnectionReport> {
    if nu.len() != path.steps() + 1 {
        return Err(Error::Shape { expected: path.steps() + 1, got: nu.len() });
    }
    let steps = path.steps();
    let mut norms = Vec::with_capacity(steps + 1);
    let mut pair = Vec::with_capacity(steps + 1);
    let mut derivative = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let jets = path.member(k);
        let vals: Vec<f64> = nu[k].iter().map(|j| j.val).collect();
        let d = covariant_derivative(lab, path, nu, k);
        norms.push(tangent_inner_product(lab, &jets, &vals, &vals)?);
        pair.push(tangent_inner_product(lab, &jets, &d, &vals)?);
        derivative.push(d);
    }
    let mut res: f64 = 0.0;
    for k in 0..=steps {
        let dn: f64 = path.grid.d1(k).iter().map(|&(j, w)| w * norms[j]).sum();
        res = res.max((dn - 2.0 * pair[k]).abs());
    }
    Ok(ConnectionReport { derivative, compatibility_residual: res })
}
