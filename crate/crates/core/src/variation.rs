//! Variation formulas of the energy and of `L`, each paired with an
//! independent finite-difference evaluation of the functional itself.
//!
//! The finite differences of `L` never reuse the path under study: every
//! value `L(G_s, H)` is recomputed along a fresh linear path from `H`, so
//! agreement also exercises path independence.

use crate::error::{Error, Result};
use crate::exec;
use crate::finsler::LogCurvature;
use crate::functionals::{donaldson_l, l_between, path_energy, Family};
use crate::jet::FieldJet;
use crate::lab::Lab;
use crate::path::MetricPath;
use crate::RANK;
use serde::Serialize;

const R: f64 = RANK as f64;

/// Steps of the first-derivative difference quotients (Richardson pair).
pub const FIRST_STEPS: [f64; 2] = [1e-3, 5e-4];
/// Step of the second difference.
pub const SECOND_STEP: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tag {
    Energy,
    LFirst,
    LSecond,
}

#[derive(Clone, Debug, Serialize)]
pub struct VariationReport {
    pub tag: Tag,
    pub formula_value: f64,
    pub fd_value: f64,
    pub relative_error: f64,
    pub step: f64,
}

impl VariationReport {
    fn new(tag: Tag, formula_value: f64, fd_value: f64, step: f64) -> Self {
        let relative_error = (formula_value - fd_value).abs() / formula_value.abs().max(1.0);
        VariationReport { tag, formula_value, fd_value, relative_error, step }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.relative_error.is_finite() && self.relative_error < tol
    }
}

/// Central difference with one Richardson extrapolation.
fn richardson(f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let [h1, h2] = FIRST_STEPS;
    let d1 = (f(h1)? - f(-h1)?) / (2.0 * h1);
    let d2 = (f(h2)? - f(-h2)?) / (2.0 * h2);
    let q = (h1 / h2).powi(2);
    Ok((q * d2 - d1) / (q - 1.0))
}

/// `∂_t v - ‖∂^V v‖²` at every sample, from the metric jets, the velocity
/// jets and the acceleration values.
pub fn geodesic_field(lab: &Lab, jets: &[FieldJet], v: &[FieldJet], a: &[f64]) -> Vec<f64> {
    exec::map_range(lab.len(), |s| a[s] - v[s].w.norm_sqr() / jets[s].wwb)
}

#[derive(Clone, Debug)]
pub struct GeodesicResidual {
    /// Residual per grid time and sample.
    pub field: Vec<Vec<f64>>,
    pub sup: f64,
}

pub fn geodesic_residual(lab: &Lab, path: &MetricPath) -> Result<GeodesicResidual> {
    if path.steps() < 3 {
        return Err(Error::Invalid("geodesic residual needs T >= 3".into()));
    }
    let mut field = Vec::with_capacity(path.steps() + 1);
    path.sweep(true, |_, jets, v, acc| {
        let a: Vec<f64> = acc.unwrap().iter().map(|j| j.val).collect();
        field.push(geodesic_field(lab, jets, v, &a));
    });
    let sup = field.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(GeodesicResidual { field, sup })
}

/// `∫_M ⟨a, b⟩_G ω` for fields given as ratios `a = A/G`, `b = B/G`.
fn pairing(lab: &Lab, jets: &[FieldJet], a: &[f64], b: &[f64]) -> f64 {
    let xi: Vec<f64> = exec::map_range(lab.len(), |s| jets[s].wwb * lab.node(s).fs);
    lab.base.integrate(&crate::functionals::pointwise_inner(lab, &xi, a, b))
}

/// `tr_ω Ψ - λ` at every sample.
pub fn einstein_defect(lab: &Lab, jets: &[FieldJet], lambda: f64) -> Vec<f64> {
    exec::map_range(lab.len(), |s| LogCurvature::from_jet(&jets[s], lab.point(s).g, 1.0).tr_psi - lambda)
}

/// `r(vG, (tr_ωΨ - λ)G)`.
pub fn first_variation_formula(lab: &Lab, jets: &[FieldJet], v: &[f64], lambda: f64) -> f64 {
    R * pairing(lab, jets, v, &einstein_defect(lab, jets, lambda))
}

/// `r‖(∂^H v)G‖²`: `r ∫_M g^{11̄}[(r+1)∫|δv/δz|²ξ - r|∫(δv/δz)ξ|²] ω`.
pub fn horizontal_norm(lab: &Lab, jets: &[FieldJet], v: &[FieldJet]) -> f64 {
    let nq = lab.nq();
    let per = exec::map_range(lab.nb(), |p| {
        let (mut m2, mut m1) = (0.0, crate::C64::new(0.0, 0.0));
        for q in 0..nq {
            let s = p * nq + q;
            let node = lab.node(s);
            let c = LogCurvature::from_jet(&jets[s], 1.0, node.fs);
            let dv = v[s].z - c.horizontal_shift() * v[s].w;
            let w = node.weight * c.xi;
            m2 += w * dv.norm_sqr();
            m1 += dv * w;
        }
        let pt = &lab.base.points[p];
        pt.area * ((R + 1.0) * m2 - R * m1.norm_sqr())
    });
    R * per.iter().sum::<f64>()
}

/// Second variation split into the geodesic pairing and the horizontal norm.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SecondVariation {
    pub geodesic_part: f64,
    pub horizontal_part: f64,
}

impl SecondVariation {
    pub fn total(&self) -> f64 {
        self.geodesic_part + self.horizontal_part
    }
}

pub fn second_variation_formula(lab: &Lab, jets: &[FieldJet], v: &[FieldJet], a: &[f64], lambda: f64) -> SecondVariation {
    let geo = geodesic_field(lab, jets, v, a);
    SecondVariation {
        geodesic_part: R * pairing(lab, jets, &geo, &einstein_defect(lab, jets, lambda)),
        horizontal_part: horizontal_norm(lab, jets, v),
    }
}

fn l_from(lab: &Lab, g: &[FieldJet], h: &[FieldJet], steps: usize, lambda: f64) -> Result<f64> {
    l_between(lab, g, h, Family::Linear, &[], steps, lambda)
}

fn shifted(g: &[FieldJet], d: &[FieldJet], s: f64) -> Vec<FieldJet> {
    g.iter().zip(d).map(|(a, b)| a.axpy(s, b)).collect()
}

/// First variation of the energy for the endpoint-fixed variation
/// `V_t = t(1-t)ψ G_t`: `-∫₀¹ (G(∂_t v - ‖∂^V v‖²), V) dt`.
pub fn energy_first_variation(lab: &Lab, path: &MetricPath, psi: &[FieldJet]) -> Result<VariationReport> {
    let grid = &path.grid;
    let w = grid.weights();
    let psi_val: Vec<f64> = psi.iter().map(|j| j.val).collect();
    let mut integrand = Vec::with_capacity(path.steps() + 1);
    path.sweep(true, |k, jets, v, acc| {
        let t = grid.t(k);
        let a: Vec<f64> = acc.unwrap().iter().map(|j| j.val).collect();
        let geo = geodesic_field(lab, jets, v, &a);
        let vk: Vec<f64> = psi_val.iter().map(|p| t * (1.0 - t) * p).collect();
        integrand.push(pairing(lab, jets, &geo, &vk));
    });
    let formula = -integrand.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
    let fd = richardson(|s| Ok(path_energy(lab, &path.perturbed(psi, s)?)))?;
    Ok(VariationReport::new(Tag::Energy, formula, fd, FIRST_STEPS[0]))
}

/// `dL(G e^{sd}, H)/ds` at `s = 0`: formula against finite differences.
pub fn l_first_variation(
    lab: &Lab,
    g: &[FieldJet],
    h: &[FieldJet],
    d: &[FieldJet],
    steps: usize,
    lambda: f64,
) -> Result<VariationReport> {
    let dv: Vec<f64> = d.iter().map(|j| j.val).collect();
    let formula = first_variation_formula(lab, g, &dv, lambda);
    let fd = richardson(|s| l_from(lab, &shifted(g, d, s), h, steps, lambda))?;
    Ok(VariationReport::new(Tag::LFirst, formula, fd, FIRST_STEPS[0]))
}

/// `d²L(G e^{sd}, H)/ds²` at `s = 0`. The curve `G e^{sd}` has `v = d`
/// and `∂_t v = 0`.
pub fn l_second_variation(
    lab: &Lab,
    g: &[FieldJet],
    h: &[FieldJet],
    d: &[FieldJet],
    steps: usize,
    lambda: f64,
) -> Result<(VariationReport, SecondVariation)> {
    let zero = vec![0.0; lab.len()];
    let parts = second_variation_formula(lab, g, d, &zero, lambda);
    let hs = SECOND_STEP;
    let lp = l_from(lab, &shifted(g, d, hs), h, steps, lambda)?;
    let l0 = l_from(lab, g, h, steps, lambda)?;
    let lm = l_from(lab, &shifted(g, d, -hs), h, steps, lambda)?;
    let fd = (lp - 2.0 * l0 + lm) / (hs * hs);
    Ok((VariationReport::new(Tag::LSecond, parts.total(), fd, hs), parts))
}

/// `dL/dt` at grid time `k` of a path, against differences of `L(G_t, G_0)`.
pub fn l_rate_along_path(lab: &Lab, path: &MetricPath, k: usize, lambda: f64) -> Result<VariationReport> {
    let jets = path.member(k);
    let v: Vec<f64> = path.velocity(k).iter().map(|j| j.val).collect();
    let formula = first_variation_formula(lab, &jets, &v, lambda);
    let t = path.grid.t(k);
    let fd = richardson(|s| l_from(lab, &path.at(t + s), path.start(), path.steps(), lambda))?;
    Ok(VariationReport::new(Tag::LFirst, formula, fd, FIRST_STEPS[0]))
}

/// `d²L/dt²` at grid time `k` of a path, against the second difference of
/// `L(G_t, G_0)`.
pub fn l_acceleration_along_path(
    lab: &Lab,
    path: &MetricPath,
    k: usize,
    lambda: f64,
) -> Result<(VariationReport, SecondVariation)> {
    let jets = path.member(k);
    let v = path.velocity(k);
    let a: Vec<f64> = path.acceleration(k).iter().map(|j| j.val).collect();
    let parts = second_variation_formula(lab, &jets, &v, &a, lambda);
    let t = path.grid.t(k);
    let hs = SECOND_STEP;
    let l = |s: f64| l_from(lab, &path.at(t + s), path.start(), path.steps(), lambda);
    let fd = (l(hs)? - 2.0 * l(0.0)? + l(-hs)?) / (hs * hs);
    Ok((VariationReport::new(Tag::LSecond, parts.total(), fd, hs), parts))
}

/// `L` along a path, as a convenience for reports.
pub fn l_of_path(lab: &Lab, path: &MetricPath, lambda: f64) -> f64 {
    donaldson_l(lab, path, lambda).l_value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::bump;
    use crate::expr::Expr;

    #[test]
    fn scaling_path_is_a_geodesic() {
        let lab = Lab::torus(8, 8).unwrap();
        let g = lab.expr_jets(&(0.1 * bump()));
        let g1: Vec<FieldJet> = g.iter().map(|j| j.axpy(1.0, &FieldJet::constant(0.7))).collect();
        let path = MetricPath::linear(g, g1, 8).unwrap();
        assert!(geodesic_residual(&lab, &path).unwrap().sup < 1e-10);
    }

    #[test]
    fn linear_fiber_path_residual_is_vertical_norm() {
        let lab = Lab::torus(8, 8).unwrap();
        let flat = lab.expr_jets(&(1.0 + Expr::w() * Expr::wb()).ln());
        let phi = lab.expr_jets(&(0.2 * bump()));
        let end: Vec<FieldJet> = flat.iter().zip(&phi).map(|(a, b)| *a + *b).collect();
        let path = MetricPath::linear(flat.clone(), end, 8).unwrap();
        let res = geodesic_residual(&lab, &path).unwrap();
        // With v = φ fixed, the residual at t = 0 is -|φ_w|²/C of the flat metric.
        for s in 0..lab.len() {
            let want = -phi[s].w.norm_sqr() / flat[s].wwb;
            assert!((res.field[0][s] - want).abs() < 1e-10);
        }
        assert!(res.sup > 1e-3);
    }
}
