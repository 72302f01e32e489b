//! The validation suite: one named check per acceptance criterion.
//!
//! Every check builds its own metrics from the corpus, measures a list of
//! residuals and compares each with a pinned tolerance. A check passes when
//! every measure does.

use crate::corpus;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::finsler::{
    curvature_package, hermitian_reduction_residual, lemma_identities, log_curvatures, log_jets, FinslerMetric,
    LogCurvature, Potential,
};
use crate::flow::{
    c2_stable, convexity_audit, grid_potential, run_gradient_flow, run_gradient_flow_observed, solve_epsilon_geodesic,
    torus_spacing, FlowOptions, GeodesicOptions,
};
use crate::functionals::{donaldson_m, l_between, lambda_const, segre_mass, Family};
use crate::geometry_base::BaseKind;
use crate::jet::FieldJet;
use crate::lab::Lab;
use crate::path::{MetricPath, Shape};
use crate::variation::{
    einstein_defect, energy_first_variation, first_variation_formula, geodesic_residual, l_acceleration_along_path,
    l_first_variation, l_rate_along_path, l_second_variation,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::time::Instant;

/// Resolution of the suite. The default is the desk scale.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Scale {
    pub torus_n: usize,
    pub p1_n: usize,
    pub fiber: usize,
    pub steps: usize,
}

impl Default for Scale {
    fn default() -> Self {
        Scale { torus_n: 16, p1_n: 24, fiber: 16, steps: 32 }
    }
}

/// Acceptance tolerances.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub normalization: f64,
    pub decomposition_analytic: f64,
    pub decomposition_grid: f64,
    pub identities: f64,
    pub hermitian: f64,
    pub l_equals_m: f64,
    pub path_independence: f64,
    pub cocycle: f64,
    pub scaling: f64,
    pub variation_first: f64,
    pub variation_second: f64,
    pub einstein_variation: f64,
    pub flow_deviation: f64,
    pub flow_max_steps: usize,
    pub heat_oracle: f64,
    pub l_slack_per_step: f64,
    pub termination: f64,
    pub geodesic: f64,
    pub c2_factor: f64,
    pub segre: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            normalization: 1e-6,
            decomposition_analytic: 1e-6,
            decomposition_grid: 1e-4,
            identities: 1e-6,
            hermitian: 1e-6,
            l_equals_m: 1e-4,
            path_independence: 1e-4,
            cocycle: 1e-4,
            scaling: 1e-6,
            variation_first: 1e-3,
            variation_second: 5e-3,
            einstein_variation: 1e-6,
            flow_deviation: 1e-6,
            flow_max_steps: 10_000,
            heat_oracle: 1e-4,
            l_slack_per_step: 1e-8,
            termination: 1e-5,
            geodesic: 1e-3,
            c2_factor: 2.0,
            segre: 1e-3,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("normalization", self.normalization),
            ("decomposition_analytic", self.decomposition_analytic),
            ("decomposition_grid", self.decomposition_grid),
            ("identities", self.identities),
            ("hermitian", self.hermitian),
            ("l_equals_m", self.l_equals_m),
            ("path_independence", self.path_independence),
            ("cocycle", self.cocycle),
            ("scaling", self.scaling),
            ("variation_first", self.variation_first),
            ("variation_second", self.variation_second),
            ("einstein_variation", self.einstein_variation),
            ("flow_deviation", self.flow_deviation),
            ("heat_oracle", self.heat_oracle),
            ("l_slack_per_step", self.l_slack_per_step),
            ("termination", self.termination),
            ("geodesic", self.geodesic),
            ("c2_factor", self.c2_factor),
            ("segre", self.segre),
        ];
        for (name, v) in reals {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("tolerance `{name}` must be positive, got {v}")));
            }
        }
        if self.flow_max_steps == 0 {
            return Err(Error::Config("tolerance `flow_max_steps` must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// `value < limit`.
    Below,
    /// `value <= limit`.
    AtMost,
    /// `value >= limit`.
    AtLeast,
    /// Reported only.
    Info,
}

#[derive(Clone, Debug, Serialize)]
pub struct Measure {
    pub label: String,
    pub value: f64,
    pub limit: f64,
    pub relation: Relation,
    pub passed: bool,
}

impl Measure {
    pub fn new(label: impl Into<String>, value: f64, relation: Relation, limit: f64) -> Self {
        let passed = match relation {
            Relation::Below => value < limit,
            Relation::AtMost => value <= limit,
            Relation::AtLeast => value >= limit,
            Relation::Info => true,
        };
        Measure { label: label.into(), value, limit, relation, passed }
    }

    fn below(label: impl Into<String>, value: f64, limit: f64) -> Self {
        Measure::new(label, value, Relation::Below, limit)
    }

    fn info(label: impl Into<String>, value: f64) -> Self {
        Measure::new(label, value, Relation::Info, f64::NAN)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub measures: Vec<Measure>,
    #[serde(skip)]
    pub seconds: f64,
}

impl CheckResult {
    /// The gated measure with the least margin.
    pub fn worst(&self) -> Option<&Measure> {
        let margin = |m: &Measure| match m.relation {
            Relation::Below | Relation::AtMost if m.limit != 0.0 => m.value / m.limit,
            Relation::Below | Relation::AtMost => m.value,
            Relation::AtLeast if m.value != 0.0 => m.limit / m.value,
            Relation::AtLeast => f64::INFINITY,
            Relation::Info => f64::NEG_INFINITY,
        };
        let key = |m: &Measure| if m.passed { margin(m) } else { f64::INFINITY };
        self.measures
            .iter()
            .filter(|m| m.relation != Relation::Info)
            .max_by(|a, b| key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal))
    }

    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let worst = self.worst().map_or(String::new(), |m| {
            let rel = match m.relation {
                Relation::Below => "<",
                Relation::AtMost => "<=",
                Relation::AtLeast => ">=",
                Relation::Info => "~",
            };
            format!("; tightest: {} = {:.3e} {rel} {:.1e}", m.label, m.value, m.limit)
        });
        let failed = self.measures.iter().filter(|m| !m.passed).count();
        format!(
            "criterion {} {:<22} {status} ({} measures, {failed} failed, {:.1}s{worst})",
            self.id,
            self.name,
            self.measures.len(),
            self.seconds
        )
    }
}

pub struct CheckInfo {
    pub id: usize,
    pub name: &'static str,
    pub summary: &'static str,
}

pub const CHECKS: [CheckInfo; 9] = [
    CheckInfo { id: 1, name: "normalization", summary: "fiber integral of Xi is 1 over every base point" },
    CheckInfo { id: 2, name: "decomposition", summary: "Xi = -Psi/2pi + omega_FS componentwise" },
    CheckInfo { id: 3, name: "norm-identities", summary: "vertical and horizontal norm identities pointwise" },
    CheckInfo { id: 4, name: "hermitian-reduction", summary: "Kobayashi tensor equals Chern curvature; FS is Einstein" },
    CheckInfo { id: 5, name: "functional-identities", summary: "L = M, path independence, cocycle, scaling" },
    CheckInfo { id: 6, name: "variation-formulas", summary: "first and second variations against finite differences" },
    CheckInfo { id: 7, name: "gradient-flow", summary: "flow convergence, heat oracle, L monotone, termination" },
    CheckInfo { id: 8, name: "epsilon-geodesics", summary: "residual convergence, uniform bound, stable convexity defect" },
    CheckInfo { id: 9, name: "segre-mass", summary: "Segre mass equals the degree and is perturbation invariant" },
];

/// The three labs of the suite: the torus, `O(1)⊕O(1)` and `O(2)⊕O(0)`.
pub struct Suite {
    pub scale: Scale,
    pub seed: u64,
    pub torus: Lab,
    pub p1: Lab,
    pub p1_skew: Lab,
}

impl Suite {
    pub fn new(scale: Scale, seed: u64) -> Result<Self> {
        Ok(Suite {
            torus: Lab::torus(scale.torus_n, scale.fiber)?,
            p1: Lab::sphere(scale.p1_n, scale.fiber, 1, 1)?,
            p1_skew: Lab::sphere(scale.p1_n, scale.fiber, 2, 0)?,
            scale,
            seed,
        })
    }

    pub fn labs(&self) -> [&Lab; 3] {
        [&self.torus, &self.p1, &self.p1_skew]
    }
}

pub fn lab_name(lab: &Lab) -> String {
    match lab.base.kind {
        BaseKind::Torus => "torus".into(),
        BaseKind::ProjectiveLine => {
            let (a, b) = lab.bundle.exponents();
            format!("P1 O({a})+O({b})")
        }
    }
}

/// Corpus metrics plus one seeded random Finsler metric. The tensor-route
/// checks skip the random metric: its compiled expression is large.
fn corpus_with_random(lab: &Lab, seed: u64) -> Vec<(String, FinslerMetric)> {
    let mut out = corpus::metrics(lab);
    let u = corpus::random_field(lab, seed, 0.01);
    out.push((
        format!("random-{seed}"),
        FinslerMetric { reference: corpus::base_reference(lab), potential: Potential::Analytic(u) },
    ));
    out
}

fn is_fiber_dependent(lab: &Lab, m: &FinslerMetric) -> bool {
    match m.analytic_potential() {
        Some(u) => {
            let v = lab.expr_values(u);
            v.chunks(lab.nq()).any(|c| c.iter().any(|x| (x - c[0]).abs() > 1e-12))
        }
        None => true,
    }
}

fn gridded(lab: &Lab, m: &FinslerMetric) -> Result<FinslerMetric> {
    Ok(FinslerMetric { reference: m.reference.clone(), potential: Potential::Grid(grid_potential(lab, m)?) })
}

pub fn run_check(id: usize, suite: &Suite, tol: &Tolerances) -> Result<CheckResult> {
    let info = CHECKS.iter().find(|c| c.id == id).ok_or_else(|| Error::Config(format!("no check with id {id}")))?;
    let t0 = Instant::now();
    let measures = match id {
        1 => normalization(suite, tol)?,
        2 => decomposition(suite, tol)?,
        3 => norm_identities(suite, tol)?,
        4 => hermitian_reduction(suite, tol)?,
        5 => functional_identities(suite, tol)?,
        6 => variation_formulas(suite, tol)?,
        7 => gradient_flow(suite, tol)?,
        8 => epsilon_geodesics(suite, tol)?,
        _ => segre(suite, tol)?,
    };
    let passed = measures.iter().all(|m| m.passed);
    Ok(CheckResult { id, name: info.name.into(), passed, measures, seconds: t0.elapsed().as_secs_f64() })
}

/// A failed computation is a failed check, not an aborted suite.
pub fn run_check_reported(id: usize, suite: &Suite, tol: &Tolerances) -> CheckResult {
    match run_check(id, suite, tol) {
        Ok(r) => r,
        Err(e) => CheckResult {
            id,
            name: CHECKS.get(id.wrapping_sub(1)).map_or("unknown", |c| c.name).into(),
            passed: false,
            measures: vec![Measure { label: format!("error: {e}"), value: f64::NAN, limit: f64::NAN, relation: Relation::Below, passed: false }],
            seconds: 0.0,
        },
    }
}

fn normalization(suite: &Suite, tol: &Tolerances) -> Result<Vec<Measure>> {
    let mut out = Vec::new();
    for lab in suite.labs() {
        for (name, m) in corpus_with_random(lab, suite.seed) {
            let mut variants = vec![(name.clone(), m.clone())];
            if lab.torus_ops.is_some() && is_fiber_dependent(lab, &m) {
                variants.push((format!("{name} (grid)"), gridded(lab, &m)?));
            }
            for (label, metric) in variants {
                let jets = log_jets(lab, &metric)?;
                let xi: Vec<f64> = log_curvatures(lab, &jets).iter().map(|c| c.xi).collect();
                let err = lab.fiber_integrate(&xi).iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
                out.push(Measure::below(format!("{} {label}", lab_name(lab)), err, tol.normalization));
            }
        }
    }
    Ok(out)
}

/// Horizontal and vertical residuals of the decomposition with `Ξ` read
/// off the grid jets and `Ψ`, `ω_FS` from the analytic tensor route.
fn grid_decomposition(lab: &Lab, m: &FinslerMetric) -> Result<f64> {
    let pkg = curvature_package(lab, m)?;
    let jets = log_jets(lab, &gridded(lab, m)?)?;
    let tp = 1.0 / (2.0 * PI);
    Ok(pkg
        .samples
        .iter()
        .zip(&jets)
        .map(|(c, j)| {
            let lc = LogCurvature::from_jet(j, 1.0, 1.0);
            let h = ((lc.a - lc.b.norm_sqr() / lc.c) * tp + c.psi * tp).abs();
            let v = (lc.c * tp - c.omega_fs).abs();
            h.max(v)
        })
        .fold(0.0, f64::max))
}

fn decomposition(suite: &Suite, tol: &Tolerances) -> Result<Vec<Measure>> {
    let mut out = Vec::new();
    for lab in suite.labs() {
        for (name, m) in corpus::metrics(lab) {
            let r = curvature_package(lab, &m)?.max_decomposition_residual();
            out.push(Measure::below(format!("{} {name}", lab_name(lab)), r, tol.decomposition_analytic));
            if lab.torus_ops.is_some() && is_fiber_dependent(lab, &m) {
                let g = grid_decomposition(lab, &m)?;
                out.push(Measure::below(format!("{} {name} (grid)", lab_name(lab)), g, tol.decomposition_grid));
            }
        }
    }
    Ok(out)
}

/// `q/(1+q)` in the unitary fiber coordinate, times a base mode.
fn identity_test_function(lab: &Lab) -> Expr {
    let (a, b) = lab.bundle.exponents();
    let q = Expr::w() * Expr::wb() * (1.0 + Expr::z() * Expr::zb()).powi(a - b);
    let mode = corpus::directions(lab)[1].1.clone();
    q.clone() / (1.0 + q) * (1.0 + 0.5 * mode)
}

fn norm_identities(suite: &Suite, tol: &Tolerances) -> Result<Vec<Measure>> {
    let mut out = Vec::new();
    for lab in suite.labs() {
        let f = identity_test_function(lab);
        for (name, m) in corpus::metrics(lab) {
            let r = lemma_identities(lab, &m, &f)?;
            out.push(Measure::below(format!("{} {name} vertical", lab_name(lab)), r.vertical, tol.identities));
            out.push(Measure::below(format!("{} {name} horizontal", lab_name(lab)), r.horizontal, tol.identities));
        }
    }
    Ok(out)
}

fn hermitian_reduction(suite: &Suite, tol: &Tolerances) -> Result<Vec<Measure>> {
    let mut out = Vec::new();
    for lab in suite.labs() {
        let mut hermitian: Vec<(String, FinslerMetric)> =
            corpus::metrics(lab).into_iter().filter(|(_, m)| !is_fiber_dependent(lab, m)).collect();
        for (name, g, h) in corpus::hermitian_pairs(lab) {
            hermitian.push((format!("{name}/G"), g));
            hermitian.push((format!("{name}/H"), h));
        }
        for (name, m) in hermitian {
            let r = hermitian_reduction_residual(lab, &m)?;
            out.push(Measure::below(format!("{} {name}", lab_name(lab)), r, tol.hermitian));
        }
    }
    let lab = &suite.p1;
    let lambda = lambda_const(lab)?;
    let fs = FinslerMetric::hermitian(corpus::base_reference(lab));
    let dev = curvature_package(lab, &fs)?.traces().iter().map(|t| (t - lambda).abs()).fold(0.0, f64::max);
    out.push(Measure::below("P1 O(1)+O(1) |lambda - 1|", (lambda - 1.0).abs(), tol.hermitian));
    out.push(Measure::below("P1 O(1)+O(1) FS sup|tr Psi - lambda|", dev, tol.hermitian));
    Ok(out)
}

fn functional_identities(suite: &Suite, tol: &Tolerances) -> Result<Vec<Measure>> {
    let steps = suite.scale.steps;
    let mut out = Vec::new();
    for lab in suite.labs() {
        let ln = lab_name(lab);
        let lambda = lambda_const(lab)?;
        let bend = lab.expr_jets(&corpus::bend(lab));
        let l = |g: &[FieldJet], h: &[FieldJet], f: Family| l_between(lab, g, h, f, &bend, steps, lambda);
        let mut pairs: Vec<(String, Vec<FieldJet>, Vec<FieldJet>)> = Vec::new();
        for (name, g, h) in corpus::hermitian_pairs(lab) {
            let (jg, jh) = (log_jets(lab, &g)?, log_jets(lab, &h)?);
            let m = donaldson_m(lab, &g, &h, lambda)?;
            out.push(Measure::below(format!("{ln} {name} |L - M|"), (l(&jg, &jh, Family::Linear)? - m).abs(), tol.l_equals_m));
            pairs.push((name, jg, jh));
        }
        for (name, [a, b, c]) in corpus::triples(lab) {
            let j = [log_jets(lab, &a)?, log_jets(lab, &b)?, log_jets(lab, &c)?];
            let sum = l(&j[0], &j[1], Family::Linear)? + l(&j[1], &j[2], Family::Linear)? + l(&j[2], &j[0], Family::Linear)?;
            out.push(Measure::below(format!("{ln} {name} cocycle"), sum.abs(), tol.cocycle));
            let [j0, j1, _] = j;
            pairs.push((format!("{name} 1-0"), j1, j0));
        }
        for (name, g, h) in &pairs {
            let base = l(g, h, Family::Linear)?;
            let mut spread = 0.0_f64;
            for f in [Family::Bent, Family::LinearInG, Family::TwoSegment] {
                spread = spread.max((l(g, h, f)? - base).abs());
            }
            out.push(Measure::below(format!("{ln} {name} family spread"), spread, tol.path_independence));
        }
        if lab.bundle.exponents() != (2, 0) {
            let (name, m) = corpus::metrics(lab).swap_remove(2);
            let g = log_jets(lab, &m)?;
            for a in [0.5, 2.0, 5.0, 10.0] {
                let h = log_jets(lab, &m.scaled(a))?;
                out.push(Measure::below(format!("{ln} {name} L(G,{a}G)"), l(&g, &h, Family::Linear)?.abs(), tol.scaling));
            }
        }
    }
    Ok(out)
}

fn variation_formulas(suite: &Suite, tol: &Tolerances) -> Result<Vec<Measure>> {
    let steps = suite.scale.steps;
    let mut out = Vec::new();
    for (lab, gname) in [(&suite.torus, "bump-mixed"), (&suite.p1, "fs-bump-x1")] {
        let ln = lab_name(lab);
        let lambda = lambda_const(lab)?;
        let ms = corpus::metrics(lab);
        let find = |n: &str| ms.iter().find(|(k, _)| k == n).map(|(_, m)| m.clone()).expect("corpus metric");
        let h = log_jets(lab, &find("reference"))?;
        let g = log_jets(lab, &find(gname))?;
        let path = MetricPath::linear(h.clone(), g.clone(), steps)?;
        let (mut e, mut f1, mut f2, mut ein) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
        for (_, d) in corpus::directions(lab) {
            let dj = lab.expr_jets(&d);
            e = e.max(energy_first_variation(lab, &path, &dj)?.relative_error);
            f1 = f1.max(l_first_variation(lab, &g, &h, &dj, steps, lambda)?.relative_error);
            f2 = f2.max(l_second_variation(lab, &g, &h, &dj, steps, lambda)?.0.relative_error);
            let dv: Vec<f64> = dj.iter().map(|j| j.val).collect();
            ein = ein.max(first_variation_formula(lab, &h, &dv, lambda).abs());
        }
        out.push(Measure::below(format!("{ln} energy first variation (20 directions)"), e, tol.variation_first));
        out.push(Measure::below(format!("{ln} L first variation (20 directions)"), f1, tol.variation_first));
        out.push(Measure::below(format!("{ln} L second variation (20 directions)"), f2, tol.variation_second));
        out.push(Measure::below(format!("{ln} L first variation at Einstein reference"), ein, tol.einstein_variation));
        let bend = lab.expr_jets(&corpus::bend(lab));
        let bent = MetricPath::new(h, g, Shape::Bent(bend), steps)?;
        let mut rate = 0.0_f64;
        for k in [steps / 4, steps / 2, 3 * steps / 4] {
            rate = rate.max(l_rate_along_path(lab, &bent, k, lambda)?.relative_error);
        }
        let acc = l_acceleration_along_path(lab, &bent, steps / 2, lambda)?.0.relative_error;
        out.push(Measure::below(format!("{ln} dL/dt along bent path"), rate, tol.variation_first));
        out.push(Measure::below(format!("{ln} d2L/dt2 along bent path"), acc, tol.variation_second));
    }
    Ok(out)
}

/// Largest `|r(dG, (tr Ψ - λ)G)|` over the direction corpus.
fn max_first_variation(lab: &Lab, jets: &[FieldJet], lambda: f64) -> f64 {
    corpus::directions(lab)
        .iter()
        .map(|(_, d)| first_variation_formula(lab, jets, &lab.expr_values(d), lambda).abs())
        .fold(0.0, f64::max)
}

fn gradient_flow(suite: &Suite, tol: &Tolerances) -> Result<Vec<Measure>> {
    let lab = &suite.torus;
    let lambda = lambda_const(lab)?;
    let mut out = Vec::new();
    let amp = 0.1;
    let g0 = corpus::conformal_torus(lab, amp);
    let opts = FlowOptions { max_steps: tol.flow_max_steps, tol: tol.flow_deviation, path_steps: suite.scale.steps, ..Default::default() };
    let h = torus_spacing(lab);
    let dt = opts.cfl * h * h;
    // Scalar heat oracle: u = a e^{-π² t} sin 2πx solves u_t = -tr Ψ on the
    // square torus.
    let xs: Vec<f64> = lab.base.points.iter().map(|p| p.z.re - p.z.im * lab.base.tau.re / lab.base.tau.im).collect();
    let nq = lab.nq();
    let mut oracle = 0.0_f64;
    let trace = run_gradient_flow_observed(lab, &g0, lambda, &opts, &mut |k, u| {
        let t = k as f64 * dt;
        for (p, x) in xs.iter().enumerate() {
            let want = amp * (-PI * PI * t).exp() * (2.0 * PI * x).sin();
            oracle = oracle.max((u.value(p * nq, nq) - want).abs());
        }
    })?;
    let steps = trace.steps.len() - 1;
    out.push(Measure::below("conformal flow final sup|tr Psi - lambda|", trace.final_deviation(), tol.flow_deviation));
    out.push(Measure::new("conformal flow steps", steps as f64, Relation::AtMost, tol.flow_max_steps as f64));
    out.push(Measure::below("conformal flow vs heat oracle", oracle, tol.heat_oracle));
    let slack = tol.l_slack_per_step * opts.l_every as f64;
    out.push(Measure::new("conformal flow max L increase", trace.max_l_increase(), Relation::AtMost, slack));
    let dev_up = trace.steps.windows(2).map(|w| w[1].sup_dev - w[0].sup_dev).fold(f64::NEG_INFINITY, f64::max);
    out.push(Measure::new("conformal flow max deviation increase", dev_up, Relation::AtMost, 0.0));
    // Termination holds exactly when the first variation vanishes.
    let start = log_jets(lab, &g0)?;
    let end = log_jets(lab, &trace.final_metric)?;
    out.push(Measure::new("first variation at start", max_first_variation(lab, &start, lambda), Relation::AtLeast, tol.termination));
    out.push(Measure::below("first variation at termination", max_first_variation(lab, &end, lambda), tol.termination));
    // Genuinely Finsler start.
    let ms = corpus::metrics(lab);
    let fins = &ms.iter().find(|(n, _)| n == "bump-mixed").expect("corpus metric").1;
    let fopts = FlowOptions { max_steps: 400, l_every: 20, ..opts.clone() };
    let ft = run_gradient_flow(lab, fins, lambda, &fopts)?;
    out.push(Measure::new("Finsler flow max L increase", ft.max_l_increase(), Relation::AtMost, tol.l_slack_per_step * 20.0));
    let ratio = ft.final_deviation() / ft.steps[0].sup_dev;
    out.push(Measure::below("Finsler flow deviation ratio after 400 steps", ratio, 1.0));
    let defect = einstein_defect(lab, &log_jets(lab, &ft.final_metric)?, lambda);
    out.push(Measure::info("Finsler flow final sup deviation", defect.iter().fold(0.0, |m, d| m.max(d.abs()))));
    Ok(out)
}

fn epsilon_geodesics(suite: &Suite, tol: &Tolerances) -> Result<Vec<Measure>> {
    let lab = &suite.torus;
    let lambda = lambda_const(lab)?;
    let ms = corpus::metrics(lab);
    let find = |n: &str| ms.iter().find(|(k, _)| k == n).map(|(_, m)| m.clone()).expect("corpus metric");
    let g0 = find("bump-mixed");
    let pairs = [("scaling", g0.scaled(0.5_f64.exp())), ("generic", find("odd-mixed"))];
    let opts = GeodesicOptions { steps: suite.scale.steps, tol: tol.geodesic, ..Default::default() };
    let eps = [0.1, 0.05, 0.025];
    let mut out = Vec::new();
    for (name, g1) in pairs {
        let (mut bounds, mut c2, mut res) = (Vec::new(), Vec::new(), Vec::new());
        for &e in &eps {
            let sol = solve_epsilon_geodesic(lab, &g0, &g1, e, &opts)?;
            out.push(Measure::below(format!("{name} eps={e} residual/eps"), sol.residual() / e, tol.geodesic));
            if name == "scaling" {
                out.push(Measure::new(format!("{name} eps={e} deviation from linear / eps"), sol.deviation_from_linear() / e, Relation::AtMost, 10.0));
            }
            bounds.push(sol.endpoint_bound);
            if sol.converged {
                let audit = convexity_audit(lab, &sol, lambda)?;
                out.push(Measure::info(format!("{name} eps={e} min d2L/dt2"), audit.min_second_derivative));
                out.push(Measure::info(format!("{name} eps={e} lower-bound integrand min"), audit.lower_bound_min));
                c2.push(audit.c2);
                res.push(geodesic_residual(lab, &sol.path(lab)?)?.sup);
            }
        }
        let hi = bounds.iter().copied().fold(0.0, f64::max);
        let lo = bounds.iter().copied().fold(f64::INFINITY, f64::min);
        out.push(Measure::info(format!("{name} endpoint bound C"), hi));
        out.push(Measure::new(format!("{name} endpoint bound spread"), hi / lo, Relation::AtMost, tol.c2_factor));
        let stable = c2.len() == eps.len() && c2_stable(&c2, 1e-8);
        out.push(Measure::new(format!("{name} C2 stable within factor 2"), stable as u8 as f64, Relation::AtLeast, 1.0));
        out.push(Measure::info(format!("{name} fitted C2"), c2.iter().copied().fold(0.0, f64::max)));
        for w in res.windows(2) {
            out.push(Measure::info(format!("{name} geodesic residual ratio on halving eps"), w[1] / w[0]));
        }
    }
    // The Einstein reference minimizes L(·, H) up to the smallest ε.
    let eps_min = eps.iter().copied().fold(f64::INFINITY, f64::min);
    let h = log_jets(lab, &find("reference"))?;
    let bend = lab.expr_jets(&corpus::bend(lab));
    let l0 = l_between(lab, &h, &h, Family::Linear, &bend, suite.scale.steps, lambda)?;
    for (n, m) in &ms {
        let l1 = l_between(lab, &log_jets(lab, m)?, &h, Family::Linear, &bend, suite.scale.steps, lambda)?;
        out.push(Measure::new(format!("L({n}, H) - L(reference, H) + 10 eps_min"), l1 - l0 + 10.0 * eps_min, Relation::AtLeast, 0.0));
    }
    Ok(out)
}

fn segre(suite: &Suite, tol: &Tolerances) -> Result<Vec<Measure>> {
    let mut out = Vec::new();
    for lab in suite.labs() {
        let ln = lab_name(lab);
        let deg = lab.bundle.degree as f64;
        let reference = FinslerMetric::hermitian(corpus::base_reference(lab));
        let perturbed = FinslerMetric {
            reference: corpus::base_reference(lab),
            potential: Potential::Analytic(0.1 * corpus::unitary_bump(lab)),
        };
        let m0 = segre_mass(lab, &reference)?;
        let m1 = segre_mass(lab, &perturbed)?;
        out.push(Measure::below(format!("{ln} |mass + degree|"), (m0 + deg).abs(), tol.segre));
        out.push(Measure::below(format!("{ln} perturbation shift"), (m1 - m0).abs(), tol.segre));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measures_compare_as_declared() {
        assert!(Measure::below("a", 0.5, 1.0).passed);
        assert!(!Measure::below("a", 1.0, 1.0).passed);
        assert!(Measure::new("a", 1.0, Relation::AtMost, 1.0).passed);
        assert!(!Measure::new("a", 0.5, Relation::AtLeast, 1.0).passed);
        assert!(!Measure::below("a", f64::NAN, 1.0).passed);
        assert!(Measure::info("a", f64::NAN).passed);
    }

    #[test]
    fn default_tolerances_are_valid_and_checks_are_numbered() {
        Tolerances::default().validate().unwrap();
        let bad = Tolerances { segre: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        for (i, c) in CHECKS.iter().enumerate() {
            assert_eq!(c.id, i + 1);
        }
    }
}
