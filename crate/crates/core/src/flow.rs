//! The Finsler-Einstein gradient flow and the ε-regularized geodesic
//! equation, both on grid potentials over the torus.
//!
//! The flow is explicit Euler on `u ↦ u - dt (tr_ωΨ - λ)`. The geodesic
//! equation is local in the base, so it is relaxed independently at every
//! sample by defect correction: the fourth-order residual in `t` drives a
//! second-order tridiagonal solve.

use crate::error::{Error, Result};
use crate::exec;
use crate::finsler::{log_jets, reference_jets, FinslerMetric, LogCurvature, Potential};
use crate::functionals::{l_between, Family};
use crate::jet::FieldJet;
use crate::lab::{GridPotential, Lab};
use crate::path::MetricPath;
use crate::quad::TimeGrid;
use crate::variation::{einstein_defect, second_variation_formula};
use crate::C64;
use serde::Serialize;

/// Grid potential of a metric on the torus; analytic potentials are sampled.
pub fn grid_potential(lab: &Lab, m: &FinslerMetric) -> Result<GridPotential> {
    if lab.torus_ops.is_none() {
        return Err(Error::Invalid("flows and geodesics run on the torus only".into()));
    }
    Ok(match &m.potential {
        Potential::Analytic(u) => {
            let vals = lab.expr_values(u);
            let nq = lab.nq();
            let fiber_constant = vals.chunks(nq).all(|c| c.iter().all(|v| (v - c[0]).abs() <= 1e-14 * (1.0 + c[0].abs())));
            if fiber_constant {
                GridPotential { base: vals.iter().step_by(nq).copied().collect(), full: None }
            } else {
                GridPotential { base: vec![0.0; lab.nb()], full: Some(vals) }
            }
        }
        Potential::Grid(g) => g.clone(),
    })
}

fn jets_of(lab: &Lab, reference: &[FieldJet], u: &GridPotential) -> Result<Vec<FieldJet>> {
    let uj = lab.grid_jets(u)?;
    Ok(reference.iter().zip(&uj).map(|(a, b)| *a + *b).collect())
}

/// Smallest vertical coefficient; `None` if any jet is not finite.
fn min_vertical(jets: &[FieldJet]) -> Option<f64> {
    let mut lo = f64::INFINITY;
    for j in jets {
        if !(j.val.is_finite() && j.wwb.is_finite() && j.zzb.is_finite()) {
            return None;
        }
        lo = lo.min(j.wwb);
    }
    Some(lo)
}

/// Grid spacing of the torus in `z`.
pub fn torus_spacing(lab: &Lab) -> f64 {
    lab.base.tau.im.min(1.0) / lab.base.resolution as f64
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowOptions {
    /// Time step; `None` picks `cfl · h²`.
    pub dt: Option<f64>,
    pub cfl: f64,
    pub max_steps: usize,
    pub tol: f64,
    /// Evaluate `L(G_k, G_0)` every this many steps (0 disables it).
    pub l_every: usize,
    /// Time steps of the paths used for `L`.
    pub path_steps: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { dt: None, cfl: 0.05, max_steps: 10_000, tol: 1e-6, l_every: 100, path_steps: 32 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowStep {
    pub step: usize,
    pub sup_dev: f64,
    /// `L(G_step, G_0)`, when evaluated at this step.
    pub l_value: Option<f64>,
    pub dt: f64,
    /// `dt / h²`.
    pub cfl: f64,
}

#[derive(Clone, Debug)]
pub struct FlowTrace {
    pub lambda: f64,
    pub steps: Vec<FlowStep>,
    pub converged: bool,
    pub final_metric: FinslerMetric,
}

impl FlowTrace {
    pub fn final_deviation(&self) -> f64 {
        self.steps.last().map_or(f64::NAN, |s| s.sup_dev)
    }

    /// Largest increase between consecutive recorded values of `L`.
    pub fn max_l_increase(&self) -> f64 {
        let ls: Vec<f64> = self.steps.iter().filter_map(|s| s.l_value).collect();
        ls.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Whether the recorded deviations never increase.
    pub fn deviation_monotone(&self, slack: f64) -> bool {
        self.steps.windows(2).all(|w| w[1].sup_dev <= w[0].sup_dev + slack)
    }
}

/// Applies `f` to every recorded state of the flow; used for oracles.
pub type Observer<'a> = dyn FnMut(usize, &GridPotential) + 'a;

/// Explicit Euler on `∂_t log G = -(tr_ωΨ - λ)`.
pub fn run_gradient_flow(lab: &Lab, g0: &FinslerMetric, lambda: f64, opts: &FlowOptions) -> Result<FlowTrace> {
    run_gradient_flow_observed(lab, g0, lambda, opts, &mut |_, _| {})
}

pub fn run_gradient_flow_observed(
    lab: &Lab,
    g0: &FinslerMetric,
    lambda: f64,
    opts: &FlowOptions,
    observe: &mut Observer,
) -> Result<FlowTrace> {
    let h = torus_spacing(lab);
    let dt = opts.dt.unwrap_or(opts.cfl * h * h);
    if !(dt > 0.0) || !(opts.tol > 0.0) {
        return Err(Error::Invalid("flow needs dt > 0 and tol > 0".into()));
    }
    let mut u = grid_potential(lab, g0)?;
    let reference = reference_jets(lab, &g0.reference);
    let start = jets_of(lab, &reference, &u)?;
    let nq = lab.nq();
    // Defect of the reference alone; a fiber-constant potential only adds
    // `-u_zz̄ / g` to it and leaves the vertical coefficient unchanged.
    let reference_defect = einstein_defect(lab, &reference, lambda);
    let ops = lab.torus_ops.as_ref().expect("grid_potential checked the torus");
    let mut steps = Vec::new();
    let mut converged = false;
    for step in 0..=opts.max_steps {
        let mut jets = None;
        let defect = if u.full.is_none() && step > 0 {
            let lap = ops.ddbar_real(&u.base);
            exec::map_range(lab.len(), |s| reference_defect[s] - lap[s / nq] / lab.point(s).g)
        } else {
            let j = if step == 0 { start.clone() } else { jets_of(lab, &reference, &u)? };
            match min_vertical(&j) {
                None => return Err(Error::NonFinite(format!("flow state at step {step}"))),
                Some(m) if m <= 0.0 => return Err(Error::F4Lost { step, min: m }),
                _ => {}
            }
            let d = einstein_defect(lab, &j, lambda);
            jets = Some(j);
            d
        };
        if defect.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite(format!("curvature at step {step}")));
        }
        let sup_dev = defect.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
        let done = sup_dev < opts.tol;
        let want_l = opts.l_every > 0 && (step % opts.l_every == 0 || done || step == opts.max_steps);
        let l_value = if want_l {
            let j = match jets {
                Some(j) => j,
                None => jets_of(lab, &reference, &u)?,
            };
            Some(l_between(lab, &j, &start, Family::Linear, &[], opts.path_steps, lambda)?)
        } else {
            None
        };
        steps.push(FlowStep { step, sup_dev, l_value, dt, cfl: dt / (h * h) });
        observe(step, &u);
        if done {
            converged = true;
            break;
        }
        if step == opts.max_steps {
            break;
        }
        // A fiber-constant defect keeps a fiber-constant potential so.
        let fiber_constant = u.full.is_none()
            && (0..lab.nb()).all(|p| {
                let c = &defect[p * nq..(p + 1) * nq];
                c.iter().all(|d| (d - c[0]).abs() <= 1e-13 * (1.0 + c[0].abs()))
            });
        if fiber_constant {
            for (p, b) in u.base.iter_mut().enumerate() {
                *b -= dt * defect[p * nq];
            }
        } else {
            let full = u.full.get_or_insert_with(|| vec![0.0; lab.len()]);
            for (f, d) in full.iter_mut().zip(&defect) {
                *f -= dt * d;
            }
        }
    }
    let final_metric = FinslerMetric { reference: g0.reference.clone(), potential: Potential::Grid(u) };
    Ok(FlowTrace { lambda, steps, converged, final_metric })
}

#[derive(Clone, Debug, Serialize)]
pub struct GeodesicOptions {
    pub steps: usize,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        GeodesicOptions { steps: 32, max_iters: 200, tol: 1e-3 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GeodesicIteration {
    pub iter: usize,
    pub residual: f64,
    pub damping: f64,
    /// `sup |log(G_t / G_0)|` of the current iterate.
    pub bound: f64,
}

#[derive(Clone, Debug)]
pub struct GeodesicSolution {
    pub epsilon: f64,
    pub grid: TimeGrid,
    /// Potential `log G_t - log h` per grid time and sample.
    pub potentials: Vec<Vec<f64>>,
    pub trace: Vec<GeodesicIteration>,
    pub converged: bool,
    pub stagnated: bool,
    /// `sup_t |log(G_{t,ε} / G_0)|`.
    pub endpoint_bound: f64,
    reference: Vec<FieldJet>,
}

impl GeodesicSolution {
    pub fn residual(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |i| i.residual)
    }

    /// `sup |u_t - ((1-t) u_0 + t u_1)|`.
    pub fn deviation_from_linear(&self) -> f64 {
        let (a, b) = (&self.potentials[0], &self.potentials[self.grid.steps]);
        let mut m = 0.0_f64;
        for (k, u) in self.potentials.iter().enumerate() {
            let t = self.grid.t(k);
            for s in 0..u.len() {
                m = m.max((u[s] - (1.0 - t) * a[s] - t * b[s]).abs());
            }
        }
        m
    }

    /// The solution as a metric path of jets of `log G_t`.
    pub fn path(&self, lab: &Lab) -> Result<MetricPath> {
        let slices = self
            .potentials
            .iter()
            .map(|u| jets_of(lab, &self.reference, &GridPotential { base: vec![0.0; lab.nb()], full: Some(u.clone()) }))
            .collect::<Result<Vec<_>>>()?;
        MetricPath::from_slices(slices)
    }
}

/// Fiber data of one slice: `u_w` and the vertical coefficient `C`.
fn slice_fiber(lab: &Lab, reference: &[FieldJet], u: &[f64]) -> (Vec<C64>, Vec<f64>) {
    let nq = lab.nq();
    let per: Vec<(Vec<C64>, Vec<f64>)> = exec::map_range(lab.nb(), |p| {
        let d = lab.fiber_derivatives_real(p, &u[p * nq..(p + 1) * nq]);
        let c = (0..nq).map(|q| reference[p * nq + q].wwb + d.dwdwb[q].re).collect();
        (d.dw, c)
    });
    let mut uw = Vec::with_capacity(lab.len());
    let mut c = Vec::with_capacity(lab.len());
    for (a, b) in per {
        uw.extend(a);
        c.extend(b);
    }
    (uw, c)
}

struct Residual {
    /// `F` at interior grid times, indexed `[k][s]`; rows 0 and T are empty.
    f: Vec<Vec<f64>>,
    /// `C_t / C_0`, same layout.
    ratio: Vec<Vec<f64>>,
    sup: f64,
    min_c: f64,
}

/// `F = (∂_t v - |v_w|²/C_t) C_t/C_0 - ε` at the interior grid times.
fn ma_residual(lab: &Lab, grid: &TimeGrid, reference: &[FieldJet], u: &[Vec<f64>], eps: f64) -> Residual {
    let steps = grid.steps;
    let fib: Vec<(Vec<C64>, Vec<f64>)> = u.iter().map(|uk| slice_fiber(lab, reference, uk)).collect();
    let min_c = fib.iter().flat_map(|f| f.1.iter()).fold(f64::INFINITY, |m, &c| m.min(c));
    let c0 = &fib[0].1;
    let mut f = vec![Vec::new(); steps + 1];
    let mut ratio = vec![Vec::new(); steps + 1];
    let mut sup = 0.0_f64;
    for k in 1..steps {
        let (d1, d2) = (grid.d1(k), grid.d2(k));
        let ck = &fib[k].1;
        let rows: Vec<(f64, f64)> = exec::map_range(lab.len(), |s| {
            let acc: f64 = d2.iter().map(|&(j, w)| w * u[j][s]).sum();
            let vw: C64 = d1.iter().map(|&(j, w)| fib[j].0[s] * w).sum();
            let r = ck[s] / c0[s];
            ((acc - vw.norm_sqr() / ck[s]) * r - eps, r)
        });
        for &(x, _) in &rows {
            sup = sup.max(x.abs());
        }
        let (fk, rk): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
        f[k] = fk;
        ratio[k] = rk;
    }
    if !sup.is_finite() {
        sup = f64::INFINITY;
    }
    Residual { f, ratio, sup, min_c }
}

/// Solves `a_k (δ_{k-1} - 2δ_k + δ_{k+1}) / dt² = -F_k`, `δ_0 = δ_T = 0`.
fn tridiagonal_correction(dt: f64, a: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    for i in 0..n {
        let diag = -2.0 * a[i] / (dt * dt);
        let off = a[i] / (dt * dt);
        let lower = if i > 0 { off } else { 0.0 };
        let den = diag - lower * if i > 0 { cp[i - 1] } else { 0.0 };
        cp[i] = off / den;
        dp[i] = (-rhs[i] - lower * if i > 0 { dp[i - 1] } else { 0.0 }) / den;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = dp[i] - if i + 1 < n { cp[i] * x[i + 1] } else { 0.0 };
    }
    x
}

fn sup_bound(u: &[Vec<f64>]) -> f64 {
    let u0 = &u[0];
    u.iter().flat_map(|uk| uk.iter().zip(u0).map(|(a, b)| (a - b).abs())).fold(0.0, f64::max)
}

/// Relaxes `(∂_t v - ‖∂^V v‖²) det h_t = ε det h_0` between two metrics
/// sharing a reference. Non-convergence is reported, not raised.
pub fn solve_epsilon_geodesic(
    lab: &Lab,
    g0: &FinslerMetric,
    g1: &FinslerMetric,
    eps: f64,
    opts: &GeodesicOptions,
) -> Result<GeodesicSolution> {
    if !(eps > 0.0) || !(opts.tol > 0.0) {
        return Err(Error::Invalid("ε-geodesics need ε > 0 and tol > 0".into()));
    }
    if opts.steps < 8 {
        return Err(Error::Invalid(format!("ε-geodesics need T >= 8, got {}", opts.steps)));
    }
    if format!("{:?}", g0.reference) != format!("{:?}", g1.reference) {
        return Err(Error::Invalid("ε-geodesic endpoints must share a reference".into()));
    }
    let grid = TimeGrid::new(opts.steps);
    let reference = reference_jets(lab, &g0.reference);
    let full = |m: &FinslerMetric| -> Result<Vec<f64>> {
        let g = grid_potential(lab, m)?;
        Ok((0..lab.len()).map(|s| g.value(s, lab.nq())).collect())
    };
    let (a, b) = (full(g0)?, full(g1)?);
    for (m, name) in [(g0, "start"), (g1, "end")] {
        match min_vertical(&log_jets(lab, m)?) {
            Some(c) if c > 0.0 => {}
            Some(c) => return Err(Error::F4Lost { step: 0, min: c }),
            None => return Err(Error::NonFinite(format!("{name} metric"))),
        }
    }
    let mut u: Vec<Vec<f64>> = (0..=opts.steps)
        .map(|k| {
            let t = grid.t(k);
            a.iter().zip(&b).map(|(x, y)| (1.0 - t) * x + t * y).collect()
        })
        .collect();
    let dt = grid.dt();
    let mut res = ma_residual(lab, &grid, &reference, &u, eps);
    let mut theta = 1.0;
    let mut trace = vec![GeodesicIteration { iter: 0, residual: res.sup, damping: theta, bound: sup_bound(&u) }];
    let mut stagnated = false;
    let interior = opts.steps - 1;
    for iter in 1..=opts.max_iters {
        if res.sup < opts.tol * eps {
            break;
        }
        // Corrections per sample along t.
        let delta: Vec<Vec<f64>> = exec::map_range(lab.len(), |s| {
            let coef: Vec<f64> = (1..=interior).map(|k| res.ratio[k][s]).collect();
            let rhs: Vec<f64> = (1..=interior).map(|k| res.f[k][s]).collect();
            tridiagonal_correction(dt, &coef, &rhs)
        });
        loop {
            let trial: Vec<Vec<f64>> = (0..=opts.steps)
                .map(|k| {
                    if k == 0 || k == opts.steps {
                        u[k].clone()
                    } else {
                        u[k].iter().enumerate().map(|(s, x)| x + theta * delta[s][k - 1]).collect()
                    }
                })
                .collect();
            let r = ma_residual(lab, &grid, &reference, &trial, eps);
            if r.min_c > 0.0 && r.sup < res.sup {
                u = trial;
                res = r;
                trace.push(GeodesicIteration { iter, residual: res.sup, damping: theta, bound: sup_bound(&u) });
                theta = (2.0 * theta).min(1.0);
                break;
            }
            theta *= 0.5;
            if theta < 1e-6 {
                stagnated = true;
                break;
            }
        }
        if stagnated {
            break;
        }
    }
    let converged = res.sup < opts.tol * eps;
    let endpoint_bound = sup_bound(&u);
    Ok(GeodesicSolution { epsilon: eps, grid, potentials: u, trace, converged, stagnated, endpoint_bound, reference })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvexityAudit {
    /// `d²L/dt²` at the interior grid times.
    pub second_derivative: Vec<f64>,
    pub min_second_derivative: f64,
    /// `max(0, -min d²L/dt²) / ε`.
    pub c2: f64,
    /// `∫_M ∫_fiber tr_ωΨ_t Ξ_0` per grid time.
    pub lower_bound_integrand: Vec<f64>,
    pub lower_bound_min: f64,
}

/// Second derivative of `L` along a converged ε-geodesic.
pub fn convexity_audit(lab: &Lab, sol: &GeodesicSolution, lambda: f64) -> Result<ConvexityAudit> {
    if !sol.converged {
        return Err(Error::Invalid("convexity audit needs a converged ε-geodesic".into()));
    }
    let path = sol.path(lab)?;
    let nq = lab.nq();
    let xi0: Vec<f64> = exec::map_range(lab.len(), |s| path.start()[s].wwb * lab.node(s).fs);
    let mut second = Vec::new();
    let mut integrand = Vec::new();
    path.sweep(true, |k, jets, v, acc| {
        if k > 0 && k < path.steps() {
            let a: Vec<f64> = acc.unwrap().iter().map(|j| j.val).collect();
            second.push(second_variation_formula(lab, jets, v, &a, lambda).total());
        }
        let per: Vec<f64> = exec::map_range(lab.nb(), |p| {
            let g = lab.base.points[p].g;
            (0..nq)
                .map(|q| {
                    let s = p * nq + q;
                    lab.fiber.nodes[q].weight * LogCurvature::from_jet(&jets[s], g, 1.0).tr_psi * xi0[s]
                })
                .sum()
        });
        integrand.push(lab.base.integrate(&per));
    });
    let min_second_derivative = second.iter().copied().fold(f64::INFINITY, f64::min);
    let lower_bound_min = integrand.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ConvexityAudit {
        c2: (-min_second_derivative).max(0.0) / sol.epsilon,
        second_derivative: second,
        min_second_derivative,
        lower_bound_integrand: integrand,
        lower_bound_min,
    })
}

/// Fitted constants `C₂(ε)` are stable when none exceeds twice another
/// (constants below `floor` count as equal to it).
pub fn c2_stable(c2: &[f64], floor: f64) -> bool {
    let v: Vec<f64> = c2.iter().map(|c| c.max(floor)).collect();
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(0.0, f64::max);
    hi <= 2.0 * lo
}
