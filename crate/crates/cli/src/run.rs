//! Command execution and artifact emission.

use finsler_lab::checks::{run_check_reported, Suite, CHECKS};
use finsler_lab::config::{Command, RunConfig};
use finsler_lab::corpus;
use finsler_lab::error::Error;
use finsler_lab::finsler::{log_jets, FinslerMetric};
use finsler_lab::flow::{c2_stable, convexity_audit, run_gradient_flow, solve_epsilon_geodesic, FlowOptions, GeodesicOptions};
use finsler_lab::functionals::{donaldson_m, l_between, lambda_const};
use finsler_lab::lab::Lab;
use finsler_lab::path::MetricPath;
use finsler_lab::variation::{energy_first_variation, l_first_variation, l_second_variation, VariationReport};
use serde_json::{json, Value};
use std::path::Path;

pub enum RunError {
    /// The configuration is well-formed JSON but cannot be realized.
    Config(String),
    /// A computation failed.
    Numeric(String),
}

fn setup(e: Error) -> RunError {
    RunError::Config(e.to_string())
}

fn numeric(e: Error) -> RunError {
    RunError::Numeric(e.to_string())
}

pub struct Outcome {
    pub passed: bool,
    pub lines: Vec<String>,
}

/// Floats in full precision scientific notation.
fn f(x: f64) -> String {
    format!("{x:.17e}")
}

struct Csv {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn new(header: &[&'static str]) -> Self {
        Csv { header: header.to_vec(), rows: Vec::new() }
    }

    fn row(&mut self, r: Vec<String>) {
        self.rows.push(r);
    }

    fn write(&self, path: &Path) -> Result<(), RunError> {
        let io = |e: csv::Error| RunError::Numeric(format!("writing {}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| RunError::Numeric(e.to_string()))
    }
}

/// A gated scalar of the summary.
fn gate(label: &str, value: f64, limit: f64, passed: bool) -> Value {
    json!({"label": label, "value": value, "limit": limit, "passed": passed})
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<Outcome, RunError> {
    std::fs::create_dir_all(out).map_err(|e| RunError::Config(format!("cannot create {}: {e}", out.display())))?;
    let (body, traces, lines) = match &cfg.command {
        Command::Validate { .. } => validate(cfg)?,
        _ => {
            let lab = cfg.lab().map_err(setup)?;
            match &cfg.command {
                Command::Functional { .. } => functional(cfg, &lab)?,
                Command::Flow { .. } => flow(cfg, &lab)?,
                Command::Geodesic { .. } => geodesic(cfg, &lab)?,
                _ => variation(cfg, &lab)?,
            }
        }
    };
    let passed = body["gates"].as_array().is_none_or(|g| g.iter().all(|x| x["passed"] == json!(true)))
        && body["passed"] != json!(false);
    let summary = json!({
        "command": cfg.command.name(),
        "seed": cfg.seed,
        "config": cfg,
        "passed": passed,
        "result": body,
    });
    let text = serde_json::to_string_pretty(&summary).map_err(|e| RunError::Numeric(e.to_string()))?;
    std::fs::write(out.join("summary.json"), text + "\n")
        .map_err(|e| RunError::Numeric(format!("writing summary: {e}")))?;
    for (name, csv) in traces {
        csv.write(&out.join(format!("trace_{name}.csv")))?;
    }
    Ok(Outcome { passed, lines })
}

type Parts = (Value, Vec<(&'static str, Csv)>, Vec<String>);

fn validate(cfg: &RunConfig) -> Result<Parts, RunError> {
    let Command::Validate { scale, checks } = &cfg.command else { unreachable!() };
    let suite = Suite::new(scale.clone(), cfg.seed).map_err(setup)?;
    let ids: Vec<usize> = if checks.is_empty() { CHECKS.iter().map(|c| c.id).collect() } else { checks.clone() };
    let mut csv = Csv::new(&["check", "name", "label", "value", "limit", "relation", "passed"]);
    let mut lines = Vec::new();
    let mut results = Vec::new();
    for id in ids {
        let r = run_check_reported(id, &suite, &cfg.tolerances);
        lines.push(r.line());
        for m in &r.measures {
            let rel = serde_json::to_value(m.relation).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            csv.row(vec![r.id.to_string(), r.name.clone(), m.label.clone(), f(m.value), f(m.limit), rel, m.passed.to_string()]);
        }
        results.push(r);
    }
    let passed = results.iter().all(|r| r.passed);
    Ok((json!({"passed": passed, "checks": results}), vec![("checks", csv)], lines))
}

fn metric(cfg: &RunConfig, lab: &Lab, name: &str) -> Result<FinslerMetric, RunError> {
    cfg.metric(lab, name).map_err(setup)
}

fn functional(cfg: &RunConfig, lab: &Lab) -> Result<Parts, RunError> {
    let Command::Functional { g, h, steps, families } = &cfg.command else { unreachable!() };
    let tol = &cfg.tolerances;
    let (gm, hm) = (metric(cfg, lab, g)?, metric(cfg, lab, h)?);
    let lambda = lambda_const(lab).map_err(numeric)?;
    let (gj, hj) = (log_jets(lab, &gm).map_err(numeric)?, log_jets(lab, &hm).map_err(numeric)?);
    let bend = lab.expr_jets(&corpus::bend(lab));
    let mut csv = Csv::new(&["family", "l_value"]);
    let mut values = Vec::new();
    for fam in families {
        let l = l_between(lab, &gj, &hj, *fam, &bend, *steps, lambda).map_err(numeric)?;
        csv.row(vec![serde_json::to_value(fam).unwrap().as_str().unwrap_or_default().to_string(), f(l)]);
        values.push((*fam, l));
    }
    // M is defined only for Hermitian pairs.
    let m = donaldson_m(lab, &gm, &hm, lambda).ok();
    let mut gates = Vec::new();
    if let Some(&(_, l0)) = values.first() {
        let spread = values.iter().map(|(_, l)| (l - l0).abs()).fold(0.0, f64::max);
        gates.push(gate("family spread", spread, tol.path_independence, spread < tol.path_independence));
        if let Some(m) = m {
            let d = (l0 - m).abs();
            gates.push(gate("|L - M|", d, tol.l_equals_m, d < tol.l_equals_m));
        }
    }
    let mut lines: Vec<String> = values.iter().map(|(fam, l)| format!("L[{fam:?}] = {l:.12e}")).collect();
    if let Some(m) = m {
        lines.push(format!("M = {m:.12e}"));
    }
    let body = json!({
        "lambda": lambda,
        "l": values.iter().map(|(fam, l)| json!({"family": fam, "value": l})).collect::<Vec<_>>(),
        "m": m,
        "gates": gates,
    });
    Ok((body, vec![("functional", csv)], lines))
}

fn flow(cfg: &RunConfig, lab: &Lab) -> Result<Parts, RunError> {
    let Command::Flow { metric: name, dt, cfl, max_steps, l_every, path_steps } = &cfg.command else { unreachable!() };
    let tol = &cfg.tolerances;
    let g0 = metric(cfg, lab, name)?;
    let lambda = lambda_const(lab).map_err(numeric)?;
    let opts = FlowOptions {
        dt: *dt,
        cfl: *cfl,
        max_steps: *max_steps,
        tol: tol.flow_deviation,
        l_every: *l_every,
        path_steps: *path_steps,
    };
    let trace = run_gradient_flow(lab, &g0, lambda, &opts).map_err(|e| match e {
        Error::Invalid(_) => setup(e),
        e => numeric(e),
    })?;
    let mut csv = Csv::new(&["step", "sup_dev", "l_value", "dt"]);
    for s in &trace.steps {
        csv.row(vec![s.step.to_string(), f(s.sup_dev), s.l_value.map(f).unwrap_or_default(), f(s.dt)]);
    }
    let slack = tol.l_slack_per_step * (*l_every).max(1) as f64;
    let dev = trace.final_deviation();
    let gates = vec![
        gate("final sup|tr Psi - lambda|", dev, tol.flow_deviation, trace.converged),
        gate("max L increase", trace.max_l_increase(), slack, trace.max_l_increase() <= slack),
        gate("deviation monotone", trace.deviation_monotone(0.0) as u8 as f64, 1.0, trace.deviation_monotone(0.0)),
    ];
    let lines = vec![format!(
        "flow: {} steps, final deviation {dev:.3e}, converged {}",
        trace.steps.len() - 1,
        trace.converged
    )];
    let body = json!({
        "lambda": lambda,
        "steps": trace.steps.len() - 1,
        "converged": trace.converged,
        "final_deviation": dev,
        "options": opts,
        "gates": gates,
    });
    Ok((body, vec![("flow", csv)], lines))
}

fn geodesic(cfg: &RunConfig, lab: &Lab) -> Result<Parts, RunError> {
    let Command::Geodesic { from, to, epsilons, steps, max_iters } = &cfg.command else { unreachable!() };
    let tol = &cfg.tolerances;
    let (g0, g1) = (metric(cfg, lab, from)?, metric(cfg, lab, to)?);
    let lambda = lambda_const(lab).map_err(numeric)?;
    let opts = GeodesicOptions { steps: *steps, max_iters: *max_iters, tol: tol.geodesic };
    let mut csv = Csv::new(&["epsilon", "iter", "residual", "damping", "bound"]);
    let mut runs = Vec::new();
    let mut gates = Vec::new();
    let mut lines = Vec::new();
    let (mut bounds, mut c2s) = (Vec::new(), Vec::new());
    for &eps in epsilons {
        let sol = solve_epsilon_geodesic(lab, &g0, &g1, eps, &opts).map_err(|e| match e {
            Error::Invalid(_) => setup(e),
            e => numeric(e),
        })?;
        for it in &sol.trace {
            csv.row(vec![f(eps), it.iter.to_string(), f(it.residual), f(it.damping), f(it.bound)]);
        }
        let ratio = sol.residual() / eps;
        gates.push(gate(&format!("eps={eps} residual/eps"), ratio, tol.geodesic, sol.converged && ratio < tol.geodesic));
        let audit = if sol.converged { Some(convexity_audit(lab, &sol, lambda).map_err(numeric)?) } else { None };
        if let Some(a) = &audit {
            c2s.push(a.c2);
        }
        bounds.push(sol.endpoint_bound);
        lines.push(format!(
            "eps {eps:.3e}: {} iterations, residual/eps {ratio:.3e}, converged {}, stagnated {}",
            sol.trace.len(),
            sol.converged,
            sol.stagnated
        ));
        runs.push(json!({
            "epsilon": eps,
            "converged": sol.converged,
            "stagnated": sol.stagnated,
            "iterations": sol.trace.len(),
            "residual": sol.residual(),
            "endpoint_bound": sol.endpoint_bound,
            "deviation_from_linear": sol.deviation_from_linear(),
            "c2": audit.as_ref().map(|a| a.c2),
            "min_second_derivative": audit.as_ref().map(|a| a.min_second_derivative),
            "lower_bound_min": audit.as_ref().map(|a| a.lower_bound_min),
        }));
    }
    if bounds.len() > 1 {
        let hi = bounds.iter().copied().fold(0.0, f64::max);
        let lo = bounds.iter().copied().fold(f64::INFINITY, f64::min);
        gates.push(gate("endpoint bound spread", hi / lo, tol.c2_factor, hi / lo <= tol.c2_factor));
        let stable = c2s.len() == bounds.len() && c2_stable(&c2s, 1e-8);
        gates.push(gate("C2 stable", stable as u8 as f64, 1.0, stable));
    }
    Ok((json!({"lambda": lambda, "runs": runs, "gates": gates}), vec![("geodesic", csv)], lines))
}

fn variation(cfg: &RunConfig, lab: &Lab) -> Result<Parts, RunError> {
    let Command::VariationCheck { g, h, steps, directions } = &cfg.command else { unreachable!() };
    let tol = &cfg.tolerances;
    let (gm, hm) = (metric(cfg, lab, g)?, metric(cfg, lab, h)?);
    let lambda = lambda_const(lab).map_err(numeric)?;
    let (gj, hj) = (log_jets(lab, &gm).map_err(numeric)?, log_jets(lab, &hm).map_err(numeric)?);
    let path = MetricPath::linear(hj.clone(), gj.clone(), *steps).map_err(setup)?;
    let mut dirs = corpus::directions(lab);
    if *directions > 0 {
        dirs.truncate(*directions);
    }
    let mut csv = Csv::new(&["direction", "tag", "formula", "fd", "relative_error", "step"]);
    let mut worst = [0.0_f64; 3];
    let mut push = |csv: &mut Csv, name: &str, r: &VariationReport, slot: usize| {
        let tag = serde_json::to_value(r.tag).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        csv.row(vec![name.to_string(), tag, f(r.formula_value), f(r.fd_value), f(r.relative_error), f(r.step)]);
        worst[slot] = worst[slot].max(r.relative_error);
    };
    for (name, d) in &dirs {
        let dj = lab.expr_jets(d);
        push(&mut csv, name, &energy_first_variation(lab, &path, &dj).map_err(numeric)?, 0);
        push(&mut csv, name, &l_first_variation(lab, &gj, &hj, &dj, *steps, lambda).map_err(numeric)?, 1);
        push(&mut csv, name, &l_second_variation(lab, &gj, &hj, &dj, *steps, lambda).map_err(numeric)?.0, 2);
    }
    let gates = vec![
        gate("energy first variation", worst[0], tol.variation_first, worst[0] < tol.variation_first),
        gate("L first variation", worst[1], tol.variation_first, worst[1] < tol.variation_first),
        gate("L second variation", worst[2], tol.variation_second, worst[2] < tol.variation_second),
    ];
    let lines = vec![format!(
        "{} directions: worst relative errors {:.3e} / {:.3e} / {:.3e}",
        dirs.len(),
        worst[0],
        worst[1],
        worst[2]
    )];
    Ok((json!({"lambda": lambda, "directions": dirs.len(), "gates": gates}), vec![("variation", csv)], lines))
}
