//! JSON run configuration.
//!
//! A run is one self-describing document: the geometry blocks, a list of
//! named metrics, one command and the tolerances it is judged against.

use crate::checks::{Scale, Tolerances, CHECKS};
use crate::corpus;
use crate::error::{Error, Result};
use crate::expr::{parse, VarContext};
use crate::finsler::{make_metric, FinslerMetric, Potential};
use crate::functionals::Family;
use crate::geometry_base::{BaseKind, BundleKind};
use crate::lab::Lab;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BaseBlock {
    pub kind: BaseKind,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default)]
    pub tau_re: f64,
    #[serde(default = "one")]
    pub tau_im: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FiberBlock {
    pub m_theta: usize,
    pub m_phi: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    /// The identity metric (torus only).
    Flat,
    /// The split Fubini-Study metric (projective line only).
    Fs,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    Zero,
    Bump,
    CustomExpr,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PotentialBlock {
    pub kind: PotentialKind,
    #[serde(default = "one")]
    pub epsilon: f64,
    /// Infix source for `custom-expr`, in `z zb w wb` and the base names.
    #[serde(default)]
    pub expr: Option<String>,
}

/// A named metric: either a corpus entry or `e^{ε u} h` from parts.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MetricBlock {
    pub name: String,
    #[serde(default)]
    pub corpus: Option<String>,
    #[serde(default)]
    pub reference: Option<ReferenceKind>,
    #[serde(default)]
    pub potential: Option<PotentialBlock>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Command {
    /// The acceptance suite; runs on its own labs at `scale`.
    Validate {
        #[serde(default)]
        scale: Scale,
        /// Check ids; empty runs all.
        #[serde(default)]
        checks: Vec<usize>,
    },
    /// `L(G, H)` along every path family, and `M(G, H)` when both are Hermitian.
    Functional {
        g: String,
        h: String,
        #[serde(default = "default_steps")]
        steps: usize,
        #[serde(default = "all_families")]
        families: Vec<Family>,
    },
    Flow {
        metric: String,
        #[serde(default)]
        dt: Option<f64>,
        #[serde(default = "default_cfl")]
        cfl: f64,
        #[serde(default = "default_max_steps")]
        max_steps: usize,
        #[serde(default = "default_l_every")]
        l_every: usize,
        #[serde(default = "default_steps")]
        path_steps: usize,
    },
    Geodesic {
        from: String,
        to: String,
        epsilons: Vec<f64>,
        #[serde(default = "default_steps")]
        steps: usize,
        #[serde(default = "default_max_iters")]
        max_iters: usize,
    },
    /// First and second variations against finite differences over the
    /// direction corpus, along the linear path from `h` to `g`.
    VariationCheck {
        g: String,
        h: String,
        #[serde(default = "default_steps")]
        steps: usize,
        /// Use only the first this many directions (0 means all).
        #[serde(default)]
        directions: usize,
    },
}

fn default_steps() -> usize {
    32
}
fn all_families() -> Vec<Family> {
    Family::ALL.to_vec()
}
fn default_cfl() -> f64 {
    0.05
}
fn default_max_steps() -> usize {
    10_000
}
fn default_l_every() -> usize {
    100
}
fn default_max_iters() -> usize {
    200
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Functional { .. } => "functional",
            Command::Flow { .. } => "flow",
            Command::Geodesic { .. } => "geodesic",
            Command::VariationCheck { .. } => "variation-check",
        }
    }

    fn referenced_metrics(&self) -> Vec<&str> {
        match self {
            Command::Validate { .. } => vec![],
            Command::Functional { g, h, .. } | Command::VariationCheck { g, h, .. } => vec![g, h],
            Command::Flow { metric, .. } => vec![metric],
            Command::Geodesic { from, to, .. } => vec![from, to],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_dir")]
    pub dir: String,
}

fn default_dir() -> String {
    "out".into()
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { dir: default_dir() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub base: Option<BaseBlock>,
    #[serde(default)]
    pub bundle: Option<BundleKind>,
    #[serde(default)]
    pub fiber: Option<FiberBlock>,
    #[serde(default)]
    pub metrics: Vec<MetricBlock>,
    pub command: Command,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    7
}

impl RunConfig {
    pub fn from_json(src: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Structural checks that need no geometry.
    pub fn validate(&self) -> Result<()> {
        self.tolerances.validate()?;
        let need_geometry = !matches!(self.command, Command::Validate { .. });
        if need_geometry && (self.base.is_none() || self.bundle.is_none() || self.fiber.is_none()) {
            return Err(Error::Config(format!("command `{}` needs the base, bundle and fiber blocks", self.command.name())));
        }
        for (i, m) in self.metrics.iter().enumerate() {
            if self.metrics[..i].iter().any(|o| o.name == m.name) {
                return Err(Error::Config(format!("metric `{}` is declared twice", m.name)));
            }
            match (&m.corpus, &m.reference) {
                (Some(_), None) if m.potential.is_none() => {}
                (None, Some(_)) => {
                    if let Some(p) = &m.potential {
                        if !p.epsilon.is_finite() {
                            return Err(Error::Config(format!("metric `{}`: epsilon must be finite", m.name)));
                        }
                        if (p.kind == PotentialKind::CustomExpr) != p.expr.is_some() {
                            return Err(Error::Config(format!(
                                "metric `{}`: `expr` is required for custom-expr and only allowed there",
                                m.name
                            )));
                        }
                    }
                }
                _ => {
                    return Err(Error::Config(format!(
                        "metric `{}` needs either `corpus` or `reference` (with an optional `potential`)",
                        m.name
                    )))
                }
            }
        }
        for name in self.command.referenced_metrics() {
            if !self.metrics.iter().any(|m| m.name == name) {
                return Err(Error::Config(format!("command refers to undeclared metric `{name}`")));
            }
        }
        match &self.command {
            Command::Validate { checks, .. } => {
                if let Some(bad) = checks.iter().find(|c| !CHECKS.iter().any(|k| k.id == **c)) {
                    return Err(Error::Config(format!("no check with id {bad}")));
                }
            }
            Command::Flow { cfl, max_steps, dt, .. } => {
                if !(*cfl > 0.0) || *max_steps == 0 || dt.is_some_and(|d| !(d > 0.0)) {
                    return Err(Error::Config("flow needs cfl > 0, dt > 0 and max_steps > 0".into()));
                }
            }
            Command::Geodesic { epsilons, .. } if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0)) => {
                return Err(Error::Config("geodesic needs a non-empty list of positive epsilons".into()));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn lab(&self) -> Result<Lab> {
        let missing = |b: &str| Error::Config(format!("missing `{b}` block"));
        let base = self.base.as_ref().ok_or_else(|| missing("base"))?;
        let bundle = self.bundle.ok_or_else(|| missing("bundle"))?;
        let fiber = self.fiber.as_ref().ok_or_else(|| missing("fiber"))?;
        Lab::build(base.kind, base.n, C64::new(base.tau_re, base.tau_im), bundle, fiber.m_theta, fiber.m_phi)
    }

    /// Resolves the metric named `name` on `lab`.
    pub fn metric(&self, lab: &Lab, name: &str) -> Result<FinslerMetric> {
        let block = self
            .metrics
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| Error::Config(format!("undeclared metric `{name}`")))?;
        if let Some(c) = &block.corpus {
            return corpus::metrics(lab)
                .into_iter()
                .find(|(n, _)| n == c)
                .map(|(_, m)| m)
                .ok_or_else(|| Error::Config(format!("`{c}` is not a corpus metric on this base")));
        }
        let reference = match (block.reference, lab.base.kind) {
            (Some(ReferenceKind::Flat), BaseKind::Torus) | (Some(ReferenceKind::Fs), BaseKind::ProjectiveLine) => {
                corpus::base_reference(lab)
            }
            (r, k) => return Err(Error::Config(format!("reference {r:?} does not live over {k:?}"))),
        };
        let u = match &block.potential {
            None => crate::expr::Expr::c(0.0),
            Some(p) => match p.kind {
                PotentialKind::Zero => crate::expr::Expr::c(0.0),
                PotentialKind::Bump => p.epsilon * corpus::unitary_bump(lab),
                PotentialKind::CustomExpr => {
                    let ctx = match lab.base.kind {
                        BaseKind::Torus => VarContext::torus(lab.base.tau),
                        BaseKind::ProjectiveLine => VarContext::sphere(),
                    };
                    p.epsilon * parse(p.expr.as_deref().unwrap_or_default(), &ctx)?
                }
            },
        };
        make_metric(lab, reference, Potential::Analytic(u))
    }
}

/// JSON Schema of [`RunConfig`].
pub fn schema() -> Value {
    let num = json!({"type": "number"});
    let uint = json!({"type": "integer", "minimum": 0});
    let metric_ref = json!({"type": "string", "description": "name of a declared metric"});
    let tol_props: serde_json::Map<String, Value> = serde_json::to_value(Tolerances::default())
        .expect("tolerances serialize")
        .as_object()
        .expect("object")
        .iter()
        .map(|(k, v)| (k.clone(), json!({"type": if v.is_u64() { "integer" } else { "number" }, "default": v})))
        .collect();
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "RunConfig",
        "type": "object",
        "additionalProperties": false,
        "required": ["command"],
        "properties": {
            "base": {
                "type": "object",
                "additionalProperties": false,
                "required": ["kind", "N"],
                "properties": {
                    "kind": {"enum": ["torus", "projective-line"]},
                    "N": uint,
                    "tau_re": {"type": "number", "default": 0.0},
                    "tau_im": {"type": "number", "default": 1.0}
                }
            },
            "bundle": {
                "oneOf": [
                    {"type": "object", "additionalProperties": false, "required": ["kind"],
                     "properties": {"kind": {"const": "trivial-over-torus"}}},
                    {"type": "object", "additionalProperties": false, "required": ["kind", "a", "b"],
                     "properties": {"kind": {"const": "split-over-p1"}, "a": {"type": "integer"}, "b": {"type": "integer"}}}
                ]
            },
            "fiber": {
                "type": "object",
                "additionalProperties": false,
                "required": ["m_theta", "m_phi"],
                "properties": {"m_theta": uint, "m_phi": uint}
            },
            "metrics": {
                "type": "array",
                "items": {
                    "type": "object",
                    "additionalProperties": false,
                    "required": ["name"],
                    "properties": {
                        "name": {"type": "string"},
                        "corpus": {"type": "string", "description": "named corpus metric; excludes reference and potential"},
                        "reference": {"enum": ["flat", "fs"]},
                        "potential": {
                            "type": "object",
                            "additionalProperties": false,
                            "required": ["kind"],
                            "properties": {
                                "kind": {"enum": ["zero", "bump", "custom-expr"]},
                                "epsilon": {"type": "number", "default": 1.0},
                                "expr": {"type": "string", "description": "infix in z, zb, w, wb, x, y (torus) or h, x, y (P1)"}
                            }
                        }
                    }
                }
            },
            "command": {
                "oneOf": [
                    {"type": "object", "additionalProperties": false, "required": ["kind"], "properties": {
                        "kind": {"const": "validate"},
                        "scale": {"type": "object", "properties": {"torus_n": uint, "p1_n": uint, "fiber": uint, "steps": uint}},
                        "checks": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": CHECKS.len()}}
                    }},
                    {"type": "object", "additionalProperties": false, "required": ["kind", "g", "h"], "properties": {
                        "kind": {"const": "functional"}, "g": metric_ref, "h": metric_ref,
                        "steps": {"type": "integer", "default": 32},
                        "families": {"type": "array", "items": {"enum": ["linear", "bent", "linear-in-g", "two-segment"]}}
                    }},
                    {"type": "object", "additionalProperties": false, "required": ["kind", "metric"], "properties": {
                        "kind": {"const": "flow"}, "metric": metric_ref, "dt": num,
                        "cfl": {"type": "number", "default": 0.05},
                        "max_steps": {"type": "integer", "default": 10000},
                        "l_every": {"type": "integer", "default": 100},
                        "path_steps": {"type": "integer", "default": 32}
                    }},
                    {"type": "object", "additionalProperties": false, "required": ["kind", "from", "to", "epsilons"], "properties": {
                        "kind": {"const": "geodesic"}, "from": metric_ref, "to": metric_ref,
                        "epsilons": {"type": "array", "items": num, "minItems": 1},
                        "steps": {"type": "integer", "default": 32},
                        "max_iters": {"type": "integer", "default": 200}
                    }},
                    {"type": "object", "additionalProperties": false, "required": ["kind", "g", "h"], "properties": {
                        "kind": {"const": "variation-check"}, "g": metric_ref, "h": metric_ref,
                        "steps": {"type": "integer", "default": 32},
                        "directions": {"type": "integer", "default": 0}
                    }}
                ]
            },
            "output": {"type": "object", "additionalProperties": false, "properties": {"dir": {"type": "string", "default": "out"}}},
            "tolerances": {"type": "object", "additionalProperties": false, "properties": tol_props},
            "seed": {"type": "integer", "minimum": 0, "default": 7}
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FUNCTIONAL: &str = r#"{
        "base": {"kind": "torus", "N": 8},
        "bundle": {"kind": "trivial-over-torus"},
        "fiber": {"m_theta": 8, "m_phi": 8},
        "metrics": [
            {"name": "g", "reference": "flat", "potential": {"kind": "custom-expr", "epsilon": 0.1, "expr": "sin(2*pi*x)"}},
            {"name": "h", "corpus": "reference"}
        ],
        "command": {"kind": "functional", "g": "g", "h": "h"}
    }"#;

    #[test]
    fn functional_config_resolves() {
        let cfg = RunConfig::from_json(FUNCTIONAL).unwrap();
        let lab = cfg.lab().unwrap();
        assert!(cfg.metric(&lab, "g").unwrap().is_analytic());
        assert!(cfg.metric(&lab, "h").is_ok());
        assert!(cfg.metric(&lab, "nope").is_err());
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.output.dir, "out");
    }

    #[test]
    fn structural_errors_are_config_errors() {
        let bad = [
            FUNCTIONAL.replace(r#""h": "h"}"#, r#""h": "missing"}"#),
            FUNCTIONAL.replace(r#""corpus": "reference""#, r#""corpus": "reference", "reference": "flat""#),
            FUNCTIONAL.replace(r#""N": 8"#, r#""N": 8, "extra": 1"#),
            FUNCTIONAL.replace(r#""command""#, r#""tolerances": {"segre": -1.0}, "command""#),
            r#"{"command": {"kind": "flow", "metric": "g"}, "metrics": [{"name": "g", "corpus": "reference"}]}"#.into(),
        ];
        for src in bad {
            assert!(matches!(RunConfig::from_json(&src), Err(Error::Config(_))), "{src}");
        }
    }

    #[test]
    fn wrong_reference_for_base_is_rejected_on_resolution() {
        let src = FUNCTIONAL.replace(r#""reference": "flat""#, r#""reference": "fs""#);
        let cfg = RunConfig::from_json(&src).unwrap();
        assert!(cfg.metric(&cfg.lab().unwrap(), "g").is_err());
    }

    #[test]
    fn validate_needs_no_geometry() {
        let cfg = RunConfig::from_json(r#"{"command": {"kind": "validate", "checks": [1]}}"#).unwrap();
        assert_eq!(cfg.command.name(), "validate");
        assert!(RunConfig::from_json(r#"{"command": {"kind": "validate", "checks": [10]}}"#).is_err());
    }

    #[test]
    fn schema_lists_every_tolerance() {
        let s = schema();
        let tol = &s["properties"]["tolerances"]["properties"];
        assert_eq!(tol.as_object().unwrap().len(), serde_json::to_value(Tolerances::default()).unwrap().as_object().unwrap().len());
    }
}
