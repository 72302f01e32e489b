//! The sampled projectivized bundle: base points times fiber nodes, with
//! chart bookkeeping and jet evaluation of fields on `P(E)`.
//!
//! Sample `s` sits over base point `s / nq` at fiber node `s % nq`. Every
//! field on `P(E)` is written once in the home coordinates `(z, ζ)` of base
//! chart 0 and fiber chart `ζ = v²/v¹`; [`Lab::to_chart`] rewrites it in the
//! coordinates of any other chart pair.
//!
//! On `O(a) ⊕ O(b)` the fiber nodes over a base point are scaled by
//! `ρ = (1+|z|²)^{(b-a)/2}` so that the Fubini-Study reference is exactly
//! the round metric in the scaled node coordinate; fiber weights are
//! unchanged and the density conversion factor absorbs `ρ`.

use crate::error::{Error, Result};
use crate::exec;
use crate::expr::{Expr, Program, Var};
use crate::fiber::{build_fiber_quadrature, FiberChart, FiberDerivatives, FiberNode, FiberQuadrature, FiberSpectral};
use crate::geometry_base::{build_base, build_bundle, BaseKind, BasePoint, BundleKind, HolomorphicBundle, KahlerBase};
use crate::jet::{FieldJet, Jet2};
use crate::spectral::TorusSpectral;
use crate::C64;

pub struct Lab {
    pub base: KahlerBase,
    pub bundle: HolomorphicBundle,
    pub fiber: FiberQuadrature,
    pub fiber_ops: FiberSpectral,
    pub torus_ops: Option<TorusSpectral>,
    /// Fiber node scale `ρ` per base point.
    pub fiber_scale: Vec<f64>,
}

/// Compiled chart versions of one field, indexed `2·base_chart + fiber_chart`.
pub struct ChartPrograms {
    progs: Vec<Program>,
}

impl ChartPrograms {
    pub fn get(&self, base_chart: usize, fc: FiberChart) -> &Program {
        &self.progs[2 * base_chart + fiber_index(fc)]
    }
}

fn fiber_index(fc: FiberChart) -> usize {
    match fc {
        FiberChart::Zeta => 0,
        FiberChart::Eta => 1,
    }
}

impl Lab {
    pub fn new(base: KahlerBase, bundle: HolomorphicBundle, fiber: FiberQuadrature) -> Self {
        let fiber_ops = FiberSpectral::new(&fiber);
        let torus_ops = match base.kind {
            BaseKind::Torus => Some(TorusSpectral::new(base.resolution, base.tau)),
            BaseKind::ProjectiveLine => None,
        };
        let (a, b) = bundle.exponents();
        let fiber_scale = base.points.iter().map(|p| (1.0 + p.z.norm_sqr()).powf(0.5 * (b - a) as f64)).collect();
        Lab { base, bundle, fiber, fiber_ops, torus_ops, fiber_scale }
    }

    pub fn build(kind: BaseKind, n: usize, tau: C64, bundle: BundleKind, m_theta: usize, m_phi: usize) -> Result<Self> {
        let base = build_base(kind, n, tau)?;
        let bundle = build_bundle(bundle, &base)?;
        let fiber = build_fiber_quadrature(m_theta, m_phi)?;
        Ok(Lab::new(base, bundle, fiber))
    }

    /// Flat torus `ℂ/(ℤ + iℤ)` with the trivial bundle.
    pub fn torus(n: usize, m: usize) -> Result<Self> {
        Lab::build(BaseKind::Torus, n, C64::new(0.0, 1.0), BundleKind::TrivialOverTorus, m, m)
    }

    /// Fubini-Study projective line with `O(a) ⊕ O(b)`.
    pub fn sphere(n: usize, m: usize, a: i32, b: i32) -> Result<Self> {
        Lab::build(BaseKind::ProjectiveLine, n, C64::new(0.0, 0.0), BundleKind::SplitOverP1 { a, b }, m, m)
    }

    pub fn nb(&self) -> usize {
        self.base.len()
    }

    pub fn nq(&self) -> usize {
        self.fiber.len()
    }

    pub fn len(&self) -> usize {
        self.nb() * self.nq()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, s: usize) -> &BasePoint {
        &self.base.points[s / self.nq()]
    }

    /// Fiber node of a sample, scaled for its base point.
    pub fn node(&self, s: usize) -> FiberNode {
        let (p, q) = (s / self.nq(), s % self.nq());
        let mut n = self.fiber.nodes[q];
        let rho = self.fiber_scale[p];
        if rho != 1.0 {
            n.zeta *= rho;
            match n.chart {
                FiberChart::Zeta => {
                    n.w *= rho;
                    n.fs *= rho * rho;
                }
                FiberChart::Eta => {
                    n.w /= rho;
                    n.fs /= rho * rho;
                }
            }
        }
        n
    }

    /// Fiber derivatives of a field over base point `p`, in the chart
    /// coordinates of the scaled nodes.
    pub fn fiber_derivatives(&self, p: usize, f: &[C64]) -> FiberDerivatives {
        let d = self.fiber_ops.derivatives(f, &self.fiber);
        self.rescale(p, d)
    }

    pub fn fiber_derivatives_real(&self, p: usize, f: &[f64]) -> FiberDerivatives {
        let d = self.fiber_ops.derivatives_real(f, &self.fiber);
        self.rescale(p, d)
    }

    fn rescale(&self, p: usize, mut d: FiberDerivatives) -> FiberDerivatives {
        let rho = self.fiber_scale[p];
        if rho == 1.0 {
            return d;
        }
        for (q, n) in self.fiber.nodes.iter().enumerate() {
            let c = match n.chart {
                FiberChart::Zeta => 1.0 / rho,
                FiberChart::Eta => rho,
            };
            d.dw[q] *= c;
            d.dwb[q] *= c;
            d.dwdwb[q] *= c * c;
        }
        d
    }

    /// Rewrites a field given in home coordinates in the chart pair
    /// `(base_chart, fc)`. On the second base chart `Z = 1/z` and the fiber
    /// coordinate obeys `ζ⁰ = Z^{a-b} ζ¹`.
    pub fn to_chart(&self, e: &Expr, base_chart: usize, fc: FiberChart) -> Expr {
        let mut out = e.clone();
        if base_chart == 1 {
            let (a, b) = self.bundle.exponents();
            let k = a - b;
            let twist = |x: Expr, zz: Expr| if k == 0 { x } else { zz.powi(k) * x };
            out = out.substitute(&|v| match v {
                Var::Z => 1.0 / Expr::z(),
                Var::Zb => 1.0 / Expr::zb(),
                Var::W => twist(Expr::w(), Expr::z()),
                Var::Wb => twist(Expr::wb(), Expr::zb()),
            });
        }
        if fc == FiberChart::Eta {
            out = out.substitute(&|v| match v {
                Var::W => 1.0 / Expr::w(),
                Var::Wb => 1.0 / Expr::wb(),
                other => Expr::Var(other),
            });
        }
        out
    }

    /// Compiles every chart version of a field. `chart_expr` receives the
    /// chart pair and must return the field in those coordinates.
    pub fn compile_with(&self, chart_expr: impl Fn(usize, FiberChart) -> Expr) -> ChartPrograms {
        let mut progs = Vec::new();
        for bc in 0..2 {
            for fc in [FiberChart::Zeta, FiberChart::Eta] {
                if bc < self.base.charts() {
                    progs.push(chart_expr(bc, fc).compile());
                } else {
                    progs.push(Expr::c(0.0).compile());
                }
            }
        }
        ChartPrograms { progs }
    }

    pub fn compile(&self, e: &Expr) -> ChartPrograms {
        self.compile_with(|bc, fc| self.to_chart(e, bc, fc))
    }

    /// Chart-coordinate arguments `(z, z̄, w, w̄)` at a sample.
    pub fn args(&self, s: usize) -> [C64; 4] {
        let (p, n) = (self.point(s), self.node(s));
        [p.z, p.z.conj(), n.w, n.w.conj()]
    }

    pub fn eval_jets(&self, progs: &ChartPrograms) -> Vec<FieldJet> {
        exec::map_range(self.len(), |s| {
            let (p, n) = (self.point(s), self.node(s));
            let a = self.args(s);
            let vars = [Jet2::var(a[0], Jet2::Z), Jet2::var(a[1], Jet2::ZB), Jet2::var(a[2], Jet2::W), Jet2::var(a[3], Jet2::WB)];
            FieldJet::from_jet2(&progs.get(p.chart, n.chart).eval(&vars))
        })
    }

    pub fn eval_values(&self, progs: &ChartPrograms) -> Vec<f64> {
        exec::map_range(self.len(), |s| {
            let (p, n) = (self.point(s), self.node(s));
            progs.get(p.chart, n.chart).eval(&self.args(s)).re
        })
    }

    /// Jets of a real field on `P(E)` given in home coordinates.
    pub fn expr_jets(&self, e: &Expr) -> Vec<FieldJet> {
        self.eval_jets(&self.compile(e))
    }

    pub fn expr_values(&self, e: &Expr) -> Vec<f64> {
        self.eval_values(&self.compile(e))
    }

    /// Fiber integral against the reference measure, one value per base point.
    pub fn fiber_integrate(&self, density: &[f64]) -> Vec<f64> {
        assert_eq!(density.len(), self.len(), "density must cover every sample");
        // Weights do not depend on the node scale.
        let nq = self.nq();
        density
            .chunks(nq)
            .map(|c| c.iter().zip(&self.fiber.nodes).map(|(d, n)| d * n.weight).sum())
            .collect()
    }

    /// `∫_M f ω` for a base field.
    pub fn base_integrate(&self, f: &[f64]) -> f64 {
        self.base.integrate(f)
    }

    /// Jets of a grid potential. Only the torus carries grid potentials.
    pub fn grid_jets(&self, g: &GridPotential) -> Result<Vec<FieldJet>> {
        let ops = self
            .torus_ops
            .as_ref()
            .ok_or_else(|| Error::Invalid("grid potentials are supported on the torus only".into()))?;
        let (nb, nq) = (self.nb(), self.nq());
        if g.base.len() != nb {
            return Err(Error::Shape { expected: nb, got: g.base.len() });
        }
        let basec: Vec<C64> = g.base.iter().map(|&v| C64::new(v, 0.0)).collect();
        let [bz, _, blap] = ops.derivatives(&basec);
        let mut jets: Vec<FieldJet> = (0..nb * nq)
            .map(|s| {
                let p = s / nq;
                FieldJet { val: g.base[p], z: bz[p], zzb: blap[p].re, ..Default::default() }
            })
            .collect();
        if let Some(full) = &g.full {
            if full.len() != nb * nq {
                return Err(Error::Shape { expected: nb * nq, got: full.len() });
            }
            // Fiber derivatives per base point.
            let fib: Vec<_> = exec::map_range(nb, |p| self.fiber_derivatives_real(p, &full[p * nq..(p + 1) * nq]));
            // Base derivatives per fiber node.
            let cols: Vec<[Vec<C64>; 3]> = exec::map_range(nq, |q| {
                let u: Vec<C64> = (0..nb).map(|p| C64::new(full[p * nq + q], 0.0)).collect();
                let uwb: Vec<C64> = (0..nb).map(|p| fib[p].dwb[q]).collect();
                let [uz, _, ulap] = ops.derivatives(&u);
                [uz, ulap, ops.dz(&uwb)]
            });
            for (s, j) in jets.iter_mut().enumerate() {
                let (p, q) = (s / nq, s % nq);
                j.val += full[s];
                j.z += cols[q][0][p];
                j.zzb += cols[q][1][p].re;
                j.zwb += cols[q][2][p];
                j.w += fib[p].dw[q];
                j.wwb += fib[p].dwdwb[q].re;
            }
        }
        Ok(jets)
    }
}

/// A potential sampled on the torus grid: a fiber-constant part per base
/// point plus an optional fiber-dependent part per sample.
#[derive(Clone, Debug)]
pub struct GridPotential {
    pub base: Vec<f64>,
    pub full: Option<Vec<f64>>,
}

impl GridPotential {
    pub fn value(&self, s: usize, nq: usize) -> f64 {
        self.base[s / nq] + self.full.as_ref().map_or(0.0, |f| f[s])
    }

    /// Samples an analytic field on every sample of the lab.
    pub fn sample(lab: &Lab, e: &Expr) -> Self {
        GridPotential { base: vec![0.0; lab.nb()], full: Some(lab.expr_values(e)) }
    }

    /// Samples a fiber-constant analytic field at the base points.
    pub fn sample_base(lab: &Lab, e: &Expr) -> Self {
        let p = e.compile();
        let base = lab
            .base
            .points
            .iter()
            .map(|pt| p.eval(&[pt.z, pt.z.conj(), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]).re)
            .collect();
        GridPotential { base, full: None }
    }
}
