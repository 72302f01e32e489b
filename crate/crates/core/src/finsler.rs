//! Finsler metrics `G = e^u · h(v, v)` and their pointwise tensors.
//!
//! Two independent routes compute curvature:
//!
//! * the log route reads `A = ∂z∂z̄ log G`, `B = ∂z∂w̄ log G`,
//!   `C = ∂w∂w̄ log G` off a second-order jet at the section, giving
//!   `Ψ = -A + |B|²/C` and the vertical density `ξ = C(1+|w|²)²`;
//! * the tensor route differentiates `G(z, v)` to fourth order with
//!   [`Dual4`] numbers and assembles `G_{ij̄}`, `Γ`, `K_{ij̄}` exactly as the
//!   coordinate formulas prescribe.
//!
//! Agreement between the two is what the decomposition checks measure.

use crate::error::{Error, Result};
use crate::exec;
use crate::expr::{Expr, Program, Var};
use crate::fiber::{FiberChart, FiberNode};
use crate::geometry_base::HolomorphicBundle;
use crate::jet::{Dual4, FieldJet, Jet2, Scalar};
use crate::lab::{ChartPrograms, GridPotential, Lab};
use crate::linalg::{self, M2, V2, ZERO};
use crate::C64;
use std::f64::consts::PI;

/// Hermitian reference metric `h_{ab}(z)` on the bundle, written in base
/// chart 0. The second chart is derived through the transition functions
/// unless given explicitly.
#[derive(Clone, Debug)]
pub struct Reference {
    pub entries: [[Expr; 2]; 2],
    pub entries1: Option<[[Expr; 2]; 2]>,
}

fn diag(d0: Expr, d1: Expr) -> [[Expr; 2]; 2] {
    [[d0, Expr::c(0.0)], [Expr::c(0.0), d1]]
}

impl Reference {
    pub fn new(entries: [[Expr; 2]; 2]) -> Self {
        Reference { entries, entries1: None }
    }

    pub fn flat() -> Self {
        Reference::new(diag(Expr::c(1.0), Expr::c(1.0)))
    }

    pub fn diagonal(d0: Expr, d1: Expr) -> Self {
        Reference::new(diag(d0, d1))
    }

    /// `diag((1+|z|²)^{-a} f₀, (1+|z|²)^{-b} f₁)` on `O(a) ⊕ O(b)`, with both
    /// chart expressions written without cancellation.
    pub fn fubini_study_twisted(a: i32, b: i32, f: [Expr; 2]) -> Self {
        let fs = |k: i32| (1.0 + Expr::z() * Expr::zb()).powi(-k);
        let inv = |e: &Expr| {
            e.substitute(&|v| match v {
                Var::Z => 1.0 / Expr::z(),
                Var::Zb => 1.0 / Expr::zb(),
                other => Expr::Var(other),
            })
        };
        let e0 = diag(fs(a) * f[0].clone(), fs(b) * f[1].clone());
        let e1 = diag(fs(a) * inv(&f[0]), fs(b) * inv(&f[1]));
        Reference { entries: e0, entries1: Some(e1) }
    }

    pub fn fubini_study(a: i32, b: i32) -> Self {
        Reference::fubini_study_twisted(a, b, [Expr::c(1.0), Expr::c(1.0)])
    }

    /// Entries in the coordinate of base chart `chart`.
    pub fn chart_entries(&self, chart: usize, bundle: &HolomorphicBundle) -> [[Expr; 2]; 2] {
        if chart == 0 {
            return self.entries.clone();
        }
        if let Some(e1) = &self.entries1 {
            return e1.clone();
        }
        let (a, b) = bundle.exponents();
        let k = [a, b];
        let mut out = self.entries.clone();
        for (i, row) in out.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                let moved = e.substitute(&|v| match v {
                    Var::Z => 1.0 / Expr::z(),
                    Var::Zb => 1.0 / Expr::zb(),
                    other => Expr::Var(other),
                });
                *e = Expr::z().powi(-k[i]) * Expr::zb().powi(-k[j]) * moved;
            }
        }
        out
    }

    /// `log h(s, s)` at the section `s` of the fiber chart, in chart coordinates.
    pub fn log_norm(&self, chart: usize, fc: FiberChart, bundle: &HolomorphicBundle) -> Expr {
        let p = self.chart_entries(chart, bundle);
        let one = Expr::c(1.0);
        let (s, sb) = match fc {
            FiberChart::Zeta => ([one.clone(), Expr::w()], [one, Expr::wb()]),
            FiberChart::Eta => ([Expr::w(), one.clone()], [Expr::wb(), one]),
        };
        let mut h = Expr::c(0.0);
        for a in 0..2 {
            for b in 0..2 {
                if p[a][b].is_zero() {
                    continue;
                }
                h = h + s[a].clone() * p[a][b].clone() * sb[b].clone();
            }
        }
        h.ln()
    }

    /// Matrix value at a chart coordinate.
    pub fn matrix_at(&self, chart: usize, z: C64, bundle: &HolomorphicBundle) -> M2 {
        let e = self.chart_entries(chart, bundle);
        let args = [z, z.conj(), ZERO, ZERO];
        let mut m = linalg::zeros();
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = e[i][j].eval(&args);
            }
        }
        m
    }

    /// A constant multiple `c·h`.
    pub fn scaled(&self, c: f64) -> Self {
        let sc = |m: &[[Expr; 2]; 2]| {
            let mut out = m.clone();
            for row in out.iter_mut() {
                for e in row.iter_mut() {
                    *e = c * e.clone();
                }
            }
            out
        };
        Reference { entries: sc(&self.entries), entries1: self.entries1.as_ref().map(sc) }
    }
}

#[derive(Clone, Debug)]
pub enum Potential {
    /// Closed form in home coordinates `(z, z̄, ζ, ζ̄)`.
    Analytic(Expr),
    Grid(GridPotential),
}

/// `G(z, v) = e^{u(z,[v])} h_z(v, v)`.
#[derive(Clone, Debug)]
pub struct FinslerMetric {
    pub reference: Reference,
    pub potential: Potential,
}

impl FinslerMetric {
    pub fn hermitian(reference: Reference) -> Self {
        FinslerMetric { reference, potential: Potential::Analytic(Expr::c(0.0)) }
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.potential, Potential::Analytic(_))
    }

    /// `a·G`.
    pub fn scaled(&self, a: f64) -> Self {
        let potential = match &self.potential {
            Potential::Analytic(u) => Potential::Analytic(u.clone() + a.ln()),
            Potential::Grid(g) => {
                Potential::Grid(GridPotential { base: g.base.iter().map(|v| v + a.ln()).collect(), full: g.full.clone() })
            }
        };
        FinslerMetric { reference: self.reference.clone(), potential }
    }

    pub fn analytic_potential(&self) -> Option<&Expr> {
        match &self.potential {
            Potential::Analytic(u) => Some(u),
            Potential::Grid(_) => None,
        }
    }
}

/// Builds a metric after checking that the reference is Hermitian positive
/// definite at every base point and that the potential is finite.
pub fn make_metric(lab: &Lab, reference: Reference, potential: Potential) -> Result<FinslerMetric> {
    for (p, pt) in lab.base.points.iter().enumerate() {
        let m = reference.matrix_at(pt.chart, pt.z, &lab.bundle);
        let scale = linalg::max_abs(&m).max(1e-300);
        if linalg::hermitian_defect(&m) > 1e-10 * scale {
            return Err(Error::NotHermitian(format!("reference at base point {p}")));
        }
        let (lo, _) = linalg::hermitian_eigenvalues(&m);
        if !(lo > 0.0) {
            return Err(Error::NotPositive(p));
        }
    }
    let finite = match &potential {
        Potential::Analytic(u) => lab.expr_values(u).iter().all(|v| v.is_finite()),
        Potential::Grid(g) => {
            g.base.iter().all(|v| v.is_finite()) && g.full.as_ref().is_none_or(|f| f.iter().all(|v| v.is_finite()))
        }
    };
    if !finite {
        return Err(Error::NonFinite("potential".into()));
    }
    Ok(FinslerMetric { reference, potential })
}

/// Jets of `log h(s, s)` at every sample.
pub fn reference_jets(lab: &Lab, r: &Reference) -> Vec<FieldJet> {
    lab.eval_jets(&lab.compile_with(|bc, fc| r.log_norm(bc, fc, &lab.bundle)))
}

/// Jets of `log G` at every sample.
pub fn log_jets(lab: &Lab, m: &FinslerMetric) -> Result<Vec<FieldJet>> {
    match &m.potential {
        Potential::Analytic(u) => Ok(lab.eval_jets(
            &lab.compile_with(|bc, fc| lab.to_chart(u, bc, fc) + m.reference.log_norm(bc, fc, &lab.bundle)),
        )),
        Potential::Grid(g) => {
            let r = reference_jets(lab, &m.reference);
            let u = lab.grid_jets(g)?;
            Ok(r.iter().zip(&u).map(|(a, b)| *a + *b).collect())
        }
    }
}

/// Curvature read off the jet of `log G` at one sample.
#[derive(Clone, Copy, Debug, Default)]
pub struct LogCurvature {
    pub a: f64,
    pub b: C64,
    pub c: f64,
    /// Kobayashi curvature coefficient against `√−1 dz∧dz̄`.
    pub psi: f64,
    /// `tr_ω Ψ`.
    pub tr_psi: f64,
    /// Vertical density of `Ξ` against the reference fiber measure.
    pub xi: f64,
}

impl LogCurvature {
    pub fn from_jet(j: &FieldJet, g: f64, fs: f64) -> Self {
        let (a, b, c) = (j.zzb, j.zwb, j.wwb);
        let psi = -a + b.norm_sqr() / c;
        LogCurvature { a, b, c, psi, tr_psi: psi / g, xi: c * fs }
    }

    /// `ω_FS` coefficient in the chart fiber coordinate.
    pub fn omega_fs(&self) -> f64 {
        self.c / (2.0 * PI)
    }

    /// Horizontal part of `δ/δz`: `δf/δz = f_z - (B/C) f_w`.
    pub fn horizontal_shift(&self) -> C64 {
        self.b / self.c
    }
}

pub fn log_curvatures(lab: &Lab, jets: &[FieldJet]) -> Vec<LogCurvature> {
    exec::map_range(jets.len(), |s| LogCurvature::from_jet(&jets[s], lab.point(s).g, lab.node(s).fs))
}

/// Vertical frame at a sample built from the jet of `log G`:
/// `G_i/G = e_i + (∂_w log G) c_i` and `G_{ij̄} = G (C c_i c̄_j + g_i ḡ_j)`.
#[derive(Clone, Copy, Debug)]
pub struct Frame {
    pub g: f64,
    pub c: V2,
    pub e: V2,
    pub big_c: f64,
}

impl Frame {
    pub fn new(j: &FieldJet, node: &FiberNode) -> Self {
        let c = node.coordinate_gradient();
        let r = node.radial_covector();
        let e = [r[0] + j.w * c[0], r[1] + j.w * c[1]];
        Frame { g: j.val.exp(), c, e, big_c: j.wwb }
    }

    /// `G_{ij̄}`.
    pub fn hessian(&self) -> M2 {
        let mut m = linalg::zeros();
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = (self.c[i] * self.c[j].conj() * self.big_c + self.e[i] * self.e[j].conj()) * self.g;
            }
        }
        m
    }

    /// `G^{ij̄}` laid out as `[i][j]`.
    pub fn inverse(&self) -> M2 {
        let inv = linalg::inv(&self.hessian());
        [[inv[0][0], inv[1][0]], [inv[0][1], inv[1][1]]]
    }

    /// `∂(νG)/∂v^i` and `∂(νG)/∂v̄^j` for a field `ν` on `P(E)` given by its
    /// value and its `w`, `w̄` derivatives.
    pub fn lift(&self, val: C64, dw: C64, dwb: C64) -> (V2, V2) {
        let mut d = [ZERO; 2];
        let mut db = [ZERO; 2];
        for i in 0..2 {
            d[i] = (dw * self.c[i] + val * self.e[i]) * self.g;
            db[i] = (dwb * self.c[i].conj() + val * self.e[i].conj()) * self.g;
        }
        (d, db)
    }
}

/// Fourth-order tensor data of `G` at one sample.
#[derive(Clone, Copy, Debug)]
pub struct TensorSample {
    pub g: f64,
    /// `G_i`.
    pub grad: V2,
    /// `G_{ij̄}`.
    pub hess: M2,
    /// `∂z G_{ij̄}`.
    pub hess_z: M2,
    /// `∂z̄ G_{ij̄}`.
    pub hess_zb: M2,
    /// `∂z∂z̄ G_{ij̄}`.
    pub hess_zzb: M2,
}

impl TensorSample {
    /// `(G_{ij̄})^{-1}` as a matrix.
    pub fn inverse(&self) -> M2 {
        linalg::inv(&self.hess)
    }

    /// `Γ` with `Γ^i_j` stored at `[j][i]`.
    pub fn gamma(&self) -> M2 {
        linalg::mul(&self.hess_z, &self.inverse())
    }

    /// `K_{ij̄} = -G_{ij̄zz̄} + G^{kl̄} G_{il̄z} G_{kj̄z̄}`.
    pub fn kobayashi(&self) -> M2 {
        let q = linalg::mul(&linalg::mul(&self.hess_z, &self.inverse()), &self.hess_zb);
        linalg::sub(&q, &self.hess_zzb)
    }

    /// `K_{ij̄} s^i s̄^j / G`; the imaginary part is a consistency residual.
    pub fn psi(&self, s: &V2) -> C64 {
        linalg::form(&self.kobayashi(), s, s) / self.g
    }

    /// `∂²log G/∂v^i∂v̄^j`.
    pub fn log_hessian(&self) -> M2 {
        let mut l = linalg::zeros();
        for i in 0..2 {
            for j in 0..2 {
                l[i][j] = self.hess[i][j] / self.g - self.grad[i] * self.grad[j].conj() / (self.g * self.g);
            }
        }
        l
    }

    /// `b^i = Γ^i_j s^j`, the coefficient in `δv^i = dv^i + b^i dz`.
    pub fn shift(&self, s: &V2) -> V2 {
        let gm = self.gamma();
        [s[0] * gm[0][0] + s[1] * gm[1][0], s[0] * gm[0][1] + s[1] * gm[1][1]]
    }

    /// `‖∂^V f‖² = G G^{ij̄} f_i f̄_j` for covector components `f_i`.
    pub fn vertical_norm2(&self, f: &V2) -> f64 {
        let inv = self.inverse();
        let mut acc = ZERO;
        for i in 0..2 {
            for j in 0..2 {
                acc += inv[j][i] * f[i] * f[j].conj();
            }
        }
        self.g * acc.re
    }
}

/// Compiled programs for the tensor route of an analytic metric.
pub struct TensorRoute {
    u: ChartPrograms,
    refs: Vec<[[Program; 2]; 2]>,
}

impl TensorRoute {
    pub fn new(lab: &Lab, m: &FinslerMetric) -> Result<Self> {
        let u = m
            .analytic_potential()
            .ok_or_else(|| Error::Invalid("the tensor route needs an analytic potential".into()))?;
        let progs = lab.compile(u);
        let refs = (0..lab.base.charts())
            .map(|c| m.reference.chart_entries(c, &lab.bundle).map(|row| row.map(|e| e.compile())))
            .collect();
        Ok(TensorRoute { u: progs, refs })
    }

    /// Differentiates `G` at sample `s` to fourth order.
    pub fn sample(&self, lab: &Lab, s: usize) -> TensorSample {
        let (pt, node) = (lab.point(s), lab.node(s));
        let z = Dual4::var(pt.z, Dual4::Z);
        let zb = Dual4::var(pt.z.conj(), Dual4::ZB);
        let zero = Dual4::constant(ZERO);
        let refs = &self.refs[pt.chart];
        let mut p = [[zero; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                p[a][b] = refs[a][b].eval(&[z, zb, zero, zero]);
            }
        }
        let prog = self.u.get(pt.chart, node.chart);
        let sec = node.section();
        let mut out = TensorSample {
            g: 0.0,
            grad: [ZERO; 2],
            hess: linalg::zeros(),
            hess_z: linalg::zeros(),
            hess_zb: linalg::zeros(),
            hess_zzb: linalg::zeros(),
        };
        for i in 0..2 {
            for j in 0..2 {
                let v: [Dual4; 2] =
                    [0, 1].map(|a| if a == i { Dual4::var(sec[a], Dual4::W) } else { Dual4::constant(sec[a]) });
                let vb: [Dual4; 2] = [0, 1]
                    .map(|b| if b == j { Dual4::var(sec[b].conj(), Dual4::WB) } else { Dual4::constant(sec[b].conj()) });
                let (w, wb) = match node.chart {
                    FiberChart::Zeta => (v[1] * v[0].recip(), vb[1] * vb[0].recip()),
                    FiberChart::Eta => (v[0] * v[1].recip(), vb[0] * vb[1].recip()),
                };
                let u = prog.eval(&[z, zb, w, wb]);
                let mut h = zero;
                for a in 0..2 {
                    for b in 0..2 {
                        h = h + v[a] * p[a][b] * vb[b];
                    }
                }
                let g = u.exp() * h;
                let (vw, vwb) = (Dual4::W, Dual4::WB);
                out.g = g.0[0].re;
                out.hess[i][j] = g.0[vw | vwb];
                out.hess_z[i][j] = g.0[Dual4::Z | vw | vwb];
                out.hess_zb[i][j] = g.0[Dual4::ZB | vw | vwb];
                out.hess_zzb[i][j] = g.0[15];
                if j == 0 {
                    out.grad[i] = g.0[vw];
                }
            }
        }
        out
    }

    pub fn all(&self, lab: &Lab) -> Vec<TensorSample> {
        exec::map_range(lab.len(), |s| self.sample(lab, s))
    }
}

/// Everything pointwise about `G` at one sample.
#[derive(Clone, Copy, Debug)]
pub struct CurvatureSample {
    pub g_down: M2,
    /// `G^{ij̄}` at `[i][j]`.
    pub g_up: M2,
    /// `Γ^i_{j1}` at `[i][j]`.
    pub gamma: M2,
    pub k: M2,
    pub psi: f64,
    /// Imaginary part of `K_{ij̄} v^i v̄^j / G`.
    pub psi_imag: f64,
    /// `(1/2π) ∂²log G/∂w∂w̄` from the tensor route.
    pub omega_fs: f64,
    /// Coordinate-frame coefficients of `Ξ` on `(dz∧dz̄, dz∧dw̄, dw∧dz̄, dw∧dw̄)`.
    pub xi: [C64; 4],
    /// `Ξ` in the frame `(dz, δw)`: horizontal and vertical coefficients.
    pub xi_delta: [f64; 2],
    pub trace: f64,
}

impl CurvatureSample {
    /// Componentwise residual of `Ξ = -Ψ/2π + ω_FS`.
    pub fn decomposition_residual(&self) -> f64 {
        let h = (self.xi_delta[0] + self.psi / (2.0 * PI)).abs();
        let v = (self.xi_delta[1] - self.omega_fs).abs();
        h.max(v)
    }
}

#[derive(Clone, Debug)]
pub struct CurvaturePackage {
    pub samples: Vec<CurvatureSample>,
}

impl CurvaturePackage {
    pub fn max_decomposition_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.decomposition_residual()).fold(0.0, f64::max)
    }

    pub fn traces(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.trace).collect()
    }
}

/// Full curvature package of an analytic metric.
pub fn curvature_package(lab: &Lab, m: &FinslerMetric) -> Result<CurvaturePackage> {
    let route = TensorRoute::new(lab, m)?;
    let jets = log_jets(lab, m)?;
    let samples = exec::map_range(lab.len(), |s| {
        let t = route.sample(lab, s);
        let node = lab.node(s);
        let sec = node.section();
        let a = node.vertical_vector();
        let lc = LogCurvature::from_jet(&jets[s], lab.point(s).g, node.fs);
        let psi = t.psi(&sec);
        let l = t.log_hessian();
        let omega = linalg::form(&l, &a, &a).re / (2.0 * PI);
        let inv = t.inverse();
        let gm = t.gamma();
        let tp = 1.0 / (2.0 * PI);
        CurvatureSample {
            g_down: t.hess,
            g_up: [[inv[0][0], inv[1][0]], [inv[0][1], inv[1][1]]],
            gamma: [[gm[0][0], gm[1][0]], [gm[0][1], gm[1][1]]],
            k: t.kobayashi(),
            psi: psi.re,
            psi_imag: psi.im,
            omega_fs: omega,
            xi: [C64::new(lc.a * tp, 0.0), lc.b * tp, lc.b.conj() * tp, C64::new(lc.c * tp, 0.0)],
            xi_delta: [(lc.a - lc.b.norm_sqr() / lc.c) * tp, lc.c * tp],
            trace: psi.re / lab.point(s).g,
        }
    });
    Ok(CurvaturePackage { samples })
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    /// Smallest eigenvalue of `G_{ij̄}` over all samples.
    pub min_eigenvalue: f64,
    /// Smallest vertical coefficient `∂w∂w̄ log G` (positive iff F4).
    pub min_vertical: f64,
    /// `max |G_i v^i - G|/G` and `max |G_{ij̄} v^i v̄^j - G|/G`.
    pub max_euler_residual: f64,
    pub max_homogeneity_residual: f64,
    pub f4: bool,
}

/// Positivity and identity scan of a metric.
pub fn validate_metric(lab: &Lab, m: &FinslerMetric) -> ValidationReport {
    let jets = match log_jets(lab, m) {
        Ok(j) => j,
        Err(_) => {
            return ValidationReport {
                min_eigenvalue: f64::NAN,
                min_vertical: f64::NAN,
                max_euler_residual: f64::NAN,
                max_homogeneity_residual: f64::NAN,
                f4: false,
            }
        }
    };
    let stats = exec::map_range(lab.len(), |s| {
        let f = Frame::new(&jets[s], &lab.node(s));
        let (lo, _) = linalg::hermitian_eigenvalues(&f.hessian());
        (lo, jets[s].wwb)
    });
    let min_eigenvalue = stats.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
    let min_vertical = stats.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let (euler, homog) = match TensorRoute::new(lab, m) {
        Ok(route) => {
            let r = exec::map_range(lab.len(), |s| {
                let t = route.sample(lab, s);
                let sec = lab.node(s).section();
                let e1 = (t.grad[0] * sec[0] + t.grad[1] * sec[1] - t.g).norm() / t.g;
                let e2 = (linalg::form(&t.hess, &sec, &sec) - t.g).norm() / t.g;
                (e1.max(e2), homogeneity_residual(lab, m, s))
            });
            (r.iter().map(|x| x.0).fold(0.0, f64::max), r.iter().map(|x| x.1).fold(0.0, f64::max))
        }
        // Grid potentials depend on [v] by storage and the frame identities
        // hold by construction.
        Err(_) => (0.0, 0.0),
    };
    let finite = stats.iter().all(|x| x.0.is_finite() && x.1.is_finite());
    ValidationReport {
        min_eigenvalue,
        min_vertical,
        max_euler_residual: euler,
        max_homogeneity_residual: homog,
        f4: finite && min_eigenvalue > 1e-10 && min_vertical > 1e-10,
    }
}

/// `|G(λs) - |λ|² G(s)| / |λ|² G(s)` evaluated from the vector `v = λs`.
fn homogeneity_residual(lab: &Lab, m: &FinslerMetric, s: usize) -> f64 {
    let u = match m.analytic_potential() {
        Some(u) => u,
        None => return 0.0,
    };
    let (pt, node) = (lab.point(s), lab.node(s));
    let eval_g = |v: V2| {
        let w = match node.chart {
            FiberChart::Zeta => v[1] / v[0],
            FiberChart::Eta => v[0] / v[1],
        };
        let ue = lab.to_chart(u, pt.chart, node.chart);
        let uval = ue.eval(&[pt.z, pt.z.conj(), w, w.conj()]).re;
        let h = linalg::form(&m.reference.matrix_at(pt.chart, pt.z, &lab.bundle), &v, &v).re;
        uval.exp() * h
    };
    let sec = node.section();
    let lam = C64::from_polar(1.7, 0.4);
    let g1 = eval_g(sec);
    let g2 = eval_g([sec[0] * lam, sec[1] * lam]);
    (g2 - lam.norm_sqr() * g1).abs() / (lam.norm_sqr() * g1)
}

/// Vertical and horizontal derivatives of a field `f` on `P(E)`.
#[derive(Clone, Debug)]
pub struct Gradients {
    /// `∂^V f` as its coefficient on `δw`.
    pub vertical: Vec<C64>,
    /// `∂^H f = (δf/δz) dz`.
    pub horizontal: Vec<C64>,
    pub vertical_norm2: Vec<f64>,
    pub horizontal_norm2: Vec<f64>,
}

pub fn finsler_gradients(lab: &Lab, f: &[FieldJet], metric: &[FieldJet]) -> Result<Gradients> {
    if f.len() != lab.len() || metric.len() != lab.len() {
        return Err(Error::Shape { expected: lab.len(), got: f.len().min(metric.len()) });
    }
    let per = exec::map_range(lab.len(), |s| {
        let lc = LogCurvature::from_jet(&metric[s], lab.point(s).g, lab.node(s).fs);
        let dz = f[s].z - lc.horizontal_shift() * f[s].w;
        (f[s].w, dz, f[s].w.norm_sqr() / lc.c, dz.norm_sqr() / lab.point(s).g)
    });
    Ok(Gradients {
        vertical: per.iter().map(|x| x.0).collect(),
        horizontal: per.iter().map(|x| x.1).collect(),
        vertical_norm2: per.iter().map(|x| x.2).collect(),
        horizontal_norm2: per.iter().map(|x| x.3).collect(),
    })
}

/// Chern curvature `K_{ij̄}` of the Hermitian metric `e^{u(z)} h(z)` by
/// matrix calculus in `z` alone: `K = -P_{zz̄} + P_z P^{-1} P_z̄`.
pub fn hermitian_chern(lab: &Lab, r: &Reference, u: &Expr, chart: usize, z: C64) -> (M2, M2) {
    let entries = r.chart_entries(chart, &lab.bundle);
    let ue = lab.to_chart(u, chart, FiberChart::Zeta);
    let zero = Jet2::constant(ZERO);
    let vars = [Jet2::var(z, Jet2::Z), Jet2::var(z.conj(), Jet2::ZB), zero, zero];
    let eu = ue.eval(&vars).exp();
    let mut p = linalg::zeros();
    let mut pz = linalg::zeros();
    let mut pzb = linalg::zeros();
    let mut pzzb = linalg::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let e = eu * entries[i][j].eval(&vars);
            p[i][j] = e.0[Jet2::ONE];
            pz[i][j] = e.0[Jet2::Z];
            pzb[i][j] = e.0[Jet2::ZB];
            pzzb[i][j] = e.0[Jet2::ZZB];
        }
    }
    let k = linalg::sub(&linalg::mul(&linalg::mul(&pz, &linalg::inv(&p)), &pzb), &pzzb);
    (p, k)
}

/// Largest pointwise residuals of the two norm identities for one test
/// function, each side computed by a different route.
#[derive(Clone, Copy, Debug, Default)]
pub struct LemmaResiduals {
    /// `(1/2π)|∂_w f|²` against `G G^{ij̄} f_i f̄_j · ω_FS`.
    pub vertical: f64,
    /// `|δf/δz|²` with the Chern connection against the log-route shift.
    pub horizontal: f64,
}

pub fn lemma_identities(lab: &Lab, m: &FinslerMetric, f: &Expr) -> Result<LemmaResiduals> {
    let route = TensorRoute::new(lab, m)?;
    let jets = log_jets(lab, m)?;
    let fj = lab.expr_jets(f);
    let per = exec::map_range(lab.len(), |s| {
        let t = route.sample(lab, s);
        let node = lab.node(s);
        let (c, a, sec) = (node.coordinate_gradient(), node.vertical_vector(), node.section());
        let fw = fj[s].w;
        let fi = [fw * c[0], fw * c[1]];
        let omega = linalg::form(&t.log_hessian(), &a, &a).re / (2.0 * PI);
        let lhs = fw.norm_sqr() / (2.0 * PI);
        let rhs = t.vertical_norm2(&fi) * omega;
        let b = t.shift(&sec);
        let dz_chern = fj[s].z - (b[0] * fi[0] + b[1] * fi[1]);
        let lc = LogCurvature::from_jet(&jets[s], 1.0, 1.0);
        let dz_log = fj[s].z - lc.horizontal_shift() * fw;
        let (h1, h2) = (dz_chern.norm_sqr(), dz_log.norm_sqr());
        ((lhs - rhs).abs() / (1.0 + lhs.abs()), (h1 - h2).abs() / (1.0 + h1.abs()))
    });
    Ok(LemmaResiduals {
        vertical: per.iter().map(|x| x.0).fold(0.0, f64::max),
        horizontal: per.iter().map(|x| x.1).fold(0.0, f64::max),
    })
}

/// Largest relative difference between the Kobayashi tensor of a Hermitian
/// metric and its matrix Chern curvature.
pub fn hermitian_reduction_residual(lab: &Lab, m: &FinslerMetric) -> Result<f64> {
    let u = m
        .analytic_potential()
        .ok_or_else(|| Error::Invalid("Hermitian reduction needs an analytic potential".into()))?;
    let route = TensorRoute::new(lab, m)?;
    let nq = lab.nq();
    let per = exec::map_range(lab.nb(), |p| {
        let pt = &lab.base.points[p];
        let (_, k) = hermitian_chern(lab, &m.reference, u, pt.chart, pt.z);
        let scale = linalg::max_abs(&k).max(1.0);
        (0..nq)
            .map(|q| linalg::max_abs(&linalg::sub(&route.sample(lab, p * nq + q).kobayashi(), &k)) / scale)
            .fold(0.0, f64::max)
    });
    Ok(per.into_iter().fold(0.0, f64::max))
}
