//! Quadrature and spectral differentiation on the `P¹` fibers.
//!
//! Nodes are Gauss-Legendre in `x = cos θ` times uniform azimuths on the
//! sphere model, mapped to `ζ = tan(θ/2) e^{iφ}`. Weights integrate the
//! Fubini-Study probability measure `(1/π)(1+|ζ|²)^{-2} dA(ζ)`, so vertical
//! densities are always stored relative to that measure.

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::C64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FiberChart {
    /// `w = ζ = v²/v¹`, section `v = (1, w)`.
    Zeta,
    /// `w = η = v¹/v²`, section `v = (w, 1)`.
    Eta,
}

#[derive(Clone, Copy, Debug)]
pub struct FiberNode {
    pub zeta: C64,
    pub chart: FiberChart,
    /// Coordinate of the node in its chart.
    pub w: C64,
    /// `(1+|w|²)²`: converts a `dw∧dw̄` coefficient into a density against
    /// the reference measure.
    pub fs: f64,
    pub weight: f64,
    pub x: f64,
    pub phi: f64,
}

impl FiberNode {
    /// The homogeneous section `s` with `[s]` equal to this node.
    pub fn section(&self) -> [C64; 2] {
        let one = C64::new(1.0, 0.0);
        match self.chart {
            FiberChart::Zeta => [one, self.w],
            FiberChart::Eta => [self.w, one],
        }
    }

    /// `c_i = ∂w/∂v^i` at the section.
    pub fn coordinate_gradient(&self) -> [C64; 2] {
        let one = C64::new(1.0, 0.0);
        match self.chart {
            FiberChart::Zeta => [-self.w, one],
            FiberChart::Eta => [one, -self.w],
        }
    }

    /// `∂s/∂w`, the vertical tangent vector at the section.
    pub fn vertical_vector(&self) -> [C64; 2] {
        let (zero, one) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        match self.chart {
            FiberChart::Zeta => [zero, one],
            FiberChart::Eta => [one, zero],
        }
    }

    /// The coordinate direction `e` with `∂_i log G = e_i + (∂_w log G) c_i`.
    pub fn radial_covector(&self) -> [C64; 2] {
        let (zero, one) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        match self.chart {
            FiberChart::Zeta => [one, zero],
            FiberChart::Eta => [zero, one],
        }
    }
}

#[derive(Clone, Debug)]
pub struct FiberQuadrature {
    pub m_theta: usize,
    pub m_phi: usize,
    pub nodes: Vec<FiberNode>,
    /// Gauss-Legendre nodes and weights in `x = cos θ`, ascending.
    pub x: Vec<f64>,
    pub xw: Vec<f64>,
}

impl FiberQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node index for polar index `j` and azimuth index `k`.
    pub fn index(&self, j: usize, k: usize) -> usize {
        j * self.m_phi + k
    }
}

pub fn build_fiber_quadrature(m_theta: usize, m_phi: usize) -> Result<FiberQuadrature> {
    if m_theta < 8 {
        return Err(Error::Resolution(m_theta, 8));
    }
    if m_phi < 8 {
        return Err(Error::Resolution(m_phi, 8));
    }
    let (x, xw) = gauss_legendre(m_theta);
    let mut nodes = Vec::with_capacity(m_theta * m_phi);
    let mut total = 0.0;
    for j in 0..m_theta {
        for k in 0..m_phi {
            let phi = 2.0 * PI * k as f64 / m_phi as f64;
            let rho = ((1.0 - x[j]) / (1.0 + x[j])).sqrt();
            let zeta = C64::from_polar(rho, phi);
            let (chart, w) = if x[j] >= 0.0 { (FiberChart::Zeta, zeta) } else { (FiberChart::Eta, 1.0 / zeta) };
            let weight = xw[j] / (2.0 * m_phi as f64);
            total += weight;
            nodes.push(FiberNode { zeta, chart, w, fs: (1.0 + w.norm_sqr()).powi(2), weight, x: x[j], phi });
        }
    }
    for n in nodes.iter_mut() {
        n.weight /= total;
    }
    Ok(FiberQuadrature { m_theta, m_phi, nodes, x, xw })
}

/// Integrates a per-sample density over each fiber. `density` is laid out
/// base-point-major with `quad.len()` values per base point.
pub fn fiber_integrate(density: &[f64], quad: &FiberQuadrature, base_len: usize) -> Result<Vec<f64>> {
    let nq = quad.len();
    if density.len() != base_len * nq {
        return Err(Error::Shape { expected: base_len * nq, got: density.len() });
    }
    Ok(density
        .chunks(nq)
        .map(|c| c.iter().zip(&quad.nodes).map(|(d, n)| d * n.weight).sum())
        .collect())
}

/// Fiber derivatives of a function in the chart coordinate of each node.
#[derive(Clone, Debug)]
pub struct FiberDerivatives {
    pub dw: Vec<C64>,
    pub dwb: Vec<C64>,
    pub dwdwb: Vec<C64>,
}

/// Spectral differentiation on the fiber sphere.
///
/// Each azimuthal mode `m` of a smooth function is `sin^{|m|}θ · p_m(x)` with
/// `p_m` expanded in normalized associated Legendre polynomials; derivatives
/// of `p_m` are exact for the retained band.
pub struct FiberSpectral {
    m_theta: usize,
    m_phi: usize,
    mmax: usize,
    x: Vec<f64>,
    xw: Vec<f64>,
    s: Vec<f64>,
    /// `tables[m][l - m][j]` = (Q, Q', Q'') with `P̄_l^m = s^m Q`.
    tables: Vec<Vec<Vec<(f64, f64, f64)>>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    phase: Vec<C64>,
}

impl FiberSpectral {
    pub fn new(quad: &FiberQuadrature) -> Self {
        let (m_theta, m_phi) = (quad.m_theta, quad.m_phi);
        let mmax = (m_phi - 1) / 2;
        let x = quad.x.clone();
        let s: Vec<f64> = x.iter().map(|t| (1.0 - t * t).sqrt()).collect();
        let mut tables = Vec::with_capacity(mmax + 1);
        for m in 0..=mmax {
            let mut per_l = Vec::new();
            if m < m_theta {
                let cols: Vec<Vec<(f64, f64, f64)>> = x.iter().map(|&t| legendre_column(m, m_theta - 1, t)).collect();
                for li in 0..(m_theta - m) {
                    per_l.push(cols.iter().map(|c| c[li]).collect());
                }
            }
            tables.push(per_l);
        }
        let mut planner = FftPlanner::new();
        let phase = quad.nodes.iter().map(|n| C64::from_polar(1.0, n.phi)).collect();
        FiberSpectral {
            m_theta,
            m_phi,
            mmax,
            xw: quad.xw.clone(),
            x,
            s,
            tables,
            fwd: planner.plan_fft_forward(m_phi),
            inv: planner.plan_fft_inverse(m_phi),
            phase,
        }
    }

    /// `∂_w f`, `∂_w̄ f`, `∂_w∂_w̄ f` at every node of one fiber.
    pub fn derivatives(&self, f: &[C64], quad: &FiberQuadrature) -> FiberDerivatives {
        let (mt, mp) = (self.m_theta, self.m_phi);
        assert_eq!(f.len(), mt * mp);
        // Azimuthal transform per ring.
        let mut rings: Vec<C64> = f.to_vec();
        for ring in rings.chunks_mut(mp) {
            self.fwd.process(ring);
            for v in ring.iter_mut() {
                *v /= mp as f64;
            }
        }
        let mut dminus = vec![C64::new(0.0, 0.0); mt * mp];
        let mut dplus = dminus.clone();
        let mut lap = dminus.clone();
        let mm = self.mmax as i64;
        for m in -mm..=mm {
            let am = m.unsigned_abs() as usize;
            if am >= mt {
                continue;
            }
            let col = m.rem_euclid(mp as i64) as usize;
            let table = &self.tables[am];
            // Project F_m onto s^|m| Q_l.
            let coeffs: Vec<C64> = table
                .iter()
                .map(|ql| {
                    (0..mt).fold(C64::new(0.0, 0.0), |acc, j| {
                        acc + rings[j * mp + col] * (self.xw[j] * self.s[j].powi(am as i32) * ql[j].0)
                    })
                })
                .collect();
            let mf = m as f64;
            let amf = am as f64;
            for j in 0..mt {
                let (mut p, mut p1, mut p2) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
                for (c, ql) in coeffs.iter().zip(table) {
                    let (q, q1, q2) = ql[j];
                    p += c * q;
                    p1 += c * q1;
                    p2 += c * q2;
                }
                let (x, s) = (self.x[j], self.s[j]);
                let sm1 = s.powi(am as i32 - 1);
                dminus[j * mp + col] = (p * (amf * x + mf) - p1 * (s * s)) * sm1;
                dplus[j * mp + col] = (p * (amf * x - mf) - p1 * (s * s)) * sm1;
                lap[j * mp + col] =
                    (p2 * (1.0 - x * x) - p1 * (2.0 * (amf + 1.0) * x) - p * (amf * (amf + 1.0))) * (sm1 * s);
            }
        }
        for arr in [&mut dminus, &mut dplus, &mut lap] {
            for ring in arr.chunks_mut(mp) {
                self.inv.process(ring);
            }
        }
        let mut out = FiberDerivatives { dw: dminus, dwb: dplus, dwdwb: lap };
        for (q, n) in quad.nodes.iter().enumerate() {
            let e = self.phase[q];
            match n.chart {
                FiberChart::Zeta => {
                    let h = 0.5 * (1.0 + n.x);
                    out.dw[q] *= e.conj() * h;
                    out.dwb[q] *= e * h;
                    out.dwdwb[q] *= h * h;
                }
                FiberChart::Eta => {
                    let h = 0.5 * (1.0 - n.x);
                    out.dw[q] *= -e * h;
                    out.dwb[q] *= -e.conj() * h;
                    out.dwdwb[q] *= h * h;
                }
            }
        }
        out
    }

    /// Convenience wrapper for real input.
    pub fn derivatives_real(&self, f: &[f64], quad: &FiberQuadrature) -> FiberDerivatives {
        let c: Vec<C64> = f.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.derivatives(&c, quad)
    }
}

/// Values and first two derivatives of `Q_l^m(x)` for `l = m..=lmax`, where
/// `s^m Q_l^m` are the associated Legendre functions normalized to unit
/// `L²(dx)` norm on `[-1, 1]`.
fn legendre_column(m: usize, lmax: usize, x: f64) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(lmax + 1 - m);
    let mut qmm = (0.5f64).sqrt();
    for k in 1..=m {
        qmm *= ((2 * k + 1) as f64 / (2 * k) as f64).sqrt();
    }
    out.push((qmm, 0.0, 0.0));
    if lmax == m {
        return out;
    }
    let a = ((2 * m + 3) as f64).sqrt();
    out.push((a * x * qmm, a * qmm, 0.0));
    for l in (m + 2)..=lmax {
        let lf = l as f64;
        let mf = m as f64;
        let alpha = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let beta = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
        let (q1, d1, e1) = out[l - m - 1];
        let (q2, d2, e2) = out[l - m - 2];
        out.push((
            alpha * (x * q1 - beta * q2),
            alpha * (q1 + x * d1 - beta * d2),
            alpha * (2.0 * d1 + x * e1 - beta * e2),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::jet::Jet2;

    #[test]
    fn weights_are_normalized_and_symmetric() {
        let q = build_fiber_quadrature(16, 16).unwrap();
        assert_eq!(q.len(), 256);
        let s: f64 = q.nodes.iter().map(|n| n.weight).sum();
        assert!((s - 1.0).abs() < 1e-15);
        // ζ ↦ 1/ζ̄ maps x ↦ -x and keeps φ.
        for n in &q.nodes {
            let img = 1.0 / n.zeta.conj();
            assert!(q.nodes.iter().any(|m| (m.zeta - img).norm() < 1e-12 * (1.0 + img.norm())));
        }
    }

    #[test]
    fn associated_legendre_is_orthonormal() {
        let (x, w) = gauss_legendre(20);
        for m in 0..5 {
            let cols: Vec<_> = x.iter().map(|&t| legendre_column(m, 12, t)).collect();
            for l1 in 0..(12 - m) {
                for l2 in 0..(12 - m) {
                    let ip: f64 = (0..20)
                        .map(|j| w[j] * (1.0 - x[j] * x[j]).powi(m as i32) * cols[j][l1].0 * cols[j][l2].0)
                        .sum();
                    let e = if l1 == l2 { 1.0 } else { 0.0 };
                    assert!((ip - e).abs() < 1e-12, "m={m} l1={l1} l2={l2} ip={ip}");
                }
            }
        }
    }

    #[test]
    fn spectral_derivatives_match_exact_jets() {
        let q = build_fiber_quadrature(16, 16).unwrap();
        let sp = FiberSpectral::new(&q);
        // A smooth function on P¹ written in ζ: a mixture of low harmonics.
        let r2 = Expr::w() * Expr::wb();
        let den = 1.0 + r2.clone();
        let f = (Expr::w() + Expr::wb()) / den.clone() + 0.3 * r2.clone() / den.clone()
            - 0.2 * (Expr::w() * Expr::w() + Expr::wb() * Expr::wb()) / (den.clone() * den);
        let prog = f.compile();
        let vals: Vec<f64> = q.nodes.iter().map(|n| prog.eval(&[n.zeta, n.zeta, n.zeta, n.zeta.conj()]).re).collect();
        let d = sp.derivatives_real(&vals, &q);
        for (i, n) in q.nodes.iter().enumerate() {
            let (wv, wbv) = match n.chart {
                FiberChart::Zeta => (Jet2::var(n.w, Jet2::W), Jet2::var(n.w.conj(), Jet2::WB)),
                FiberChart::Eta => {
                    let e = Jet2::var(n.w, Jet2::W);
                    let eb = Jet2::var(n.w.conj(), Jet2::WB);
                    (Scalar::recip(&e), Scalar::recip(&eb))
                }
            };
            let zero = Jet2::constant(C64::new(0.0, 0.0));
            let j = prog.eval(&[zero, zero, wv, wbv]);
            assert!((d.dw[i] - j.0[Jet2::W]).norm() < 1e-11, "dw at {i}: {} vs {}", d.dw[i], j.0[Jet2::W]);
            assert!((d.dwb[i] - j.0[Jet2::WB]).norm() < 1e-11);
            assert!((d.dwdwb[i] - j.0[Jet2::WWB]).norm() < 1e-11);
        }
    }

    use crate::jet::Scalar;
}
