//! Discretized Kähler bases and split holomorphic bundles over them.

use crate::error::{Error, Result};
use crate::quad::gauss_legendre_on;
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseKind {
    Torus,
    ProjectiveLine,
}

/// One quadrature node of the base, expressed in the coordinate of its chart.
#[derive(Clone, Copy, Debug)]
pub struct BasePoint {
    pub chart: usize,
    pub z: C64,
    /// Kähler coefficient `g_{11̄}` in the chart coordinate.
    pub g: f64,
    /// Weight for integrals against `√−1 dz∧dz̄`, partition of unity included.
    pub area: f64,
}

#[derive(Clone, Debug)]
pub struct KahlerBase {
    pub kind: BaseKind,
    pub resolution: usize,
    pub tau: C64,
    pub points: Vec<BasePoint>,
}

/// Half-width of the overlap band in the sphere height `x₃`; `|x₃| < 0.6`
/// is the annulus `1/2 < |z| < 2`.
const BAND: f64 = 0.6;

impl KahlerBase {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `Σ area·g = ∫_M ω`.
    pub fn volume(&self) -> f64 {
        self.points.iter().map(|p| p.area * p.g).sum()
    }

    /// Integral of a base field against `ω`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.points.iter().zip(f).map(|(p, v)| p.area * p.g * v).sum()
    }

    /// Integral of a field of `√−1 dz∧dz̄` coefficients.
    pub fn integrate_form(&self, f: &[f64]) -> f64 {
        self.points.iter().zip(f).map(|(p, v)| p.area * v).sum()
    }

    pub fn charts(&self) -> usize {
        match self.kind {
            BaseKind::Torus => 1,
            BaseKind::ProjectiveLine => 2,
        }
    }

    /// Kähler coefficient at a chart coordinate.
    pub fn metric_at(&self, z: C64) -> f64 {
        match self.kind {
            BaseKind::Torus => 1.0,
            BaseKind::ProjectiveLine => (1.0 + z.norm_sqr()).powi(-2),
        }
    }

    /// Coordinate change from chart 0 to chart 1 (`w = 1/z`).
    pub fn chart_overlap(&self, z: C64) -> Option<C64> {
        match self.kind {
            BaseKind::Torus => None,
            BaseKind::ProjectiveLine => Some(1.0 / z),
        }
    }

    /// Largest relative mismatch of `g` across the chart overlap on the
    /// annulus `1/2 < |z| < 2`: `g₁(1/z)|d(1/z)/dz|²` against `g₀(z)`.
    pub fn overlap_mismatch(&self) -> f64 {
        if self.kind != BaseKind::ProjectiveLine {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..24 {
            for j in 0..16 {
                let r = 0.5 * 4f64.powf((i as f64 + 0.5) / 24.0);
                let z = C64::from_polar(r, 2.0 * PI * j as f64 / 16.0);
                let w = 1.0 / z;
                let pulled = self.metric_at(w) * (1.0 / (z * z)).norm_sqr();
                worst = worst.max((pulled / self.metric_at(z) - 1.0).abs());
            }
        }
        worst
    }

    /// Lattice indices `(j, k)` of a torus point, `z = j/N + (k/N)τ`.
    pub fn torus_index(&self, p: usize) -> (usize, usize) {
        (p / self.resolution, p % self.resolution)
    }
}

/// Builds the discretized base.
///
/// Torus: uniform `N×N` grid `z = j/N + (k/N)τ` with the flat metric.
/// Projective line: per chart, Gauss-Legendre panels in the sphere height on
/// `[0.6, 1]` and `[-0.6, 0.6]` times `N` uniform angles; weights on the
/// overlap band carry a smooth partition of unity.
pub fn build_base(kind: BaseKind, n: usize, tau: C64) -> Result<KahlerBase> {
    if n < 8 {
        return Err(Error::Resolution(n, 8));
    }
    match kind {
        BaseKind::Torus => {
            if tau.im <= 0.0 {
                return Err(Error::Modulus(tau.im));
            }
            let area = 2.0 * tau.im / (n * n) as f64;
            let mut points = Vec::with_capacity(n * n);
            for j in 0..n {
                for k in 0..n {
                    let z = C64::new(j as f64 / n as f64, 0.0) + tau * (k as f64 / n as f64);
                    points.push(BasePoint { chart: 0, z, g: 1.0, area });
                }
            }
            Ok(KahlerBase { kind, resolution: n, tau, points })
        }
        BaseKind::ProjectiveLine => {
            if !n.is_multiple_of(4) {
                return Err(Error::Invalid(format!("projective-line resolution must be a multiple of 4, got {n}")));
            }
            let (cap_x, cap_w) = gauss_legendre_on(n / 4, BAND, 1.0);
            let (band_x, band_w) = gauss_legendre_on(n / 2, -BAND, BAND);
            let dalpha = 2.0 * PI / n as f64;
            let mut points = Vec::new();
            for chart in 0..2 {
                let nodes = cap_x.iter().zip(&cap_w).chain(band_x.iter().zip(&band_w));
                for (&x3, &wx) in nodes {
                    let chi = partition(x3);
                    let r = ((1.0 - x3) / (1.0 + x3)).sqrt();
                    let g = (1.0 + r * r).powi(-2);
                    for a in 0..n {
                        let z = C64::from_polar(r, (a as f64 + 0.5 * chart as f64) * dalpha);
                        // ω = ½ dx₃ dα and ω = g √−1 dz∧dz̄.
                        let area = chi * 0.5 * wx * dalpha / g;
                        points.push(BasePoint { chart, z, g, area });
                    }
                }
            }
            Ok(KahlerBase { kind, resolution: n, tau: C64::new(0.0, 0.0), points })
        }
    }
}

/// Weight of the home chart at sphere height `x₃`: 1 on the cap, a quintic
/// smoothstep across the band, and `χ(x) + χ(-x) = 1`.
fn partition(x3: f64) -> f64 {
    if x3 >= BAND {
        return 1.0;
    }
    if x3 <= -BAND {
        return 0.0;
    }
    let t = (x3 + BAND) / (2.0 * BAND);
    t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BundleKind {
    TrivialOverTorus,
    SplitOverP1 { a: i32, b: i32 },
}

#[derive(Clone, Debug)]
pub struct HolomorphicBundle {
    pub kind: BundleKind,
    pub rank: usize,
    pub degree: i32,
}

impl HolomorphicBundle {
    /// Splitting exponents `(a, b)`; zero for the trivial bundle.
    pub fn exponents(&self) -> (i32, i32) {
        match self.kind {
            BundleKind::TrivialOverTorus => (0, 0),
            BundleKind::SplitOverP1 { a, b } => (a, b),
        }
    }

    /// Transition matrix `v⁰ = T(z) v¹` on the overlap, in the chart-0
    /// coordinate.
    pub fn transition(&self, z: C64) -> [[C64; 2]; 2] {
        let (a, b) = self.exponents();
        let zero = C64::new(0.0, 0.0);
        [[z.powi(a), zero], [zero, z.powi(b)]]
    }

    /// Winding number of `det T` around the unit circle, counted from
    /// sampled phase increments.
    pub fn winding_number(&self, samples: usize) -> i32 {
        let mut total = 0.0;
        let mut prev = crate::linalg::det(&self.transition(C64::new(1.0, 0.0))).arg();
        for s in 1..=samples {
            let z = C64::from_polar(1.0, 2.0 * PI * s as f64 / samples as f64);
            let cur = crate::linalg::det(&self.transition(z)).arg();
            let mut d = cur - prev;
            while d > PI {
                d -= 2.0 * PI;
            }
            while d < -PI {
                d += 2.0 * PI;
            }
            total += d;
            prev = cur;
        }
        (total / (2.0 * PI)).round() as i32
    }

    /// Residual of the cocycle check `T · T⁻¹ = I` at a point.
    pub fn cocycle_residual(&self, z: C64) -> f64 {
        let t = self.transition(z);
        let p = crate::linalg::mul(&t, &crate::linalg::inv(&t));
        crate::linalg::max_abs(&crate::linalg::sub(&p, &crate::linalg::identity()))
    }
}

pub fn build_bundle(kind: BundleKind, base: &KahlerBase) -> Result<HolomorphicBundle> {
    let ok = matches!(
        (kind, base.kind),
        (BundleKind::TrivialOverTorus, BaseKind::Torus) | (BundleKind::SplitOverP1 { .. }, BaseKind::ProjectiveLine)
    );
    if !ok {
        return Err(Error::KindMismatch { base: format!("{:?}", base.kind), bundle: format!("{kind:?}") });
    }
    let degree = match kind {
        BundleKind::TrivialOverTorus => 0,
        BundleKind::SplitOverP1 { a, b } => a + b,
    };
    Ok(HolomorphicBundle { kind, rank: crate::RANK, degree })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_volume_is_twice_im_tau() {
        let b = build_base(BaseKind::Torus, 16, C64::new(0.0, 1.0)).unwrap();
        assert!((b.volume() - 2.0).abs() < 1e-14);
        let b = build_base(BaseKind::Torus, 16, C64::new(0.3, 2.0)).unwrap();
        assert!((b.volume() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn sphere_volume_is_two_pi() {
        let b = build_base(BaseKind::ProjectiveLine, 24, C64::new(0.0, 0.0)).unwrap();
        assert_eq!(b.len(), 864);
        assert!((b.volume() - 2.0 * PI).abs() < 1e-12);
        assert!(b.overlap_mismatch() < 1e-13);
    }

    #[test]
    fn partition_sums_to_one() {
        for i in 0..50 {
            let x = -1.0 + 2.0 * i as f64 / 49.0;
            assert!((partition(x) + partition(-x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(matches!(build_base(BaseKind::Torus, 4, C64::new(0.0, 1.0)), Err(Error::Resolution(4, 8))));
        assert!(matches!(build_base(BaseKind::Torus, 16, C64::new(0.0, -1.0)), Err(Error::Modulus(_))));
        let t = build_base(BaseKind::Torus, 8, C64::new(0.0, 1.0)).unwrap();
        assert!(build_bundle(BundleKind::SplitOverP1 { a: 1, b: 1 }, &t).is_err());
    }

    #[test]
    fn bundle_degrees_and_winding() {
        let p = build_base(BaseKind::ProjectiveLine, 8, C64::new(0.0, 0.0)).unwrap();
        for (a, b) in [(1, 1), (2, 0), (3, -1)] {
            let e = build_bundle(BundleKind::SplitOverP1 { a, b }, &p).unwrap();
            assert_eq!(e.degree, a + b);
            assert_eq!(e.winding_number(256), a + b);
            assert!(e.cocycle_residual(C64::new(0.7, 0.9)) < 1e-14);
        }
        let t = build_base(BaseKind::Torus, 8, C64::new(0.0, 1.0)).unwrap();
        let e = build_bundle(BundleKind::TrivialOverTorus, &t).unwrap();
        assert_eq!(e.degree, 0);
        assert_eq!(e.winding_number(64), 0);
    }
}
