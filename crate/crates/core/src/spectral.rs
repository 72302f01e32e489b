//! Fourier differentiation on the torus `ℂ/(ℤ + τℤ)`.
//!
//! Fields live on the uniform grid `z = j/N + (k/N)τ`, stored row-major in
//! `(j, k)`. A mode `e^{2πi(pX + qY)}` with `z = X + τY` has symbols
//! `∂z ↦ -(π/Im τ)(τ̄p - q)`, `∂z̄ ↦ (π/Im τ)(τp - q)`, and
//! `∂z∂z̄ ↦ -(π/Im τ)²|τp - q|²`. Nyquist modes are dropped.

use crate::C64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

pub struct TorusSpectral {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    sym_z: Vec<C64>,
    sym_zb: Vec<C64>,
    sym_lap: Vec<C64>,
}

impl TorusSpectral {
    pub fn new(n: usize, tau: C64) -> Self {
        let mut planner = FftPlanner::new();
        let freq = |i: usize| if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
        let nyq = |i: usize| n.is_multiple_of(2) && i == n / 2;
        let s = PI / tau.im;
        let mut sym_z = vec![C64::new(0.0, 0.0); n * n];
        let mut sym_zb = sym_z.clone();
        let mut sym_lap = sym_z.clone();
        for j in 0..n {
            for k in 0..n {
                if nyq(j) || nyq(k) {
                    continue;
                }
                let (p, q) = (freq(j), freq(k));
                let a = tau * p - q;
                sym_z[j * n + k] = -s * a.conj();
                sym_zb[j * n + k] = s * a;
                sym_lap[j * n + k] = C64::new(-s * s * a.norm_sqr(), 0.0);
            }
        }
        TorusSpectral { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n), sym_z, sym_zb, sym_lap }
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    fn fft2(&self, data: &mut [C64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        for row in data.chunks_mut(n) {
            plan.process(row);
        }
        let mut col = vec![C64::new(0.0, 0.0); n];
        for k in 0..n {
            for j in 0..n {
                col[j] = data[j * n + k];
            }
            plan.process(&mut col);
            for j in 0..n {
                data[j * n + k] = col[j];
            }
        }
    }

    /// Normalized forward transform.
    pub fn forward(&self, f: &[C64]) -> Vec<C64> {
        assert_eq!(f.len(), self.n * self.n);
        let mut d = f.to_vec();
        self.fft2(&mut d, &self.fwd);
        let scale = 1.0 / (self.n * self.n) as f64;
        d.iter_mut().for_each(|v| *v *= scale);
        d
    }

    fn synthesize(&self, hat: &[C64], sym: &[C64]) -> Vec<C64> {
        let mut d: Vec<C64> = hat.iter().zip(sym).map(|(a, b)| a * b).collect();
        self.fft2(&mut d, &self.inv);
        d
    }

    /// `(∂z f, ∂z̄ f, ∂z∂z̄ f)`.
    pub fn derivatives(&self, f: &[C64]) -> [Vec<C64>; 3] {
        let hat = self.forward(f);
        [self.synthesize(&hat, &self.sym_z), self.synthesize(&hat, &self.sym_zb), self.synthesize(&hat, &self.sym_lap)]
    }

    pub fn dz(&self, f: &[C64]) -> Vec<C64> {
        self.synthesize(&self.forward(f), &self.sym_z)
    }

    pub fn ddbar(&self, f: &[C64]) -> Vec<C64> {
        self.synthesize(&self.forward(f), &self.sym_lap)
    }

    /// `∂z∂z̄` of a real field.
    pub fn ddbar_real(&self, f: &[f64]) -> Vec<f64> {
        let c: Vec<C64> = f.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.ddbar(&c).iter().map(|v| v.re).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbols_match_analytic_derivatives() {
        let n = 16;
        let tau = C64::new(0.3, 1.2);
        let sp = TorusSpectral::new(n, tau);
        // f = exp(2πi(2X - Y)) + 0.5 cos(2π(X + 3Y))
        let mut f = vec![C64::new(0.0, 0.0); n * n];
        let mut fz = f.clone();
        let mut flap = f.clone();
        for j in 0..n {
            for k in 0..n {
                let (x, y) = (j as f64 / n as f64, k as f64 / n as f64);
                let e1 = C64::from_polar(1.0, 2.0 * PI * (2.0 * x - y));
                let ph = 2.0 * PI * (x + 3.0 * y);
                f[j * n + k] = e1 + 0.5 * ph.cos();
                let s = PI / tau.im;
                let a1 = tau * 2.0 - (-1.0);
                let a2 = tau * 1.0 - 3.0;
                let e2 = C64::from_polar(1.0, ph);
                fz[j * n + k] = -s * a1.conj() * e1 + 0.25 * s * a2.conj() * (e2.conj() - e2);
                flap[j * n + k] = -s * s * (a1.norm_sqr() * e1 + 0.5 * a2.norm_sqr() * ph.cos());
            }
        }
        let [dz, _, lap] = sp.derivatives(&f);
        for i in 0..n * n {
            assert!((dz[i] - fz[i]).norm() < 1e-11);
            assert!((lap[i] - flap[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn laplacian_of_sine_on_square_torus() {
        let n = 16;
        let sp = TorusSpectral::new(n, C64::new(0.0, 1.0));
        let f: Vec<f64> = (0..n * n).map(|i| (2.0 * PI * (i / n) as f64 / n as f64).sin()).collect();
        let l = sp.ddbar_real(&f);
        for (a, b) in l.iter().zip(&f) {
            assert!((a + PI * PI * b).abs() < 1e-11);
        }
    }
}
