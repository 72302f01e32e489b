//! One-dimensional quadrature and time-grid differencing.

use std::f64::consts::PI;
use std::ops::{Add, Mul};

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, refined by Newton on P_n.
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, t);
            dp = d;
            let dt = p / d;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, t);
        if d.is_finite() {
            dp = d;
        }
        let wt = 2.0 / ((1.0 - t * t) * dp * dp);
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = wt;
        w[n - 1 - i] = wt;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (t * p - p0) / (t * t - 1.0);
    (p, d)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    (
        x.iter().map(|t| a + h * (t + 1.0)).collect(),
        w.iter().map(|v| v * h).collect(),
    )
}

/// Uniform grid `t_k = k/T` on `[0, 1]` with composite Simpson weights and
/// fourth-order difference stencils (one-sided near the ends).
#[derive(Clone, Debug)]
pub struct TimeGrid {
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(steps: usize) -> Self {
        assert!(steps >= 6 && steps.is_multiple_of(2), "time grid needs an even T >= 6");
        TimeGrid { steps }
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.steps as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        k as f64 / self.steps as f64
    }

    pub fn weights(&self) -> Vec<f64> {
        let t = self.steps;
        let h = self.dt() / 3.0;
        (0..=t)
            .map(|k| {
                if k == 0 || k == t {
                    h
                } else if k % 2 == 1 {
                    4.0 * h
                } else {
                    2.0 * h
                }
            })
            .collect()
    }

    /// First-derivative stencil at `k` as `(index, weight)` pairs.
    pub fn d1(&self, k: usize) -> Vec<(usize, f64)> {
        let t = self.steps;
        let s = 1.0 / (12.0 * self.dt());
        let left = |c: &[f64]| c.iter().enumerate().map(|(j, &v)| (j, v * s)).collect::<Vec<_>>();
        let right = |c: &[f64]| c.iter().enumerate().map(|(j, &v)| (t - j, -v * s)).collect::<Vec<_>>();
        match k {
            0 => left(&[-25.0, 48.0, -36.0, 16.0, -3.0]),
            1 => left(&[-3.0, -10.0, 18.0, -6.0, 1.0]),
            _ if k == t => right(&[-25.0, 48.0, -36.0, 16.0, -3.0]),
            _ if k == t - 1 => right(&[-3.0, -10.0, 18.0, -6.0, 1.0]),
            _ => vec![(k - 2, s), (k - 1, -8.0 * s), (k + 1, 8.0 * s), (k + 2, -s)],
        }
    }

    /// Second-derivative stencil at `k`.
    pub fn d2(&self, k: usize) -> Vec<(usize, f64)> {
        let t = self.steps;
        let s = 1.0 / (12.0 * self.dt() * self.dt());
        let left = |c: &[f64]| c.iter().enumerate().map(|(j, &v)| (j, v * s)).collect::<Vec<_>>();
        let right = |c: &[f64]| c.iter().enumerate().map(|(j, &v)| (t - j, v * s)).collect::<Vec<_>>();
        match k {
            0 => left(&[45.0, -154.0, 214.0, -156.0, 61.0, -10.0]),
            1 => left(&[10.0, -15.0, -4.0, 14.0, -6.0, 1.0]),
            _ if k == t => right(&[45.0, -154.0, 214.0, -156.0, 61.0, -10.0]),
            _ if k == t - 1 => right(&[10.0, -15.0, -4.0, 14.0, -6.0, 1.0]),
            _ => vec![(k - 2, -s), (k - 1, 16.0 * s), (k, -30.0 * s), (k + 1, 16.0 * s), (k + 2, -s)],
        }
    }

    /// Applies a stencil to a sampled quantity.
    pub fn apply<T>(stencil: &[(usize, f64)], values: &[T]) -> T
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    {
        let (j0, w0) = stencil[0];
        stencil[1..].iter().fold(values[j0] * w0, |acc, &(j, w)| acc + values[j] * w)
    }

    /// Integral of sampled values with the Simpson weights.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights().iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 6, 12, 16, 24] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for deg in 0..(2 * n) {
                let got: f64 = x.iter().zip(&w).map(|(t, wt)| wt * t.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn stencils_are_exact_on_quartics() {
        let g = TimeGrid::new(8);
        let poly = |t: f64| 1.0 - 2.0 * t + 3.0 * t * t - 0.5 * t.powi(3) + 0.7 * t.powi(4);
        let dpoly = |t: f64| -2.0 + 6.0 * t - 1.5 * t * t + 2.8 * t.powi(3);
        let ddpoly = |t: f64| 6.0 - 3.0 * t + 8.4 * t * t;
        let vals: Vec<f64> = (0..=8).map(|k| poly(g.t(k))).collect();
        for k in 0..=8 {
            let d1 = TimeGrid::apply(&g.d1(k), &vals);
            let d2 = TimeGrid::apply(&g.d2(k), &vals);
            assert!((d1 - dpoly(g.t(k))).abs() < 1e-10, "d1 at {k}");
            assert!((d2 - ddpoly(g.t(k))).abs() < 1e-8, "d2 at {k}");
        }
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        let g = TimeGrid::new(6);
        let vals: Vec<f64> = (0..=6).map(|k| g.t(k).powi(3) - g.t(k)).collect();
        assert!((g.integrate(&vals) - (0.25 - 0.5)).abs() < 1e-15);
    }
}
