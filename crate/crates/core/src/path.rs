//! Time-discretized curves `G_t`, `t_k = k/T`, stored through `log G_t`.
//!
//! Members are produced on demand, sample by sample, from the endpoint
//! jets; stencils are fused so no intermediate members are stored.
//! Velocities `v_t = ∂_t log G_t` and accelerations come from the
//! fourth-order stencils of [`TimeGrid`].

use crate::error::{Error, Result};
use crate::exec;
use crate::jet::FieldJet;
use crate::quad::TimeGrid;

#[derive(Clone, Debug)]
pub enum Shape {
    /// `log G_t = (1-t) log H + t log G`.
    Linear,
    /// The linear path plus `t(1-t)β`.
    Bent(Vec<FieldJet>),
    /// `G_t = (1-t) H + t G`.
    LinearInG,
    /// Explicit members at every grid time.
    Slices(Vec<Vec<FieldJet>>),
}

#[derive(Clone, Debug)]
pub struct MetricPath {
    pub grid: TimeGrid,
    start: Vec<FieldJet>,
    end: Vec<FieldJet>,
    shape: Shape,
    /// Endpoint-fixed variation `G ↦ G(1 + s t(1-t) ψ)`.
    perturbation: Option<(Vec<FieldJet>, f64)>,
}

fn check_grid(steps: usize) -> Result<TimeGrid> {
    if steps < 6 || !steps.is_multiple_of(2) {
        return Err(Error::Invalid(format!("path needs an even number of steps >= 6, got {steps}")));
    }
    Ok(TimeGrid::new(steps))
}

impl MetricPath {
    /// Path from `start` (t = 0) to `end` (t = 1), both given as jets of `log G`.
    pub fn new(start: Vec<FieldJet>, end: Vec<FieldJet>, shape: Shape, steps: usize) -> Result<Self> {
        if start.len() != end.len() {
            return Err(Error::Shape { expected: start.len(), got: end.len() });
        }
        if let Shape::Bent(b) = &shape {
            if b.len() != start.len() {
                return Err(Error::Shape { expected: start.len(), got: b.len() });
            }
        }
        if let Shape::Slices(_) = shape {
            return Err(Error::Invalid("use MetricPath::from_slices for explicit members".into()));
        }
        Ok(MetricPath { grid: check_grid(steps)?, start, end, shape, perturbation: None })
    }

    pub fn linear(start: Vec<FieldJet>, end: Vec<FieldJet>, steps: usize) -> Result<Self> {
        MetricPath::new(start, end, Shape::Linear, steps)
    }

    pub fn from_slices(slices: Vec<Vec<FieldJet>>) -> Result<Self> {
        let grid = check_grid(slices.len().saturating_sub(1))?;
        let n = slices[0].len();
        if let Some(bad) = slices.iter().find(|s| s.len() != n) {
            return Err(Error::Shape { expected: n, got: bad.len() });
        }
        let start = slices[0].clone();
        let end = slices[slices.len() - 1].clone();
        Ok(MetricPath { grid, start, end, shape: Shape::Slices(slices), perturbation: None })
    }

    pub fn steps(&self) -> usize {
        self.grid.steps
    }

    pub fn samples(&self) -> usize {
        self.start.len()
    }

    pub fn start(&self) -> &[FieldJet] {
        &self.start
    }

    pub fn end(&self) -> &[FieldJet] {
        &self.end
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// The path `G_t (1 + s t(1-t) ψ)` for a direction `ψ` given by its jets.
    pub fn perturbed(&self, psi: &[FieldJet], s: f64) -> Result<Self> {
        if psi.len() != self.samples() {
            return Err(Error::Shape { expected: self.samples(), got: psi.len() });
        }
        let mut out = self.clone();
        out.perturbation = Some((psi.to_vec(), s));
        Ok(out)
    }

    /// Jets of `log G_t` at a grid time.
    pub fn member(&self, k: usize) -> Vec<FieldJet> {
        let t = self.grid.t(k);
        exec::map_range(self.samples(), |s| self.sample(k, t, s))
    }

    /// Jets of `log G_t` at any time. Explicit slices snap to the nearest
    /// grid time.
    pub fn at(&self, t: f64) -> Vec<FieldJet> {
        let k = ((t * self.steps() as f64).round().max(0.0) as usize).min(self.steps());
        exec::map_range(self.samples(), |s| self.sample(k, t, s))
    }

    /// One sample of `log G_t`; `k` is only read for explicit slices.
    #[inline]
    fn sample(&self, k: usize, t: f64, s: usize) -> FieldJet {
        let (a, b) = (&self.start[s], &self.end[s]);
        let m = match &self.shape {
            Shape::Linear => a.scaled(1.0 - t).axpy(t, b),
            Shape::Bent(beta) => a.scaled(1.0 - t).axpy(t, b).axpy(t * (1.0 - t), &beta[s]),
            Shape::LinearInG => {
                // log((1-t) + t e^d) applied to d = log G - log H.
                let d = *b - *a;
                let e = d.val.exp();
                let den = 1.0 - t + t * e;
                let f1 = t * e / den;
                *a + d.chain(den.ln(), f1, f1 * (1.0 - f1))
            }
            Shape::Slices(sl) => sl[k][s],
        };
        match &self.perturbation {
            Some((psi, eps)) => {
                let x = psi[s].scaled(eps * t * (1.0 - t));
                let y = 1.0 + x.val;
                m + x.chain(y.ln(), 1.0 / y, -1.0 / (y * y))
            }
            None => m,
        }
    }

    /// Values of `log G_t` at every grid time.
    pub fn values(&self) -> Vec<Vec<f64>> {
        (0..=self.steps()).map(|k| self.member(k).iter().map(|j| j.val).collect()).collect()
    }

    #[inline]
    fn stencil_sample(&self, stencil: &[(usize, f64)], s: usize) -> FieldJet {
        stencil.iter().fold(FieldJet::default(), |acc, &(j, w)| acc.axpy(w, &self.sample(j, self.grid.t(j), s)))
    }

    fn stencil_jets(&self, stencil: &[(usize, f64)]) -> Vec<FieldJet> {
        exec::map_range(self.samples(), |s| self.stencil_sample(stencil, s))
    }

    /// Visits every grid time in order with the member, velocity and
    /// (if requested) acceleration jets.
    pub fn sweep(&self, acceleration: bool, mut f: impl FnMut(usize, &[FieldJet], &[FieldJet], Option<&[FieldJet]>)) {
        for k in 0..=self.steps() {
            let a = acceleration.then(|| self.acceleration(k));
            f(k, &self.member(k), &self.velocity(k), a.as_deref());
        }
    }

    /// Sample `s` of the member at grid time `k`.
    #[inline]
    pub fn member_sample(&self, k: usize, s: usize) -> FieldJet {
        self.sample(k, self.grid.t(k), s)
    }

    /// Sample `s` of the velocity at grid time `k`.
    #[inline]
    pub fn velocity_sample(&self, k: usize, stencil: &[(usize, f64)], s: usize) -> FieldJet {
        let (a, b) = (&self.start[s], &self.end[s]);
        match (&self.shape, &self.perturbation) {
            (Shape::Linear, None) => *b - *a,
            (Shape::Bent(beta), None) => (*b - *a).axpy(1.0 - 2.0 * self.grid.t(k), &beta[s]),
            _ => self.stencil_sample(stencil, s),
        }
    }

    /// Jets of `v_t = ∂_t log G_t`. Unperturbed linear and bent paths are
    /// differentiated exactly; everything else goes through the stencils.
    pub fn velocity(&self, k: usize) -> Vec<FieldJet> {
        let d1 = self.grid.d1(k);
        exec::map_range(self.samples(), |s| self.velocity_sample(k, &d1, s))
    }

    /// Jets of `∂_t v_t`.
    pub fn acceleration(&self, k: usize) -> Vec<FieldJet> {
        match (&self.shape, &self.perturbation) {
            (Shape::Linear, None) => vec![FieldJet::default(); self.samples()],
            (Shape::Bent(beta), None) => exec::map_range(beta.len(), |s| beta[s].scaled(-2.0)),
            _ => self.stencil_jets(&self.grid.d2(k)),
        }
    }
}

/// Applies a stencil to per-time value fields.
pub fn stencil_values(stencil: &[(usize, f64)], values: &[Vec<f64>]) -> Vec<f64> {
    let n = values[0].len();
    exec::map_range(n, |s| stencil.iter().map(|&(j, w)| w * values[j][s]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(c: f64, n: usize) -> Vec<FieldJet> {
        (0..n).map(|i| FieldJet { val: c + 0.01 * i as f64, wwb: 1.0 + c, ..Default::default() }).collect()
    }

    #[test]
    fn linear_path_has_constant_velocity() {
        let p = MetricPath::linear(field(0.0, 4), field(2.0, 4), 8).unwrap();
        for k in 0..=8 {
            for j in p.velocity(k) {
                assert!((j.val - 2.0).abs() < 1e-12);
                assert!((j.wwb - 2.0).abs() < 1e-12);
            }
            for j in p.acceleration(k) {
                assert!(j.val.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sweep_matches_pointwise_stencils() {
        let bent = MetricPath::new(field(0.0, 3), field(1.0, 3), Shape::Bent(field(0.5, 3)), 8).unwrap();
        let mut seen = 0;
        bent.sweep(true, |k, m, v, a| {
            let (v2, a2) = (bent.velocity(k), bent.acceleration(k));
            for s in 0..3 {
                assert_eq!(m[s].val, bent.member(k)[s].val);
                assert!((v[s].val - v2[s].val).abs() < 1e-12);
                assert!((a.unwrap()[s].val - a2[s].val).abs() < 1e-10);
            }
            seen += 1;
        });
        assert_eq!(seen, 9);
    }

    #[test]
    fn linear_in_g_hits_endpoints_and_blends_values() {
        let a = field(0.0, 3);
        let b = field(1.0, 3);
        let p = MetricPath::new(a.clone(), b.clone(), Shape::LinearInG, 8).unwrap();
        let m0 = p.member(0);
        let m1 = p.member(8);
        for s in 0..3 {
            assert!((m0[s].val - a[s].val).abs() < 1e-14 && (m1[s].val - b[s].val).abs() < 1e-14);
            assert!((m1[s].wwb - b[s].wwb).abs() < 1e-13);
        }
        let mid = p.at(0.5);
        let want = (0.5 * a[1].val.exp() + 0.5 * b[1].val.exp()).ln();
        assert!((mid[1].val - want).abs() < 1e-14);
    }

    #[test]
    fn bad_grids_are_rejected() {
        assert!(MetricPath::linear(field(0.0, 2), field(1.0, 2), 5).is_err());
        assert!(MetricPath::linear(field(0.0, 2), field(1.0, 3), 8).is_err());
    }
}
