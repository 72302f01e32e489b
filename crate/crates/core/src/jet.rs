//! Truncated multi-dual numbers.
//!
//! Derivatives are taken with respect to four generators `z, z̄, w, w̄`, each
//! of which squares to zero. [`Jet2`] keeps the nine components needed for
//! the complex Hessian blocks `∂z∂z̄, ∂z∂w̄, ∂z̄∂w, ∂w∂w̄`; [`Dual4`] keeps all
//! sixteen products, enough for the fourth mixed derivative in the curvature
//! tensor. [`FieldJet`] is the reduced record of a real function used by the
//! functionals.

use crate::C64;
use std::ops::{Add, Mul, Neg, Sub};

/// Scalar types an expression can be evaluated over.
pub trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> {
    fn constant(c: C64) -> Self;
    fn value(&self) -> C64;
    /// `f(self)` given `d[k] = f^(k)(self.value())`.
    fn lift(&self, d: &[C64; 5]) -> Self;

    fn recip(&self) -> Self {
        let x = self.value();
        let r = 1.0 / x;
        let r2 = r * r;
        self.lift(&[r, -r2, 2.0 * r2 * r, -6.0 * r2 * r2, 24.0 * r2 * r2 * r])
    }
    fn exp(&self) -> Self {
        let e = self.value().exp();
        self.lift(&[e; 5])
    }
    fn ln(&self) -> Self {
        let x = self.value();
        let r = 1.0 / x;
        let r2 = r * r;
        self.lift(&[x.ln(), r, -r2, 2.0 * r2 * r, -6.0 * r2 * r2])
    }
    fn sin(&self) -> Self {
        let x = self.value();
        let (s, c) = (x.sin(), x.cos());
        self.lift(&[s, c, -s, -c, s])
    }
    fn cos(&self) -> Self {
        let x = self.value();
        let (s, c) = (x.sin(), x.cos());
        self.lift(&[c, -s, -c, s, c])
    }
    fn powf(&self, p: f64) -> Self {
        let x = self.value();
        let mut d = [C64::new(0.0, 0.0); 5];
        let mut coef = 1.0;
        for (k, dk) in d.iter_mut().enumerate() {
            *dk = coef * x.powf(p - k as f64);
            coef *= p - k as f64;
        }
        self.lift(&d)
    }
    fn powi(&self, n: i32) -> Self {
        if n >= 0 {
            let mut acc = Self::constant(C64::new(1.0, 0.0));
            for _ in 0..n {
                acc = acc * *self;
            }
            acc
        } else {
            self.powi(-n).recip()
        }
    }
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl Scalar for C64 {
    fn constant(c: C64) -> Self {
        c
    }
    fn value(&self) -> C64 {
        *self
    }
    fn lift(&self, d: &[C64; 5]) -> Self {
        d[0]
    }
}

/// Second-order jet in `(z, z̄, w, w̄)` keeping only the Hessian blocks.
///
/// Layout: `[1, z, z̄, w, w̄, zz̄, zw̄, z̄w, ww̄]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2(pub [C64; 9]);

impl Jet2 {
    pub const ONE: usize = 0;
    pub const Z: usize = 1;
    pub const ZB: usize = 2;
    pub const W: usize = 3;
    pub const WB: usize = 4;
    pub const ZZB: usize = 5;
    pub const ZWB: usize = 6;
    pub const ZBW: usize = 7;
    pub const WWB: usize = 8;

    pub fn zero() -> Self {
        Jet2([C64::new(0.0, 0.0); 9])
    }
    /// The variable `value + ε_slot`.
    pub fn var(value: C64, slot: usize) -> Self {
        let mut j = Self::zero();
        j.0[0] = value;
        j.0[slot] = C64::new(1.0, 0.0);
        j
    }
}

impl Add for Jet2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut r = self;
        for (a, b) in r.0.iter_mut().zip(o.0) {
            *a += b;
        }
        r
    }
}
impl Sub for Jet2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut r = self;
        for (a, b) in r.0.iter_mut().zip(o.0) {
            *a -= b;
        }
        r
    }
}
impl Neg for Jet2 {
    type Output = Self;
    fn neg(self) -> Self {
        let mut r = self;
        for a in r.0.iter_mut() {
            *a = -*a;
        }
        r
    }
}
impl Mul for Jet2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let a = &self.0;
        let b = &o.0;
        Jet2([
            a[0] * b[0],
            a[0] * b[1] + a[1] * b[0],
            a[0] * b[2] + a[2] * b[0],
            a[0] * b[3] + a[3] * b[0],
            a[0] * b[4] + a[4] * b[0],
            a[0] * b[5] + a[5] * b[0] + a[1] * b[2] + a[2] * b[1],
            a[0] * b[6] + a[6] * b[0] + a[1] * b[4] + a[4] * b[1],
            a[0] * b[7] + a[7] * b[0] + a[2] * b[3] + a[3] * b[2],
            a[0] * b[8] + a[8] * b[0] + a[3] * b[4] + a[4] * b[3],
        ])
    }
}

impl Scalar for Jet2 {
    fn constant(c: C64) -> Self {
        let mut j = Self::zero();
        j.0[0] = c;
        j
    }
    fn value(&self) -> C64 {
        self.0[0]
    }
    fn lift(&self, d: &[C64; 5]) -> Self {
        let a = &self.0;
        let (d1, d2) = (d[1], d[2]);
        Jet2([
            d[0],
            d1 * a[1],
            d1 * a[2],
            d1 * a[3],
            d1 * a[4],
            d1 * a[5] + d2 * a[1] * a[2],
            d1 * a[6] + d2 * a[1] * a[4],
            d1 * a[7] + d2 * a[2] * a[3],
            d1 * a[8] + d2 * a[3] * a[4],
        ])
    }
}

/// Full multi-dual number over four nilpotent generators.
///
/// Component `c[S]` is the coefficient of `Π_{g∈S} ε_g`, with bit 0 = `z`,
/// bit 1 = `z̄`, bit 2 = `w` (or `v`), bit 3 = `w̄` (or `v̄`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual4(pub [C64; 16]);

impl Dual4 {
    pub const Z: usize = 1;
    pub const ZB: usize = 2;
    pub const W: usize = 4;
    pub const WB: usize = 8;

    pub fn zero() -> Self {
        Dual4([C64::new(0.0, 0.0); 16])
    }
    pub fn var(value: C64, bit: usize) -> Self {
        let mut d = Self::zero();
        d.0[0] = value;
        d.0[bit] = C64::new(1.0, 0.0);
        d
    }
    pub fn scale(&self, c: C64) -> Self {
        let mut r = *self;
        for x in r.0.iter_mut() {
            *x *= c;
        }
        r
    }
}

impl Add for Dual4 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut r = self;
        for (a, b) in r.0.iter_mut().zip(o.0) {
            *a += b;
        }
        r
    }
}
impl Sub for Dual4 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut r = self;
        for (a, b) in r.0.iter_mut().zip(o.0) {
            *a -= b;
        }
        r
    }
}
impl Neg for Dual4 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(C64::new(-1.0, 0.0))
    }
}
impl Mul for Dual4 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut c = [C64::new(0.0, 0.0); 16];
        for (s, cs) in c.iter_mut().enumerate() {
            // Walk all submasks of s.
            let mut a = s;
            loop {
                *cs += self.0[a] * o.0[s ^ a];
                if a == 0 {
                    break;
                }
                a = (a - 1) & s;
            }
        }
        Dual4(c)
    }
}

impl Scalar for Dual4 {
    fn constant(c: C64) -> Self {
        let mut d = Self::zero();
        d.0[0] = c;
        d
    }
    fn value(&self) -> C64 {
        self.0[0]
    }
    fn lift(&self, d: &[C64; 5]) -> Self {
        let mut n = *self;
        n.0[0] = C64::new(0.0, 0.0);
        let mut out = Self::constant(d[0]);
        let mut pow = n;
        let mut fact = 1.0;
        for (k, dk) in d.iter().enumerate().skip(1) {
            fact *= k as f64;
            out = out + pow.scale(*dk / fact);
            if k < 4 {
                pow = pow * n;
            }
        }
        out
    }
}

/// Reduced jet of a real function on the projectivized bundle at one
/// sample: value, `∂z`, `∂w`, `∂z∂z̄`, `∂z∂w̄`, `∂w∂w̄`. The conjugate
/// components follow from reality.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldJet {
    pub val: f64,
    pub z: C64,
    pub w: C64,
    pub zzb: f64,
    pub zwb: C64,
    pub wwb: f64,
}

impl FieldJet {
    pub fn constant(c: f64) -> Self {
        FieldJet { val: c, ..Default::default() }
    }

    pub fn from_jet2(j: &Jet2) -> Self {
        FieldJet {
            val: j.0[Jet2::ONE].re,
            z: j.0[Jet2::Z],
            w: j.0[Jet2::W],
            zzb: j.0[Jet2::ZZB].re,
            zwb: j.0[Jet2::ZWB],
            wwb: j.0[Jet2::WWB].re,
        }
    }

    pub fn from_dual4(d: &Dual4) -> Self {
        FieldJet {
            val: d.0[0].re,
            z: d.0[Dual4::Z],
            w: d.0[Dual4::W],
            zzb: d.0[Dual4::Z | Dual4::ZB].re,
            zwb: d.0[Dual4::Z | Dual4::WB],
            wwb: d.0[Dual4::W | Dual4::WB].re,
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        FieldJet {
            val: self.val * a,
            z: self.z * a,
            w: self.w * a,
            zzb: self.zzb * a,
            zwb: self.zwb * a,
            wwb: self.wwb * a,
        }
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, o: &Self) -> Self {
        FieldJet {
            val: self.val + a * o.val,
            z: self.z + o.z * a,
            w: self.w + o.w * a,
            zzb: self.zzb + a * o.zzb,
            zwb: self.zwb + o.zwb * a,
            wwb: self.wwb + a * o.wwb,
        }
    }

    /// Jet of `f(self)` from `f, f', f''` at `self.val`.
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        FieldJet {
            val: f0,
            z: self.z * f1,
            w: self.w * f1,
            zzb: f1 * self.zzb + f2 * self.z.norm_sqr(),
            zwb: self.zwb * f1 + self.z * self.w.conj() * f2,
            wwb: f1 * self.wwb + f2 * self.w.norm_sqr(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        FieldJet {
            val: self.val * o.val,
            z: self.z * o.val + o.z * self.val,
            w: self.w * o.val + o.w * self.val,
            zzb: self.zzb * o.val + o.zzb * self.val + 2.0 * (self.z * o.z.conj()).re,
            zwb: self.zwb * o.val + o.zwb * self.val + self.z * o.w.conj() + o.z * self.w.conj(),
            wwb: self.wwb * o.val + o.wwb * self.val + 2.0 * (self.w * o.w.conj()).re,
        }
    }

    pub fn exp(&self) -> Self {
        let e = self.val.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Self {
        let x = self.val;
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
    }
}

impl Add for FieldJet {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        self.axpy(1.0, &o)
    }
}
impl Sub for FieldJet {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.axpy(-1.0, &o)
    }
}
impl Mul<f64> for FieldJet {
    type Output = Self;
    fn mul(self, a: f64) -> Self {
        self.scaled(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn jet2_matches_dual4_on_hessian_blocks() {
        let z0 = c(0.3, -0.2);
        let w0 = c(0.7, 0.4);
        let f2 = |z: Jet2, zb: Jet2, w: Jet2, wb: Jet2| ((z * wb + zb * w).exp() * (w * wb + Jet2::constant(c(1.0, 0.0))).ln()).sin();
        let f4 = |z: Dual4, zb: Dual4, w: Dual4, wb: Dual4| ((z * wb + zb * w).exp() * (w * wb + Dual4::constant(c(1.0, 0.0))).ln()).sin();
        let j = f2(
            Jet2::var(z0, Jet2::Z),
            Jet2::var(z0.conj(), Jet2::ZB),
            Jet2::var(w0, Jet2::W),
            Jet2::var(w0.conj(), Jet2::WB),
        );
        let d = f4(
            Dual4::var(z0, Dual4::Z),
            Dual4::var(z0.conj(), Dual4::ZB),
            Dual4::var(w0, Dual4::W),
            Dual4::var(w0.conj(), Dual4::WB),
        );
        let pairs = [
            (Jet2::ONE, 0),
            (Jet2::Z, 1),
            (Jet2::ZB, 2),
            (Jet2::W, 4),
            (Jet2::WB, 8),
            (Jet2::ZZB, 3),
            (Jet2::ZWB, 9),
            (Jet2::ZBW, 6),
            (Jet2::WWB, 12),
        ];
        for (a, b) in pairs {
            assert!((j.0[a] - d.0[b]).norm() < 1e-13, "slot {a}");
        }
    }

    #[test]
    fn dual4_fourth_derivative_of_product() {
        // f = exp(z z̄ w w̄); the all-generator slot is ∂z∂z̄∂w∂w̄ f.
        let (z, w) = (c(0.2, 0.1), c(-0.3, 0.5));
        let d = (Dual4::var(z, 1) * Dual4::var(z.conj(), 2) * Dual4::var(w, 4) * Dual4::var(w.conj(), 8)).exp();
        let a = z.norm_sqr();
        let b = w.norm_sqr();
        // ∂z∂z̄∂w∂w̄ e^{ab} with a = z z̄, b = w w̄.
        // ∂w∂w̄ e^{ab} = h(a) = e^{ab}(a + a²b), then ∂z∂z̄ h(a) = h'(a) + a h''(a).
        let h1 = |a: f64| (a * b).exp() * (b * (a + a * a * b) + 1.0 + 2.0 * a * b);
        let h2 = |a: f64| {
            (a * b).exp() * (b * b * (a + a * a * b) + 2.0 * b * (1.0 + 2.0 * a * b) + 2.0 * b)
        };
        let expected = h1(a) + h2(a) * a;
        assert!((d.0[15].re - expected).abs() < 1e-12, "{} vs {}", d.0[15].re, expected);
    }

    #[test]
    fn field_jet_chain_matches_jet2() {
        let z0 = c(0.1, 0.3);
        let w0 = c(-0.4, 0.2);
        let u = |z: Jet2, zb: Jet2, w: Jet2, wb: Jet2| (z * zb + w * wb * z + wb * w * zb).sin() + w * wb;
        let vars = [
            Jet2::var(z0, Jet2::Z),
            Jet2::var(z0.conj(), Jet2::ZB),
            Jet2::var(w0, Jet2::W),
            Jet2::var(w0.conj(), Jet2::WB),
        ];
        let ju = u(vars[0], vars[1], vars[2], vars[3]);
        let expected = FieldJet::from_jet2(&ju.exp());
        let got = FieldJet::from_jet2(&ju).exp();
        assert!((expected.val - got.val).abs() < 1e-13);
        assert!((expected.zzb - got.zzb).abs() < 1e-12);
        assert!((expected.zwb - got.zwb).norm() < 1e-12);
        assert!((expected.wwb - got.wwb).abs() < 1e-12);
        let prod = FieldJet::mul(&FieldJet::from_jet2(&ju), &FieldJet::from_jet2(&ju));
        let expected = FieldJet::from_jet2(&(ju * ju));
        assert!((expected.zwb - prod.zwb).norm() < 1e-12);
        assert!((expected.zzb - prod.zzb).abs() < 1e-12);
    }
}
