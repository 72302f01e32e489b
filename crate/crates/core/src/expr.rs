//! Closed-form expressions in the chart variables `z, z̄, w, w̄`.
//!
//! Potentials, reference metrics and test functions are written once as
//! [`Expr`] trees and evaluated over any [`Scalar`], so the same formula
//! yields values, Hessian jets or full fourth-order jets.

use crate::error::{Error, Result};
use crate::jet::Scalar;
use crate::C64;
use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    Z,
    Zb,
    W,
    Wb,
}

impl Var {
    fn index(self) -> usize {
        match self {
            Var::Z => 0,
            Var::Zb => 1,
            Var::W => 2,
            Var::Wb => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(C64),
    Var(Var),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Neg(Arc<Expr>),
    Exp(Arc<Expr>),
    Log(Arc<Expr>),
    Sin(Arc<Expr>),
    Cos(Arc<Expr>),
    Powi(Arc<Expr>, i32),
    Powf(Arc<Expr>, f64),
}

impl Expr {
    pub fn c(x: f64) -> Expr {
        Expr::Const(C64::new(x, 0.0))
    }
    pub fn cc(z: C64) -> Expr {
        Expr::Const(z)
    }
    pub fn z() -> Expr {
        Expr::Var(Var::Z)
    }
    pub fn zb() -> Expr {
        Expr::Var(Var::Zb)
    }
    pub fn w() -> Expr {
        Expr::Var(Var::W)
    }
    pub fn wb() -> Expr {
        Expr::Var(Var::Wb)
    }
    pub fn exp(self) -> Expr {
        Expr::Exp(Arc::new(self))
    }
    pub fn ln(self) -> Expr {
        Expr::Log(Arc::new(self))
    }
    pub fn sin(self) -> Expr {
        Expr::Sin(Arc::new(self))
    }
    pub fn cos(self) -> Expr {
        Expr::Cos(Arc::new(self))
    }
    pub fn powi(self, n: i32) -> Expr {
        Expr::Powi(Arc::new(self), n)
    }
    pub fn powf(self, p: f64) -> Expr {
        Expr::Powf(Arc::new(self), p)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == C64::new(0.0, 0.0))
    }

    /// Replaces every variable by the expression `f(var)`.
    pub fn substitute(&self, f: &dyn Fn(Var) -> Expr) -> Expr {
        let s = |e: &Arc<Expr>| Arc::new(e.substitute(f));
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(v) => f(*v),
            Expr::Add(a, b) => Expr::Add(s(a), s(b)),
            Expr::Sub(a, b) => Expr::Sub(s(a), s(b)),
            Expr::Mul(a, b) => Expr::Mul(s(a), s(b)),
            Expr::Div(a, b) => Expr::Div(s(a), s(b)),
            Expr::Neg(a) => Expr::Neg(s(a)),
            Expr::Exp(a) => Expr::Exp(s(a)),
            Expr::Log(a) => Expr::Log(s(a)),
            Expr::Sin(a) => Expr::Sin(s(a)),
            Expr::Cos(a) => Expr::Cos(s(a)),
            Expr::Powi(a, n) => Expr::Powi(s(a), *n),
            Expr::Powf(a, p) => Expr::Powf(s(a), *p),
        }
    }

    /// Complex conjugate: swaps barred and unbarred variables and conjugates
    /// constants.
    pub fn conj(&self) -> Expr {
        let s = |e: &Arc<Expr>| Arc::new(e.conj());
        match self {
            Expr::Const(c) => Expr::Const(c.conj()),
            Expr::Var(v) => Expr::Var(match v {
                Var::Z => Var::Zb,
                Var::Zb => Var::Z,
                Var::W => Var::Wb,
                Var::Wb => Var::W,
            }),
            Expr::Add(a, b) => Expr::Add(s(a), s(b)),
            Expr::Sub(a, b) => Expr::Sub(s(a), s(b)),
            Expr::Mul(a, b) => Expr::Mul(s(a), s(b)),
            Expr::Div(a, b) => Expr::Div(s(a), s(b)),
            Expr::Neg(a) => Expr::Neg(s(a)),
            Expr::Exp(a) => Expr::Exp(s(a)),
            Expr::Log(a) => Expr::Log(s(a)),
            Expr::Sin(a) => Expr::Sin(s(a)),
            Expr::Cos(a) => Expr::Cos(s(a)),
            Expr::Powi(a, n) => Expr::Powi(s(a), *n),
            Expr::Powf(a, p) => Expr::Powf(s(a), *p),
        }
    }

    pub fn compile(&self) -> Program {
        let mut p = Program { ops: Vec::new() };
        p.emit(self);
        p
    }

    pub fn eval<S: Scalar>(&self, vars: &[S; 4]) -> S {
        self.compile().eval(vars)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $v:ident) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $m(self, o: Expr) -> Expr {
                Expr::$v(Arc::new(self), Arc::new(o))
            }
        }
        impl $tr<f64> for Expr {
            type Output = Expr;
            fn $m(self, o: f64) -> Expr {
                Expr::$v(Arc::new(self), Arc::new(Expr::c(o)))
            }
        }
        impl $tr<Expr> for f64 {
            type Output = Expr;
            fn $m(self, o: Expr) -> Expr {
                Expr::$v(Arc::new(Expr::c(self)), Arc::new(o))
            }
        }
    };
}
binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Arc::new(self))
    }
}

#[derive(Clone, Debug)]
enum Op {
    Const(C64),
    Var(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Neg(usize),
    Exp(usize),
    Log(usize),
    Sin(usize),
    Cos(usize),
    Powi(usize, i32),
    Powf(usize, f64),
}

/// Straight-line form of an expression; register `i` holds the result of
/// instruction `i` and the last register is the value.
#[derive(Clone, Debug)]
pub struct Program {
    ops: Vec<Op>,
}

impl Program {
    fn emit(&mut self, e: &Expr) -> usize {
        let op = match e {
            Expr::Const(c) => Op::Const(*c),
            Expr::Var(v) => Op::Var(v.index()),
            Expr::Add(a, b) => {
                let (x, y) = (self.emit(a), self.emit(b));
                Op::Add(x, y)
            }
            Expr::Sub(a, b) => {
                let (x, y) = (self.emit(a), self.emit(b));
                Op::Sub(x, y)
            }
            Expr::Mul(a, b) => {
                let (x, y) = (self.emit(a), self.emit(b));
                Op::Mul(x, y)
            }
            Expr::Div(a, b) => {
                let (x, y) = (self.emit(a), self.emit(b));
                Op::Div(x, y)
            }
            Expr::Neg(a) => Op::Neg(self.emit(a)),
            Expr::Exp(a) => Op::Exp(self.emit(a)),
            Expr::Log(a) => Op::Log(self.emit(a)),
            Expr::Sin(a) => Op::Sin(self.emit(a)),
            Expr::Cos(a) => Op::Cos(self.emit(a)),
            Expr::Powi(a, n) => Op::Powi(self.emit(a), *n),
            Expr::Powf(a, p) => Op::Powf(self.emit(a), *p),
        };
        self.ops.push(op);
        self.ops.len() - 1
    }

    pub fn eval<S: Scalar>(&self, vars: &[S; 4]) -> S {
        let mut r: Vec<S> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let v = match *op {
                Op::Const(c) => S::constant(c),
                Op::Var(i) => vars[i],
                Op::Add(a, b) => r[a] + r[b],
                Op::Sub(a, b) => r[a] - r[b],
                Op::Mul(a, b) => r[a] * r[b],
                Op::Div(a, b) => r[a].div(r[b]),
                Op::Neg(a) => -r[a],
                Op::Exp(a) => r[a].exp(),
                Op::Log(a) => r[a].ln(),
                Op::Sin(a) => r[a].sin(),
                Op::Cos(a) => r[a].cos(),
                Op::Powi(a, n) => r[a].powi(n),
                Op::Powf(a, p) => r[a].powf(p),
            };
            r.push(v);
        }
        r.pop().expect("empty program")
    }
}

/// Named derived variables available to the parser (`x`, `y`, `h`, ...).
#[derive(Clone, Debug, Default)]
pub struct VarContext {
    pub names: HashMap<String, Expr>,
}

impl VarContext {
    /// Lattice coordinates on the torus `ℂ/(ℤ + τℤ)`: `z = x + τ y`.
    pub fn torus(tau: C64) -> Self {
        let i = C64::new(0.0, 1.0);
        let y = (Expr::z() - Expr::zb()) / Expr::cc(2.0 * i * tau.im);
        let x = (Expr::z() + Expr::zb()) * 0.5 - tau.re * y.clone();
        let mut names = HashMap::new();
        names.insert("x".into(), x);
        names.insert("y".into(), y);
        VarContext { names }
    }

    /// Sphere coordinates on the first chart of the projective line:
    /// `h = (1-|z|²)/(1+|z|²)`, `x + i y = 2z/(1+|z|²)`.
    pub fn sphere() -> Self {
        let r2 = Expr::z() * Expr::zb();
        let den = 1.0 + r2.clone();
        let mut names = HashMap::new();
        names.insert("h".into(), (1.0 - r2) / den.clone());
        names.insert("x".into(), (Expr::z() + Expr::zb()) / den.clone());
        names.insert(
            "y".into(),
            (Expr::z() - Expr::zb()) / (Expr::cc(C64::new(0.0, 1.0)) * den),
        );
        VarContext { names }
    }
}

/// Parses an infix expression. Grammar: `+ - * / ^`, parentheses, numbers,
/// `pi`, `i`, the variables `z zb w wb`, names from `ctx`, and the functions
/// `sin cos exp log sqrt`. Exponents must be numeric literals.
pub fn parse(src: &str, ctx: &VarContext) -> Result<Expr> {
    let mut p = Parser { s: src.as_bytes(), pos: 0, ctx };
    let e = p.expr()?;
    p.ws();
    if p.pos != p.s.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    ctx: &'a VarContext,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse { pos: self.pos, msg: msg.to_string() }
    }
    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }
    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.pos).copied()
    }
    fn expr(&mut self) -> Result<Expr> {
        let mut e = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.pos += 1;
                    e = e + self.term()?;
                }
                b'-' => {
                    self.pos += 1;
                    e = e - self.term()?;
                }
                _ => break,
            }
        }
        Ok(e)
    }
    fn term(&mut self) -> Result<Expr> {
        let mut e = self.unary()?;
        while let Some(c) = self.peek() {
            match c {
                b'*' => {
                    self.pos += 1;
                    e = e * self.unary()?;
                }
                b'/' => {
                    self.pos += 1;
                    e = e / self.unary()?;
                }
                _ => break,
            }
        }
        Ok(e)
    }
    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(-self.unary()?);
        }
        if self.peek() == Some(b'+') {
            self.pos += 1;
            return self.unary();
        }
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let neg = if self.peek() == Some(b'-') {
                self.pos += 1;
                true
            } else {
                false
            };
            let p = self.number()?;
            let p = if neg { -p } else { p };
            if p.fract() == 0.0 && p.abs() < 64.0 {
                return Ok(base.powi(p as i32));
            }
            return Ok(base.powf(p));
        }
        Ok(base)
    }
    fn number(&mut self) -> Result<f64> {
        self.ws();
        let start = self.pos;
        while self.pos < self.s.len() {
            let c = self.s[self.pos];
            let exp_sign = (c == b'-' || c == b'+')
                && self.pos > start
                && matches!(self.s[self.pos - 1], b'e' | b'E');
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .ok()
            .and_then(|t| t.parse::<f64>().ok())
            .ok_or_else(|| Error::Parse { pos: start, msg: "expected a number".into() })
    }
    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(Expr::c(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("");
                if self.peek() == Some(b'(') {
                    self.pos += 1;
                    let arg = self.expr()?;
                    if self.peek() != Some(b')') {
                        return Err(self.err("expected `)` after function argument"));
                    }
                    self.pos += 1;
                    return match name {
                        "sin" => Ok(arg.sin()),
                        "cos" => Ok(arg.cos()),
                        "exp" => Ok(arg.exp()),
                        "log" | "ln" => Ok(arg.ln()),
                        "sqrt" => Ok(arg.powf(0.5)),
                        _ => Err(Error::Parse { pos: start, msg: format!("unknown function `{name}`") }),
                    };
                }
                match name {
                    "z" => Ok(Expr::z()),
                    "zb" => Ok(Expr::zb()),
                    "w" => Ok(Expr::w()),
                    "wb" => Ok(Expr::wb()),
                    "pi" => Ok(Expr::c(std::f64::consts::PI)),
                    "i" => Ok(Expr::cc(C64::new(0.0, 1.0))),
                    _ => self
                        .ctx
                        .names
                        .get(name)
                        .cloned()
                        .ok_or_else(|| Error::Parse { pos: start, msg: format!("unknown name `{name}`") }),
                }
            }
            _ => Err(self.err("unexpected token")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet2;

    #[test]
    fn parse_and_eval_matches_builder() {
        let ctx = VarContext::torus(C64::new(0.0, 1.0));
        let e = parse("0.1*sin(2*pi*x)*w*wb/(1+w*wb)^2 - 3e-1*cos(y)", &ctx).unwrap();
        let z = C64::new(0.25, 0.4);
        let w = C64::new(-0.3, 0.6);
        let v = e.eval(&[z, z.conj(), w, w.conj()]);
        let r2 = w.norm_sqr();
        let expected = 0.1 * (2.0 * std::f64::consts::PI * 0.25).sin() * r2 / (1.0 + r2).powi(2) - 0.3 * 0.4f64.cos();
        assert!((v.re - expected).abs() < 1e-14 && v.im.abs() < 1e-14);
    }

    #[test]
    fn parse_errors_carry_position() {
        let ctx = VarContext::default();
        assert!(matches!(parse("1 + foo", &ctx), Err(Error::Parse { pos: 4, .. })));
        assert!(parse("sin(z", &ctx).is_err());
        assert!(parse("z ^ w", &ctx).is_err());
    }

    #[test]
    fn conj_of_real_expression_is_itself_numerically() {
        let e = (Expr::z() * Expr::wb()).exp() + (Expr::zb() * Expr::w()).exp();
        let z = C64::new(0.1, 0.2);
        let w = C64::new(0.3, -0.5);
        let a = e.eval(&[z, z.conj(), w, w.conj()]);
        let b = e.conj().eval(&[z, z.conj(), w, w.conj()]);
        assert!((a - b).norm() < 1e-15 && a.im.abs() < 1e-15);
    }

    #[test]
    fn substitution_inverts_chart() {
        let e = Expr::z() * Expr::zb() / (1.0 + Expr::z() * Expr::zb());
        let inv = e.substitute(&|v| match v {
            Var::Z => 1.0 / Expr::z(),
            Var::Zb => 1.0 / Expr::zb(),
            other => Expr::Var(other),
        });
        let z = C64::new(0.4, -0.1);
        let a = inv.eval(&[z, z.conj(), z, z]);
        let zi = 1.0 / z;
        let b = e.eval(&[zi, zi.conj(), z, z]);
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn sphere_height_hessian() {
        // h = (1-|z|²)/(1+|z|²) has ∂z∂z̄ h = -2(1-|z|²)/(1+|z|²)³.
        let h = VarContext::sphere().names["h"].clone();
        let z = C64::new(0.3, 0.7);
        let j: Jet2 = h.eval(&[
            Jet2::var(z, Jet2::Z),
            Jet2::var(z.conj(), Jet2::ZB),
            Jet2::var(C64::new(0.0, 0.0), Jet2::W),
            Jet2::var(C64::new(0.0, 0.0), Jet2::WB),
        ]);
        let expected = -2.0 * (1.0 - z.norm_sqr()) / (1.0 + z.norm_sqr()).powi(3);
        assert!((j.0[Jet2::ZZB].re - expected).abs() < 1e-14);
    }
}
