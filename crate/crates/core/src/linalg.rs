//! Small dense complex matrices for rank-2 tensors.

use crate::C64;

pub type M2 = [[C64; 2]; 2];
pub type V2 = [C64; 2];

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub fn zeros() -> M2 {
    [[ZERO; 2]; 2]
}

pub fn identity() -> M2 {
    [[C64::new(1.0, 0.0), ZERO], [ZERO, C64::new(1.0, 0.0)]]
}

pub fn add(a: &M2, b: &M2) -> M2 {
    let mut r = zeros();
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][j] + b[i][j];
        }
    }
    r
}

pub fn sub(a: &M2, b: &M2) -> M2 {
    let mut r = zeros();
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][j] - b[i][j];
        }
    }
    r
}

pub fn scale(a: &M2, s: C64) -> M2 {
    let mut r = *a;
    for row in r.iter_mut() {
        for x in row.iter_mut() {
            *x *= s;
        }
    }
    r
}

pub fn mul(a: &M2, b: &M2) -> M2 {
    let mut r = zeros();
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

pub fn det(a: &M2) -> C64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn trace(a: &M2) -> C64 {
    a[0][0] + a[1][1]
}

pub fn inv(a: &M2) -> M2 {
    let d = 1.0 / det(a);
    [[a[1][1] * d, -a[0][1] * d], [-a[1][0] * d, a[0][0] * d]]
}

/// Largest entry modulus.
pub fn max_abs(a: &M2) -> f64 {
    a.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max)
}

/// `xᵀ A ȳ`.
pub fn form(a: &M2, x: &V2, y: &V2) -> C64 {
    let mut s = ZERO;
    for i in 0..2 {
        for j in 0..2 {
            s += x[i] * a[i][j] * y[j].conj();
        }
    }
    s
}

/// Eigenvalues of a Hermitian 2×2 matrix, ascending.
pub fn hermitian_eigenvalues(a: &M2) -> (f64, f64) {
    let p = 0.5 * (a[0][0].re + a[1][1].re);
    let q = 0.5 * (a[0][0].re - a[1][1].re);
    let r = (q * q + a[0][1].norm_sqr()).sqrt();
    (p - r, p + r)
}

/// Hermitian defect `max |a_ij - conj(a_ji)|`.
pub fn hermitian_defect(a: &M2) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            m = m.max((a[i][j] - a[j][i].conj()).norm());
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_eigenvalues() {
        let a: M2 = [[C64::new(2.0, 0.0), C64::new(0.5, 0.3)], [C64::new(0.5, -0.3), C64::new(1.0, 0.0)]];
        let p = mul(&a, &inv(&a));
        assert!(max_abs(&sub(&p, &identity())) < 1e-15);
        let (l0, l1) = hermitian_eigenvalues(&a);
        assert!((l0 + l1 - 3.0).abs() < 1e-14);
        assert!((l0 * l1 - det(&a).re).abs() < 1e-14);
    }
}
