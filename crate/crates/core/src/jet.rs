//! Truncated Taylor series ("jets").
//!
//! A [`Jet`] of order `m` stores `c_0..=c_m` with `c_j = h^(j)(x0) / j!` for
//! some function `h` expanded around an implicit point `x0`. Arithmetic keeps
//! every coefficient exact up to the truncation order, so composing jets yields
//! the derivatives of the composition without finite differences.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    c: Vec<f64>,
}

impl Jet {
    pub fn from_coeffs(c: Vec<f64>) -> Self {
        assert!(!c.is_empty(), "a jet needs at least one coefficient");
        Self { c }
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = value;
        Self { c }
    }

    /// The identity function expanded around `x0`.
    pub fn variable(x0: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = x0;
        if order > 0 {
            c[1] = 1.0;
        }
        Self { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeff(&self, j: usize) -> f64 {
        self.c.get(j).copied().unwrap_or(0.0)
    }

    /// `h^(j)(x0)`.
    pub fn derivative(&self, j: usize) -> f64 {
        let mut fact = 1.0;
        for i in 2..=j {
            fact *= i as f64;
        }
        self.coeff(j) * fact
    }

    pub fn with_value(mut self, value: f64) -> Self {
        self.c[0] = value;
        self
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut c = self.c.clone();
        c.resize(order + 1, 0.0);
        Self { c }
    }

    /// Evaluates the polynomial at offset `h` from the expansion point.
    pub fn eval_offset(&self, h: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, &ci| acc * h + ci)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            c: self.c.iter().map(|v| v * k).collect(),
        }
    }

    pub fn add_scalar(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.c[0] += k;
        out
    }

    fn common_order(&self, other: &Self) -> usize {
        self.order().min(other.order())
    }

    pub fn exp(&self) -> Self {
        let m = self.order();
        let a = &self.c;
        let mut e = vec![0.0; m + 1];
        e[0] = a[0].exp();
        for k in 1..=m {
            let s: f64 = (1..=k).map(|j| j as f64 * a[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        Self { c: e }
    }

    /// Natural log; requires a positive constant term.
    pub fn ln(&self) -> Self {
        let m = self.order();
        let a = &self.c;
        assert!(a[0] > 0.0, "ln of a jet with non-positive value");
        let mut l = vec![0.0; m + 1];
        l[0] = a[0].ln();
        for k in 1..=m {
            let s: f64 = (1..k).map(|j| j as f64 * l[j] * a[k - j]).sum();
            l[k] = (k as f64 * a[k] - s) / (k as f64 * a[0]);
        }
        Self { c: l }
    }

    /// Real power; requires a positive constant term.
    pub fn powf(&self, r: f64) -> Self {
        let m = self.order();
        let a = &self.c;
        assert!(a[0] > 0.0, "powf of a jet with non-positive value");
        let mut p = vec![0.0; m + 1];
        p[0] = a[0].powf(r);
        for k in 1..=m {
            let s: f64 = (1..=k)
                .map(|j| (r * j as f64 - (k - j) as f64) * a[j] * p[k - j])
                .sum();
            p[k] = s / (k as f64 * a[0]);
        }
        Self { c: p }
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut result = Jet::constant(1.0, self.order());
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// `self ∘ inner`: `self` must be expanded at `inner.value()`.
    pub fn compose(&self, inner: &Jet) -> Self {
        let m = self.common_order(inner);
        let mut shift = inner.truncate(m);
        shift.c[0] = 0.0;
        let mut acc = Jet::constant(self.c[m.min(self.order())], m);
        for j in (0..m).rev() {
            acc = &acc * &shift;
            acc.c[0] += self.c[j];
        }
        acc
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let m = self.common_order(rhs);
        Jet {
            c: (0..=m).map(|i| self.c[i] + rhs.c[i]).collect(),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        let m = self.common_order(rhs);
        Jet {
            c: (0..=m).map(|i| self.c[i] - rhs.c[i]).collect(),
        }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: &Jet) -> Jet {
        let m = self.common_order(rhs);
        let mut c = vec![0.0; m + 1];
        for (i, ci) in c.iter_mut().enumerate() {
            *ci = (0..=i).map(|j| self.c[j] * rhs.c[i - j]).sum();
        }
        Jet { c }
    }
}

impl Div for &Jet {
    type Output = Jet;
    fn div(self, rhs: &Jet) -> Jet {
        let m = self.common_order(rhs);
        let b0 = rhs.c[0];
        let mut q = vec![0.0; m + 1];
        for k in 0..=m {
            let s: f64 = (1..=k).map(|j| rhs.c[j] * q[k - j]).sum();
            q[k] = (self.c[k] - s) / b0;
        }
        Jet { c: q }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        (&self).neg()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exp_ln_roundtrip() {
        let x = Jet::variable(0.3, 8);
        let y = (&x * &x).add_scalar(1.0).ln().exp();
        let want = (&x * &x).add_scalar(1.0);
        for j in 0..=8 {
            assert_relative_eq!(y.coeff(j), want.coeff(j), epsilon = 1e-13);
        }
    }

    #[test]
    fn powf_matches_binomial_series() {
        // (1 + h)^{1/2} around h = 0
        let x = Jet::variable(1.0, 5);
        let s = x.powf(0.5);
        let mut b = 1.0;
        for j in 0..=5 {
            assert_relative_eq!(s.coeff(j), b, epsilon = 1e-15);
            b *= (0.5 - j as f64) / (j as f64 + 1.0);
        }
    }

    #[test]
    fn compose_chain_rule() {
        // sin-free check: (x^2)∘(e^x) = e^{2x}
        let inner = Jet::variable(0.2, 6).exp();
        let outer = Jet::variable(inner.value(), 6).powi(2);
        let got = outer.compose(&inner);
        let want = Jet::variable(0.2, 6).scale(2.0).exp();
        for j in 0..=6 {
            assert_relative_eq!(got.coeff(j), want.coeff(j), epsilon = 1e-13);
        }
    }

    #[test]
    fn division_inverts_multiplication() {
        let a = Jet::from_coeffs(vec![2.0, -1.0, 0.5, 3.0]);
        let b = Jet::from_coeffs(vec![1.5, 0.25, -2.0, 1.0]);
        let q = &(&a * &b) / &b;
        for j in 0..4 {
            assert_relative_eq!(q.coeff(j), a.coeff(j), epsilon = 1e-13);
        }
    }

    #[test]
    fn derivative_uses_factorial() {
        let x = Jet::variable(2.0, 4).powi(4);
        assert_relative_eq!(x.derivative(4), 24.0);
        assert_relative_eq!(x.derivative(2), 12.0 * 4.0);
    }
}
