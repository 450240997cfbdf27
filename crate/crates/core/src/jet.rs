//! First-order jets in the spacetime coordinates `(t, x1, .., xn)`.
//!
//! Metric formulas are written once over [`Real`] and evaluated either on
//! plain `f64` or on [`Jet`], which carries the exact first derivatives with
//! respect to time and position. The Christoffel symbols need exactly those
//! derivatives at a fixed tangent vector.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Number of jet slots: time plus up to three spatial coordinates.
pub const JET_SLOTS: usize = 4;

pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    fn re(&self) -> f64;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn powi(self, n: i32) -> Self;

    fn powf(self, e: Self) -> Self {
        (e * self.ln()).exp()
    }

    fn scale(self, c: f64) -> Self {
        self * Self::cst(c)
    }

    fn min(self, other: Self) -> Self {
        if other.re() < self.re() {
            other
        } else {
            self
        }
    }

    fn max(self, other: Self) -> Self {
        if other.re() > self.re() {
            other
        } else {
            self
        }
    }
}

impl Real for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn re(&self) -> f64 {
        *self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    #[inline]
    fn powf(self, e: Self) -> Self {
        f64::powf(self, e)
    }
}

/// Value plus gradient with respect to `(t, x1, x2, x3)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub re: f64,
    pub du: [f64; JET_SLOTS],
}

impl Jet {
    pub fn new(re: f64, du: [f64; JET_SLOTS]) -> Self {
        Jet { re, du }
    }

    /// The coordinate function for slot `slot` evaluated at `value`.
    pub fn variable(value: f64, slot: usize) -> Self {
        let mut du = [0.0; JET_SLOTS];
        du[slot] = 1.0;
        Jet { re: value, du }
    }

    #[inline]
    fn chain(self, re: f64, d: f64) -> Self {
        let mut du = self.du;
        for v in du.iter_mut() {
            *v *= d;
        }
        Jet { re, du }
    }
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(self, o: Jet) -> Jet {
        let mut du = self.du;
        for (a, b) in du.iter_mut().zip(o.du) {
            *a += b;
        }
        Jet { re: self.re + o.re, du }
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(self, o: Jet) -> Jet {
        let mut du = self.du;
        for (a, b) in du.iter_mut().zip(o.du) {
            *a -= b;
        }
        Jet { re: self.re - o.re, du }
    }
}

impl Mul for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, o: Jet) -> Jet {
        let mut du = [0.0; JET_SLOTS];
        for (k, d) in du.iter_mut().enumerate() {
            *d = self.du[k] * o.re + self.re * o.du[k];
        }
        Jet { re: self.re * o.re, du }
    }
}

impl Div for Jet {
    type Output = Jet;
    #[inline]
    fn div(self, o: Jet) -> Jet {
        let q = self.re / o.re;
        let mut du = [0.0; JET_SLOTS];
        for (k, d) in du.iter_mut().enumerate() {
            *d = (self.du[k] - q * o.du[k]) / o.re;
        }
        Jet { re: q, du }
    }
}

impl Neg for Jet {
    type Output = Jet;
    #[inline]
    fn neg(self) -> Jet {
        self.chain(-self.re, -1.0)
    }
}

impl Real for Jet {
    #[inline]
    fn cst(v: f64) -> Self {
        Jet {
            re: v,
            du: [0.0; JET_SLOTS],
        }
    }
    #[inline]
    fn re(&self) -> f64 {
        self.re
    }
    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        self.chain(r, 0.5 / r)
    }
    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.re.ln(), 1.0 / self.re)
    }
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Jet::cst(1.0);
        }
        self.chain(self.re.powi(n), n as f64 * self.re.powi(n - 1))
    }
    fn powf(self, e: Self) -> Self {
        // Integer exponents keep negative bases well defined.
        if e.du.iter().all(|d| *d == 0.0) && e.re.fract() == 0.0 && e.re.abs() < 64.0 {
            return self.powi(e.re as i32);
        }
        (e * self.ln()).exp()
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        self.chain(self.re * c, c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_quotient_rules() {
        let x = Jet::variable(2.0, 1);
        let y = Jet::variable(3.0, 2);
        let f = x * y / (x + y);
        // f = xy/(x+y); df/dx = y^2/(x+y)^2
        assert!((f.re - 1.2).abs() < 1e-15);
        assert!((f.du[1] - 9.0 / 25.0).abs() < 1e-15);
        assert!((f.du[2] - 4.0 / 25.0).abs() < 1e-15);
        assert_eq!(f.du[0], 0.0);
    }

    #[test]
    fn negative_base_integer_power() {
        let y = Jet::variable(-1.5, 2);
        let p = y.powf(Jet::cst(2.0));
        assert!((p.re - 2.25).abs() < 1e-15);
        assert!((p.du[2] + 3.0).abs() < 1e-15);
    }

    #[test]
    fn transcendental_derivatives_match_finite_differences() {
        let f = |v: f64| (v.sin() * v.exp()).sqrt() + v.cos();
        let x0 = 0.7;
        let j = {
            let x = Jet::variable(x0, 0);
            (x.sin() * x.exp()).sqrt() + x.cos()
        };
        let h = 1e-5;
        let fd = (f(x0 + h) - f(x0 - h)) / (2.0 * h);
        assert!((j.du[0] - fd).abs() < 1e-8);
    }
}
