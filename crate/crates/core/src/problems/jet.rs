//! Truncated bivariate Taylor arithmetic ("jets") through total order 4.
//!
//! A jet stores the Taylor coefficients c_ij of a function about a point,
//! f(x0 + dx, y0 + dy) ≈ Σ c_ij dx^i dy^j for i + j ≤ 4, so that
//! ∂^{i+j} f / ∂x^i ∂y^j = i! j! c_ij. Products and compositions with
//! elementary functions propagate all partial derivatives exactly (up to
//! rounding), which is what the singular L-shape loads need.

use std::ops::{Add, Mul, Neg, Sub};

pub const ORDER: usize = 4;
const LEN: usize = 15;

/// Position of c_ij in the coefficient array.
const fn slot(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

const FACT: [f64; 5] = [1.0, 1.0, 2.0, 6.0, 24.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    c: [f64; LEN],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; LEN];
        c[0] = v;
        Jet { c }
    }

    /// The coordinate function x (axis 0) or y (axis 1) about value `v`.
    pub fn variable(v: f64, axis: usize) -> Self {
        let mut j = Jet::constant(v);
        j.c[if axis == 0 { slot(1, 0) } else { slot(0, 1) }] = 1.0;
        j
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// ∂^{i+j}/∂x^i∂y^j at the expansion point.
    pub fn derivative(&self, i: usize, j: usize) -> f64 {
        assert!(i + j <= ORDER);
        self.c[slot(i, j)] * FACT[i] * FACT[j]
    }

    pub fn scale(mut self, s: f64) -> Self {
        for v in &mut self.c {
            *v *= s;
        }
        self
    }

    /// f(self) given f and its first four derivatives at self.value().
    pub fn compose(&self, derivs: [f64; 5]) -> Self {
        let mut delta = *self;
        delta.c[0] = 0.0;
        let mut out = Jet::constant(derivs[0]);
        let mut power = Jet::constant(1.0);
        for (k, &d) in derivs.iter().enumerate().skip(1) {
            power = power * delta;
            out = out + power.scale(d / FACT[k]);
        }
        out
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c, s])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s, c])
    }

    /// self^p for a positive base value.
    pub fn powf(&self, p: f64) -> Self {
        let a = self.value();
        let mut d = [0.0; 5];
        let mut coef = 1.0;
        for (k, dk) in d.iter_mut().enumerate() {
            *dk = coef * a.powf(p - k as f64);
            coef *= p - k as f64;
        }
        self.compose(d)
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn recip(&self) -> Self {
        let a = self.value();
        let r = 1.0 / a;
        self.compose([r, -r * r, 2.0 * r.powi(3), -6.0 * r.powi(4), 24.0 * r.powi(5)])
    }

    /// atan2(y, x) about a point away from the origin.
    pub fn atan2(y: Jet, x: Jet) -> Self {
        let (x0, y0) = (x.value(), y.value());
        let theta0 = y0.atan2(x0);
        // θ = θ0 + atan(w) with w = (y x0 - x y0)/(x x0 + y y0), w(x0, y0) = 0
        let num = y.scale(x0) - x.scale(y0);
        let den = x.scale(x0) + y.scale(y0);
        let w = num * den.recip();
        let mut t = w.compose([0.0, 1.0, 0.0, -2.0, 0.0]);
        t.c[0] += theta0;
        t
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        for (a, b) in self.c.iter_mut().zip(rhs.c) {
            *a += b;
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: Jet) -> Jet {
        for (a, b) in self.c.iter_mut().zip(rhs.c) {
            *a -= b;
        }
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let mut c = [0.0; LEN];
        for d1 in 0..=ORDER {
            for j1 in 0..=d1 {
                let a = self.c[slot(d1 - j1, j1)];
                if a == 0.0 {
                    continue;
                }
                for d2 in 0..=ORDER - d1 {
                    for j2 in 0..=d2 {
                        let (i, j) = (d1 - j1 + d2 - j2, j1 + j2);
                        c[slot(i, j)] += a * rhs.c[slot(d2 - j2, j2)];
                    }
                }
            }
        }
        Jet { c }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}
