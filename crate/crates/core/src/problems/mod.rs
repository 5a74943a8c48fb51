//! Manufactured von Kármán problems with known exact solutions.

pub mod jet;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;
use crate::mesh::Domain;
use jet::Jet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("interior angle {0} is outside (π, 2π)")]
    AngleOutOfRange(f64),
    #[error("no sign change of sin²(αω) - α²sin²ω in (1/2, 1) for ω = {0}")]
    NoBracket(f64),
}

/// Value, gradient and Hessian of a scalar field at a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Derivatives {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl Derivatives {
    pub fn laplacian(&self) -> f64 {
        self.hess[0][0] + self.hess[1][1]
    }

    fn from_jet(j: &Jet) -> Self {
        Derivatives {
            value: j.value(),
            grad: [j.derivative(1, 0), j.derivative(0, 1)],
            hess: [
                [j.derivative(2, 0), j.derivative(1, 1)],
                [j.derivative(1, 1), j.derivative(0, 2)],
            ],
        }
    }
}

/// von Kármán bracket [a, b] = a_xx b_yy + a_yy b_xx - 2 a_xy b_xy.
pub fn bracket(a: &Derivatives, b: &Derivatives) -> f64 {
    a.hess[0][0] * b.hess[1][1] + a.hess[1][1] * b.hess[0][0] - 2.0 * a.hess[0][1] * b.hess[0][1]
}

fn bilaplacian(j: &Jet) -> f64 {
    j.derivative(4, 0) + 2.0 * j.derivative(2, 2) + j.derivative(0, 4)
}

/// Corner exponent: the root α ∈ (1/2, 1) of sin²(αω) = α² sin²ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularExponent {
    pub omega: f64,
    pub alpha: f64,
}

impl SingularExponent {
    pub fn residual(&self) -> f64 {
        exponent_residual(self.alpha, self.omega)
    }
}

/// sin²(αω) - α² sin²ω.
pub fn exponent_residual(alpha: f64, omega: f64) -> f64 {
    (alpha * omega).sin().powi(2) - alpha * alpha * omega.sin().powi(2)
}

fn exponent_residual_derivative(alpha: f64, omega: f64) -> f64 {
    omega * (2.0 * alpha * omega).sin() - 2.0 * alpha * omega.sin().powi(2)
}

/// Finds the smallest root above 1/2 (α = 1 is always a root and is excluded).
pub fn find_alpha(omega: f64) -> Result<SingularExponent, ProblemError> {
    if !(omega > PI && omega < 2.0 * PI) {
        return Err(ProblemError::AngleOutOfRange(omega));
    }
    const STEPS: usize = 1000;
    let at = |k: usize| 0.5 + 0.5 * k as f64 / STEPS as f64;
    let mut bracket = None;
    for k in 1..STEPS - 1 {
        let (a, b) = (at(k), at(k + 1));
        if exponent_residual(a, omega) * exponent_residual(b, omega) <= 0.0 {
            bracket = Some((a, b));
            break;
        }
    }
    let (mut lo, mut hi) = bracket.ok_or(ProblemError::NoBracket(omega))?;
    let f_lo = exponent_residual(lo, omega);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if exponent_residual(mid, omega) * f_lo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut alpha = 0.5 * (lo + hi);
    for _ in 0..3 {
        let step = exponent_residual(alpha, omega) / exponent_residual_derivative(alpha, omega);
        if !step.is_finite() {
            break;
        }
        alpha -= step;
    }
    Ok(SingularExponent { omega, alpha })
}

/// Angular profile g_{α,ω}(θ) of the corner singularity, vanishing with its
/// derivative at θ = 0 and θ = ω.
fn angular_profile(theta: Jet, e: &SingularExponent) -> Jet {
    let (a, w) = (e.alpha, e.omega);
    let sin_part = |t: f64| ((a - 1.0) * t).sin() / (a - 1.0) - ((a + 1.0) * t).sin() / (a + 1.0);
    let cos_part_w = ((a - 1.0) * w).cos() - ((a + 1.0) * w).cos();
    let cos_theta = (theta * (a - 1.0)).cos() - (theta * (a + 1.0)).cos();
    let sin_theta = (theta * (a - 1.0)).sin().scale(1.0 / (a - 1.0))
        - (theta * (a + 1.0)).sin().scale(1.0 / (a + 1.0));
    cos_theta.scale(sin_part(w)) - sin_theta.scale(cos_part_w)
}

/// Jet of the biharmonic corner function r^{1+α} g_{α,ω}(θ) about `p` (p ≠ 0),
/// with θ ∈ [0, 2π).
pub fn singular_jet(e: &SingularExponent, p: Point) -> Jet {
    let x = Jet::variable(p[0], 0);
    let y = Jet::variable(p[1], 1);
    let r = (x * x + y * y).sqrt();
    let mut theta = Jet::atan2(y, x);
    if theta.value() < 0.0 {
        theta = theta + 2.0 * PI;
    }
    r.powf(1.0 + e.alpha) * angular_profile(theta, e)
}

fn lshape_jet(e: &SingularExponent, p: Point) -> Jet {
    let x = Jet::variable(p[0], 0);
    let y = Jet::variable(p[1], 1);
    let bx = x * x + -1.0;
    let by = y * y + -1.0;
    let bubble = bx * bx * by * by;
    bubble * singular_jet(e, p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Zero,
    Square,
    LShape(SingularExponent),
}

/// Exact (u, v) with loads f = Δ²u - [u,v] and g = Δ²v + ½[u,u].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedProblem {
    kind: Kind,
}

/// t²(1-t)² and its first four derivatives.
fn quartic(t: f64) -> [f64; 5] {
    [
        t * t * (1.0 - t) * (1.0 - t),
        2.0 * t - 6.0 * t * t + 4.0 * t * t * t,
        2.0 - 12.0 * t + 12.0 * t * t,
        -12.0 + 24.0 * t,
        24.0,
    ]
}

/// sin²(πt) and its first four derivatives.
fn sine_squared(t: f64) -> [f64; 5] {
    let (s2, c2) = (2.0 * PI * t).sin_cos();
    let s = (PI * t).sin();
    [
        s * s,
        PI * s2,
        2.0 * PI * PI * c2,
        -4.0 * PI.powi(3) * s2,
        -8.0 * PI.powi(4) * c2,
    ]
}

fn separable(fx: &[f64; 5], fy: &[f64; 5]) -> (Derivatives, f64) {
    let d = Derivatives {
        value: fx[0] * fy[0],
        grad: [fx[1] * fy[0], fx[0] * fy[1]],
        hess: [
            [fx[2] * fy[0], fx[1] * fy[1]],
            [fx[1] * fy[1], fx[0] * fy[2]],
        ],
    };
    let bilap = fx[4] * fy[0] + 2.0 * fx[2] * fy[2] + fx[0] * fy[4];
    (d, bilap)
}

impl ManufacturedProblem {
    /// u = x²y²(1-x)²(1-y)², v = sin²(πx) sin²(πy) on the unit square.
    pub fn square() -> Self {
        ManufacturedProblem { kind: Kind::Square }
    }

    /// u = v = (x²-1)²(y²-1)² r^{1+α} g_{α,ω}(θ) on the L-shape, ω = 3π/2.
    pub fn lshape() -> Self {
        let e = find_alpha(1.5 * PI).expect("3π/2 lies in (π, 2π)");
        ManufacturedProblem { kind: Kind::LShape(e) }
    }

    /// u = v = 0 with zero loads on the unit square.
    pub fn zero() -> Self {
        ManufacturedProblem { kind: Kind::Zero }
    }

    pub fn domain(&self) -> Domain {
        match self.kind {
            Kind::LShape(_) => Domain::LShape,
            _ => Domain::UnitSquare,
        }
    }

    /// Regularity index: 1 on convex domains, the corner exponent on the L-shape.
    pub fn alpha(&self) -> f64 {
        match self.kind {
            Kind::LShape(e) => e.alpha,
            _ => 1.0,
        }
    }

    pub fn singular_exponent(&self) -> Option<SingularExponent> {
        match self.kind {
            Kind::LShape(e) => Some(e),
            _ => None,
        }
    }

    /// Derivatives of (u, v) through order two plus Δ²u and Δ²v.
    fn evaluate(&self, p: Point) -> (Derivatives, Derivatives, f64, f64) {
        match self.kind {
            Kind::Zero => Default::default(),
            Kind::Square => {
                let (u, bu) = separable(&quartic(p[0]), &quartic(p[1]));
                let (v, bv) = separable(&sine_squared(p[0]), &sine_squared(p[1]));
                (u, v, bu, bv)
            }
            Kind::LShape(e) => {
                if p[0] == 0.0 && p[1] == 0.0 {
                    return Default::default();
                }
                let j = lshape_jet(&e, p);
                let d = Derivatives::from_jet(&j);
                let b = bilaplacian(&j);
                (d, d, b, b)
            }
        }
    }

    pub fn u(&self, p: Point) -> Derivatives {
        self.evaluate(p).0
    }

    pub fn v(&self, p: Point) -> Derivatives {
        self.evaluate(p).1
    }

    pub fn bilaplacian_u(&self, p: Point) -> f64 {
        self.evaluate(p).2
    }

    pub fn bilaplacian_v(&self, p: Point) -> f64 {
        self.evaluate(p).3
    }

    /// f = Δ²u - [u, v]
    pub fn f(&self, p: Point) -> f64 {
        let (u, v, bu, _) = self.evaluate(p);
        bu - bracket(&u, &v)
    }

    /// g = Δ²v + ½[u, u]
    pub fn g(&self, p: Point) -> f64 {
        let (u, _, _, bv) = self.evaluate(p);
        bv + 0.5 * bracket(&u, &u)
    }
}
