//! Quadrature on polygons (ear-clipping sub-triangulation plus collapsed
//! Gauss rules on each triangle) and Gauss-Legendre rules on edges.

use std::sync::OnceLock;

use thiserror::Error;

use crate::geometry::{check_simple, orient, signed_area, Point, RingDefect};

/// Highest polynomial degree for which polygon rules are provided.
pub const MAX_POLYGON_DEGREE: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("polygon is not simple: {0:?}")]
    NotSimple(RingDefect),
    #[error("polygon is not counterclockwise (signed area {0})")]
    NotCounterClockwise(f64),
    #[error("ear clipping stalled with {0} vertices left")]
    NoEar(usize),
    #[error("unsupported quadrature degree {0} (supported: 1..={MAX_POLYGON_DEGREE})")]
    UnsupportedDegree(usize),
    #[error("edge rule needs at least one point")]
    NoPoints,
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n and its derivative
            let (mut p0, mut p1) = (1.0, 0.0);
            for k in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Quadrature rule on the reference triangle in barycentric coordinates.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    /// Normalised so that they sum to one.
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Collapsed (Duffy) product of Gauss-Legendre rules, exact to `degree`.
    pub fn new(degree: usize) -> Self {
        let n = (degree + 2).div_ceil(2).max(1);
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            let u = 0.5 * (x[i] + 1.0);
            for j in 0..n {
                let v = 0.5 * (x[j] + 1.0);
                let xi = u;
                let eta = v * (1.0 - u);
                points.push([1.0 - xi - eta, xi, eta]);
                // 1/4 from the two interval maps, times 2 to normalise by the reference area
                weights.push(0.5 * w[i] * w[j] * (1.0 - u));
            }
        }
        TriangleRule {
            degree,
            points,
            weights,
        }
    }

    /// Shared rule for `degree`, built once per process.
    pub fn cached(degree: usize) -> Result<&'static TriangleRule, QuadratureError> {
        static RULES: OnceLock<Vec<TriangleRule>> = OnceLock::new();
        if degree == 0 || degree > MAX_POLYGON_DEGREE {
            return Err(QuadratureError::UnsupportedDegree(degree));
        }
        let rules = RULES.get_or_init(|| (0..=MAX_POLYGON_DEGREE).map(TriangleRule::new).collect());
        Ok(&rules[degree])
    }
}

/// Ear-clipping triangulation of a simple counterclockwise ring. Triangles are
/// returned as index triples into `ring`, each counterclockwise.
pub fn triangulate_polygon(ring: &[Point]) -> Result<Vec<[usize; 3]>, QuadratureError> {
    check_simple(ring).map_err(QuadratureError::NotSimple)?;
    let area = signed_area(ring);
    if area <= 0.0 {
        return Err(QuadratureError::NotCounterClockwise(area));
    }
    let n = ring.len();
    if n == 3 {
        return Ok(vec![[0, 1, 2]]);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut tris = Vec::with_capacity(n - 2);
    while idx.len() > 3 {
        let m = idx.len();
        let mut clipped = false;
        for k in 0..m {
            let (ia, ib, ic) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            let (a, b, c) = (ring[ia], ring[ib], ring[ic]);
            if orient(a, b, c) <= 0.0 {
                continue;
            }
            let blocked = idx.iter().any(|&j| {
                if j == ia || j == ib || j == ic {
                    return false;
                }
                let p = ring[j];
                orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0
            });
            if !blocked {
                tris.push([ia, ib, ic]);
                idx.remove(k);
                clipped = true;
                break;
            }
        }
        if !clipped {
            // Only flat (collinear) vertices remain clippable; drop one as a zero-area triangle.
            let flat = (0..m).find(|&k| {
                let (ia, ib, ic) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
                orient(ring[ia], ring[ib], ring[ic]) == 0.0
            });
            match flat {
                Some(k) => {
                    tris.push([idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]]);
                    idx.remove(k);
                }
                None => return Err(QuadratureError::NoEar(m)),
            }
        }
    }
    tris.push([idx[0], idx[1], idx[2]]);
    Ok(tris)
}

/// Quadrature points and weights mapped onto one polygonal cell.
#[derive(Debug, Clone)]
pub struct PolygonQuadrature {
    pub degree: usize,
    pub triangles: Vec<[usize; 3]>,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl PolygonQuadrature {
    pub fn integrate(&self, mut f: impl FnMut(Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Rule exact for polynomials of total degree `degree` on the polygon `ring`.
pub fn polygon_rule(ring: &[Point], degree: usize) -> Result<PolygonQuadrature, QuadratureError> {
    let rule = TriangleRule::cached(degree)?;
    let triangles = triangulate_polygon(ring)?;
    let mut points = Vec::with_capacity(triangles.len() * rule.points.len());
    let mut weights = Vec::with_capacity(points.capacity());
    for t in &triangles {
        let (a, b, c) = (ring[t[0]], ring[t[1]], ring[t[2]]);
        let area = 0.5 * orient(a, b, c);
        for (l, &w) in rule.points.iter().zip(&rule.weights) {
            points.push([
                l[0] * a[0] + l[1] * b[0] + l[2] * c[0],
                l[0] * a[1] + l[1] * b[1] + l[2] * c[1],
            ]);
            weights.push(w * area);
        }
    }
    Ok(PolygonQuadrature {
        degree,
        triangles,
        points,
        weights,
    })
}

/// Gauss-Legendre points on the segment `a`-`b`; weights sum to its length.
#[derive(Debug, Clone)]
pub struct EdgeRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl EdgeRule {
    pub fn integrate(&self, mut f: impl FnMut(Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}

pub fn edge_rule(a: Point, b: Point, npoints: usize) -> Result<EdgeRule, QuadratureError> {
    if npoints == 0 {
        return Err(QuadratureError::NoPoints);
    }
    let (x, w) = gauss_legendre(npoints);
    let len = crate::geometry::dist(a, b);
    let points = x
        .iter()
        .map(|&t| {
            let s = 0.5 * (t + 1.0);
            [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
        })
        .collect();
    let weights = w.iter().map(|&wi| 0.5 * wi * len).collect();
    Ok(EdgeRule { points, weights })
}
