//! Independent oracles shared by the integration tests. Nothing here calls
//! into the element or assembly code paths it is used to check.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vkplate::mesh::PolygonalMesh;

pub type Point = [f64; 2];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Counterclockwise polygon, star-shaped about `center`, with `n` vertices.
pub fn star_polygon(rng: &mut impl Rng, n: usize, center: Point, scale: f64) -> Vec<Point> {
    let mut angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // keep neighbouring angles apart so the ring stays comfortably simple
    for k in 0..n {
        angles[k] = angles[k] * 0.5 + std::f64::consts::TAU * k as f64 / n as f64 * 0.5;
    }
    angles
        .iter()
        .map(|&t| {
            let r = scale * rng.gen_range(0.5..1.0);
            [center[0] + r * t.cos(), center[1] + r * t.sin()]
        })
        .collect()
}

pub fn shoelace(ring: &[Point]) -> f64 {
    let n = ring.len();
    0.5 * (0..n)
        .map(|k| {
            let (a, b) = (ring[k], ring[(k + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
}

/// Gauss–Legendre on [0, 1] via Golub–Welsch, independent of the crate's routine.
pub fn gauss01(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = j.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], 2.0 * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    (
        pairs.iter().map(|p| 0.5 * (p.0 + 1.0)).collect(),
        pairs.iter().map(|p| 0.5 * p.1).collect(),
    )
}

/// ∫_P x^a y^b by Green's theorem: ∮ x^{a+1} y^b /(a+1) dy, exact edge quadrature.
pub fn monomial_integral(ring: &[Point], a: u32, b: u32) -> f64 {
    let (t, w) = gauss01(((a + b) as usize + 2) / 2 + 1);
    let n = ring.len();
    let mut s = 0.0;
    for k in 0..n {
        let (p, q) = (ring[k], ring[(k + 1) % n]);
        let dy = q[1] - p[1];
        for (ti, wi) in t.iter().zip(&w) {
            let x = p[0] + ti * (q[0] - p[0]);
            let y = p[1] + ti * (q[1] - p[1]);
            s += wi * x.powi(a as i32 + 1) * y.powi(b as i32) / (a + 1) as f64 * dy;
        }
    }
    s
}

/// ∫ over a triangle of a polynomial by a classical degree-2 rule (edge midpoints).
pub fn triangle_midpoint_rule(t: [Point; 3], f: impl Fn(Point) -> f64) -> f64 {
    let area = 0.5 * ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (t[1][1] - t[0][1]));
    let mid = |a: Point, b: Point| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    area / 3.0 * (f(mid(t[0], t[1])) + f(mid(t[1], t[2])) + f(mid(t[2], t[0])))
}

/// Classical Morley element on a triangle in the unscaled monomial basis
/// {1, x, y, x², xy, y²}: basis coefficients C = D⁻¹, where D holds vertex
/// values and edge moments ∫_e ∂m/∂n_e with n_e = sign·(outward normal).
pub struct MorleyTriangle {
    pub coeffs: DMatrix<f64>,
    pub vertices: [Point; 3],
}

fn mono(p: Point) -> [f64; 6] {
    [1.0, p[0], p[1], p[0] * p[0], p[0] * p[1], p[1] * p[1]]
}

fn mono_grad(p: Point) -> [[f64; 2]; 6] {
    [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [2.0 * p[0], 0.0], [p[1], p[0]], [0.0, 2.0 * p[1]]]
}

const MONO_HESS: [[[f64; 2]; 2]; 6] = [
    [[0.0, 0.0], [0.0, 0.0]],
    [[0.0, 0.0], [0.0, 0.0]],
    [[0.0, 0.0], [0.0, 0.0]],
    [[2.0, 0.0], [0.0, 0.0]],
    [[0.0, 1.0], [1.0, 0.0]],
    [[0.0, 0.0], [0.0, 2.0]],
];

impl MorleyTriangle {
    pub fn new(v: [Point; 3], signs: [f64; 3]) -> Self {
        let (t, w) = gauss01(3);
        let mut d = DMatrix::zeros(6, 6);
        for i in 0..3 {
            let m = mono(v[i]);
            for j in 0..6 {
                d[(i, j)] = m[j];
            }
            let (a, b) = (v[i], v[(i + 1) % 3]);
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            let n = [signs[i] * (b[1] - a[1]) / len, -signs[i] * (b[0] - a[0]) / len];
            for (ti, wi) in t.iter().zip(&w) {
                let p = [a[0] + ti * (b[0] - a[0]), a[1] + ti * (b[1] - a[1])];
                let g = mono_grad(p);
                for j in 0..6 {
                    d[(3 + i, j)] += wi * len * (g[j][0] * n[0] + g[j][1] * n[1]);
                }
            }
        }
        MorleyTriangle {
            coeffs: d.try_inverse().expect("Morley dofs are unisolvent"),
            vertices: v,
        }
    }

    fn area(&self) -> f64 {
        shoelace(&self.vertices)
    }

    /// Hessian of basis function i.
    pub fn hessian(&self, i: usize) -> [[f64; 2]; 2] {
        let mut h = [[0.0; 2]; 2];
        for j in 3..6 {
            for a in 0..2 {
                for b in 0..2 {
                    h[a][b] += self.coeffs[(j, i)] * MONO_HESS[j][a][b];
                }
            }
        }
        h
    }

    pub fn gradient(&self, i: usize, p: Point) -> [f64; 2] {
        let g = mono_grad(p);
        let mut out = [0.0; 2];
        for j in 0..6 {
            out[0] += self.coeffs[(j, i)] * g[j][0];
            out[1] += self.coeffs[(j, i)] * g[j][1];
        }
        out
    }

    /// ∫_K D²φ_i : D²φ_j.
    pub fn stiffness(&self) -> DMatrix<f64> {
        let area = self.area();
        DMatrix::from_fn(6, 6, |i, j| {
            let (a, b) = (self.hessian(i), self.hessian(j));
            area * (a[0][0] * b[0][0] + 2.0 * a[0][1] * b[0][1] + a[1][1] * b[1][1])
        })
    }

    /// ½ ∫_K cof(D²φ_i) ∇φ_j · ∇φ_k.
    pub fn trilinear(&self, i: usize, j: usize, k: usize) -> f64 {
        let h = self.hessian(i);
        let cof = [[h[1][1], -h[0][1]], [-h[1][0], h[0][0]]];
        0.5 * triangle_midpoint_rule(self.vertices, |p| {
            let gj = self.gradient(j, p);
            let gk = self.gradient(k, p);
            (cof[0][0] * gj[0] + cof[0][1] * gj[1]) * gk[0] + (cof[1][0] * gj[0] + cof[1][1] * gj[1]) * gk[1]
        })
    }

    /// Coefficients (unscaled monomials) of the function with local dofs `d`.
    pub fn function(&self, d: &[f64]) -> DVector<f64> {
        &self.coeffs * DVector::from_column_slice(d)
    }
}

/// Central-difference Hessian with one Richardson step, from point values only.
pub fn fd_hessian(f: &impl Fn(Point) -> f64, p: Point, h: f64) -> [[f64; 2]; 2] {
    let at = |dx: f64, dy: f64| f([p[0] + dx, p[1] + dy]);
    let once = |h: f64| {
        let f0 = at(0.0, 0.0);
        let xx = (at(h, 0.0) - 2.0 * f0 + at(-h, 0.0)) / (h * h);
        let yy = (at(0.0, h) - 2.0 * f0 + at(0.0, -h)) / (h * h);
        let xy = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
        [xx, xy, yy]
    };
    let (a, b) = (once(h), once(0.5 * h));
    let r: Vec<f64> = (0..3).map(|i| (4.0 * b[i] - a[i]) / 3.0).collect();
    [[r[0], r[1]], [r[1], r[2]]]
}

/// 13-point biharmonic stencil with two Richardson steps, from point values only.
pub fn fd_bilaplacian(f: &impl Fn(Point) -> f64, p: Point, h: f64) -> f64 {
    let at = |i: f64, j: f64, h: f64| f([p[0] + i * h, p[1] + j * h]);
    let once = |h: f64| {
        let c = at(0.0, 0.0, h);
        let xxxx = at(2.0, 0.0, h) - 4.0 * at(1.0, 0.0, h) + 6.0 * c - 4.0 * at(-1.0, 0.0, h) + at(-2.0, 0.0, h);
        let yyyy = at(0.0, 2.0, h) - 4.0 * at(0.0, 1.0, h) + 6.0 * c - 4.0 * at(0.0, -1.0, h) + at(0.0, -2.0, h);
        let xxyy = at(1.0, 1.0, h) + at(-1.0, 1.0, h) + at(1.0, -1.0, h) + at(-1.0, -1.0, h)
            - 2.0 * (at(1.0, 0.0, h) + at(-1.0, 0.0, h) + at(0.0, 1.0, h) + at(0.0, -1.0, h))
            + 4.0 * c;
        (xxxx + 2.0 * xxyy + yyyy) / h.powi(4)
    };
    let step = |h: f64| (4.0 * once(0.5 * h) - once(h)) / 3.0;
    (16.0 * step(0.5 * h) - step(h)) / 15.0
}

pub fn fd_bracket(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> f64 {
    a[0][0] * b[1][1] + a[1][1] * b[0][0] - 2.0 * a[0][1] * b[0][1]
}

fn on_unit_square_boundary(p: Point) -> bool {
    p[0].abs() < 1e-12 || p[1].abs() < 1e-12 || (p[0] - 1.0).abs() < 1e-12 || (p[1] - 1.0).abs() < 1e-12
}

/// Oracle numbering for a triangulated unit square: interior vertices in mesh
/// order, then interior edges in mesh order. Returns per-cell maps from the six
/// Morley dofs to global indices, the matching edge signs, and the dof count.
pub fn morley_numbering(m: &PolygonalMesh) -> (Vec<[Option<usize>; 6]>, Vec<[f64; 3]>, usize) {
    let mut vid = vec![None; m.vertices().len()];
    let mut next = 0;
    for (v, p) in m.vertices().iter().enumerate() {
        if !on_unit_square_boundary(*p) {
            vid[v] = Some(next);
            next += 1;
        }
    }
    let mut eid = vec![None; m.edges().len()];
    for (e, edge) in m.edges().iter().enumerate() {
        if edge.cells[1].is_some() {
            eid[e] = Some(next);
            next += 1;
        }
    }
    let mut maps = Vec::new();
    let mut signs = Vec::new();
    for c in 0..m.num_cells() {
        let ring = &m.cells()[c];
        let pts = m.cell_points(c);
        let mut s = [0.0; 3];
        let mut map = [None; 6];
        for k in 0..3 {
            let e = m.cell_edges(c)[k];
            let t = [pts[(k + 1) % 3][0] - pts[k][0], pts[(k + 1) % 3][1] - pts[k][1]];
            let n = m.edges()[e].normal;
            s[k] = (t[1] * n[0] - t[0] * n[1]).signum();
            map[k] = vid[ring[k]];
            map[3 + k] = eid[e];
        }
        maps.push(map);
        signs.push(s);
    }
    (maps, signs, next)
}

/// Classical Morley global stiffness on a triangulated unit square.
pub fn morley_global_stiffness(m: &PolygonalMesh) -> DMatrix<f64> {
    let (maps, signs, n) = morley_numbering(m);
    let mut out = DMatrix::zeros(n, n);
    for c in 0..m.num_cells() {
        let pts = m.cell_points(c);
        let k = MorleyTriangle::new([pts[0], pts[1], pts[2]], signs[c]).stiffness();
        for i in 0..6 {
            for j in 0..6 {
                if let (Some(gi), Some(gj)) = (maps[c][i], maps[c][j]) {
                    out[(gi, gj)] += k[(i, j)];
                }
            }
        }
    }
    out
}

/// Vertex-average load (∫_K f)/3 per vertex for f of degree ≤ 2.
pub fn morley_global_load(m: &PolygonalMesh, f: impl Fn(Point) -> f64) -> DVector<f64> {
    let (maps, _, n) = morley_numbering(m);
    let mut out = DVector::zeros(n);
    for c in 0..m.num_cells() {
        let pts = m.cell_points(c);
        let share = triangle_midpoint_rule([pts[0], pts[1], pts[2]], &f) / 3.0;
        for i in 0..3 {
            if let Some(g) = maps[c][i] {
                out[g] += share;
            }
        }
    }
    out
}
