//! The lowest-order Morley-type virtual element on a polygon.
//!
//! Local degrees of freedom are the vertex values φ(a_i) followed by the
//! edge moments ∫_e ∂φ/∂n_e ds, where n_e is the *global* edge normal
//! (σ_e · outward normal). Only dofs and the energy projection Π^K onto
//! quadratics are ever formed; the virtual basis functions are never
//! evaluated.

use nalgebra::{DMatrix, DVector, Matrix6};
use thiserror::Error;

use crate::geometry::{self, dot, sub, Point};
use crate::quadrature::{edge_rule, polygon_rule, QuadratureError};

/// Number of scaled monomials spanning 𝒫₂.
pub const NP2: usize = 6;

/// Points per edge when interpolating normal-derivative moments.
pub const EDGE_POINTS: usize = 5;

/// Quadrature degree used for loads and error integrals.
pub const LOAD_DEGREE: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElementError {
    #[error("cell {cell}: projector system is singular (pivot ratio {ratio:e})")]
    SingularProjector { cell: usize, ratio: f64 },
    #[error("cell {cell}: {source}")]
    Quadrature {
        cell: usize,
        #[source]
        source: QuadratureError,
    },
}

/// Geometry of one cell as seen by the element.
#[derive(Debug, Clone)]
pub struct CellGeometry {
    pub cell: usize,
    pub vertices: Vec<Point>,
    pub area: f64,
    pub centroid: Point,
    pub diameter: f64,
    /// Unit tangent of edge k (from vertex k to k+1).
    pub tangents: Vec<Point>,
    /// Outward unit normal of edge k.
    pub normals: Vec<Point>,
    pub lengths: Vec<f64>,
    /// σ_k = ±1 relating the outward normal of edge k to its global normal.
    pub signs: Vec<f64>,
}

impl CellGeometry {
    /// Geometry of a counterclockwise ring. `signs` defaults to all +1
    /// (edge dofs taken with respect to the outward normal).
    pub fn new(cell: usize, vertices: Vec<Point>, signs: Option<Vec<f64>>) -> Self {
        let n = vertices.len();
        let mut tangents = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        let mut lengths = Vec::with_capacity(n);
        for k in 0..n {
            let d = sub(vertices[(k + 1) % n], vertices[k]);
            let len = geometry::norm(d);
            let t = [d[0] / len, d[1] / len];
            tangents.push(t);
            normals.push([t[1], -t[0]]);
            lengths.push(len);
        }
        let signs = signs.unwrap_or_else(|| vec![1.0; n]);
        assert_eq!(signs.len(), n);
        CellGeometry {
            cell,
            area: geometry::signed_area(&vertices),
            centroid: geometry::centroid(&vertices),
            diameter: geometry::diameter(&vertices),
            vertices,
            tangents,
            normals,
            lengths,
            signs,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Global normal n_e of local edge k.
    pub fn edge_normal(&self, k: usize) -> Point {
        let n = self.normals[k];
        [self.signs[k] * n[0], self.signs[k] * n[1]]
    }
}

/// Scaled monomials {1, ξ, η, ξ², ξη, η²}, ξ = (x - x_K)/h_K, η = (y - y_K)/h_K.
#[derive(Debug, Clone, Copy)]
pub struct LocalBasis {
    pub centroid: Point,
    pub diameter: f64,
}

impl LocalBasis {
    pub fn new(geom: &CellGeometry) -> Self {
        LocalBasis {
            centroid: geom.centroid,
            diameter: geom.diameter,
        }
    }

    fn scaled(&self, p: Point) -> (f64, f64) {
        (
            (p[0] - self.centroid[0]) / self.diameter,
            (p[1] - self.centroid[1]) / self.diameter,
        )
    }

    pub fn values(&self, p: Point) -> [f64; NP2] {
        let (x, y) = self.scaled(p);
        [1.0, x, y, x * x, x * y, y * y]
    }

    pub fn gradients(&self, p: Point) -> [[f64; 2]; NP2] {
        let (x, y) = self.scaled(p);
        let s = 1.0 / self.diameter;
        [
            [0.0, 0.0],
            [s, 0.0],
            [0.0, s],
            [2.0 * x * s, 0.0],
            [y * s, x * s],
            [0.0, 2.0 * y * s],
        ]
    }

    /// Constant Hessian of monomial `j`.
    pub fn hessian(&self, j: usize) -> [[f64; 2]; 2] {
        let s = 1.0 / (self.diameter * self.diameter);
        match j {
            3 => [[2.0 * s, 0.0], [0.0, 0.0]],
            4 => [[0.0, s], [s, 0.0]],
            5 => [[0.0, 0.0], [0.0, 2.0 * s]],
            _ => [[0.0; 2]; 2],
        }
    }

    /// Value, gradient and Hessian of Σ c_j m_j at `p`.
    pub fn evaluate(&self, c: &[f64], p: Point) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let v = self.values(p);
        let g = self.gradients(p);
        let mut value = 0.0;
        let mut grad = [0.0; 2];
        let mut hess = [[0.0; 2]; 2];
        for j in 0..NP2 {
            value += c[j] * v[j];
            grad[0] += c[j] * g[j][0];
            grad[1] += c[j] * g[j][1];
            let h = self.hessian(j);
            for a in 0..2 {
                for b in 0..2 {
                    hess[a][b] += c[j] * h[a][b];
                }
            }
        }
        (value, grad, hess)
    }

    /// Coefficients in this basis of c0 + c1 x + c2 y + c3 x² + c4 xy + c5 y².
    pub fn from_global(&self, c: &[f64; NP2]) -> [f64; NP2] {
        let (xk, yk) = (self.centroid[0], self.centroid[1]);
        let h = self.diameter;
        [
            c[0] + c[1] * xk + c[2] * yk + c[3] * xk * xk + c[4] * xk * yk + c[5] * yk * yk,
            h * (c[1] + 2.0 * c[3] * xk + c[4] * yk),
            h * (c[2] + c[4] * xk + 2.0 * c[5] * yk),
            h * h * c[3],
            h * h * c[4],
            h * h * c[5],
        ]
    }
}

/// Frobenius product A : B.
fn frobenius(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

/// Ordered local dofs: vertex values, then edge normal-derivative moments.
#[derive(Debug, Clone)]
pub struct DofSet {
    pub num_vertices: usize,
    /// Characteristic length h_i of each dof (h_K for all of them).
    pub char_lengths: Vec<f64>,
}

impl DofSet {
    pub fn new(geom: &CellGeometry) -> Self {
        let n = geom.num_vertices();
        DofSet {
            num_vertices: n,
            char_lengths: vec![geom.diameter; 2 * n],
        }
    }

    pub fn len(&self) -> usize {
        2 * self.num_vertices
    }

    pub fn is_empty(&self) -> bool {
        self.num_vertices == 0
    }

    pub fn edge_dof(&self, k: usize) -> usize {
        self.num_vertices + k
    }
}

/// Local dofs of a smooth function, given its value and gradient.
pub fn interpolate(geom: &CellGeometry, f: impl Fn(Point) -> (f64, [f64; 2])) -> DVector<f64> {
    let n = geom.num_vertices();
    let mut d = DVector::zeros(2 * n);
    for k in 0..n {
        d[k] = f(geom.vertices[k]).0;
        let ne = geom.edge_normal(k);
        let rule = edge_rule(geom.vertices[k], geom.vertices[(k + 1) % n], EDGE_POINTS)
            .expect("EDGE_POINTS > 0");
        d[n + k] = rule.integrate(|p| dot(f(p).1, ne));
    }
    d
}

/// Dofs of Σ c_j m_j, exactly (edge moments of a linear integrand via the midpoint rule).
pub fn polynomial_dofs(geom: &CellGeometry, basis: &LocalBasis, c: &[f64]) -> DVector<f64> {
    let n = geom.num_vertices();
    let mut d = DVector::zeros(2 * n);
    for k in 0..n {
        d[k] = basis.evaluate(c, geom.vertices[k]).0;
        let a = geom.vertices[k];
        let b = geom.vertices[(k + 1) % n];
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        d[n + k] = geom.lengths[k] * dot(basis.evaluate(c, mid).1, geom.edge_normal(k));
    }
    d
}

/// ∫_K D²φ dx from the dofs of φ, by ∫_K ∂_a∂_b φ = ∫_{∂K} ∂_a φ n_b ds with
/// ∇φ = (∂φ/∂n) n + (∂φ/∂t) t on each edge. Returned unsymmetrised: entry
/// (a, b) is the n_b-weighted boundary integral of ∂_a φ.
pub fn hessian_moment(geom: &CellGeometry, dofs: &[f64]) -> [[f64; 2]; 2] {
    let n = geom.num_vertices();
    let mut m = [[0.0; 2]; 2];
    for k in 0..n {
        let (t, nk) = (geom.tangents[k], geom.normals[k]);
        let normal_moment = geom.signs[k] * dofs[n + k];
        let tangential_moment = dofs[(k + 1) % n] - dofs[k];
        for a in 0..2 {
            for b in 0..2 {
                m[a][b] += (nk[a] * normal_moment + t[a] * tangential_moment) * nk[b];
            }
        }
    }
    m
}

/// Matrices defining Π^K in dof space.
#[derive(Debug, Clone)]
pub struct ProjectorMatrices {
    /// D_ij = χ_i(m_j), N^K × 6.
    pub d: DMatrix<f64>,
    /// G_jk = a^K(m_j, m_k), 6 × 6.
    pub g: DMatrix<f64>,
    /// Dof vector ↦ coefficients of Π^K φ, 6 × N^K.
    pub pi_star: DMatrix<f64>,
    /// Dof vector ↦ dofs of Π^K φ, N^K × N^K.
    pub pi_dof: DMatrix<f64>,
}

/// Right-hand-side functionals of the projector system as rows over the dofs:
/// the vertex average, ∫_{∂K} ∇φ ds, and a^K(φ, q) for q ∈ {ξ², ξη, η²}.
fn projector_functionals(geom: &CellGeometry, basis: &LocalBasis) -> DMatrix<f64> {
    let n = geom.num_vertices();
    let mut r = DMatrix::zeros(NP2, 2 * n);
    for k in 0..n {
        r[(0, k)] = 1.0 / n as f64;
    }
    for k in 0..n {
        let prev = (k + n - 1) % n;
        let (t, nk, s) = (geom.tangents[k], geom.normals[k], geom.signs[k]);
        let tp = geom.tangents[prev];
        for a in 0..2 {
            // the tangential part telescopes onto the two endpoints
            r[(1 + a, k)] += tp[a] - t[a];
            r[(1 + a, n + k)] = s * nk[a];
        }
        for q in 3..NP2 {
            let h = basis.hessian(q);
            let quad = |u: Point, v: Point| {
                u[0] * (h[0][0] * v[0] + h[0][1] * v[1]) + u[1] * (h[1][0] * v[0] + h[1][1] * v[1])
            };
            r[(q, n + k)] = s * quad(nk, nk);
            let tn = quad(t, nk);
            let tn_prev = quad(tp, geom.normals[prev]);
            r[(q, k)] += tn_prev - tn;
        }
    }
    r
}

pub fn build_projector(geom: &CellGeometry, basis: &LocalBasis) -> Result<ProjectorMatrices, ElementError> {
    let n = geom.num_vertices();
    let mut d = DMatrix::zeros(2 * n, NP2);
    for j in 0..NP2 {
        let mut e = [0.0; NP2];
        e[j] = 1.0;
        d.set_column(j, &polynomial_dofs(geom, basis, &e));
    }
    let mut g = DMatrix::zeros(NP2, NP2);
    for j in 3..NP2 {
        for k in 3..NP2 {
            g[(j, k)] = geom.area * frobenius(&basis.hessian(j), &basis.hessian(k));
        }
    }
    let r = projector_functionals(geom, basis);
    let b: Matrix6<f64> = Matrix6::from_iterator((&r * &d).iter().cloned());
    let lu = b.lu();
    let scale = b.abs().max();
    let min_pivot = lu.u().diagonal().abs().min();
    if min_pivot <= 1e-12 * scale {
        return Err(ElementError::SingularProjector {
            cell: geom.cell,
            ratio: min_pivot / scale,
        });
    }
    let mut pi_star = DMatrix::zeros(NP2, 2 * n);
    for col in 0..2 * n {
        let rhs = nalgebra::Vector6::from_iterator(r.column(col).iter().cloned());
        let x = lu.solve(&rhs).expect("pivots checked above");
        pi_star.set_column(col, &DVector::from_iterator(NP2, x.iter().cloned()));
    }
    let pi_dof = &d * &pi_star;
    Ok(ProjectorMatrices { d, g, pi_star, pi_dof })
}

/// Local stabilised stiffness, with its two parts kept for inspection.
#[derive(Debug, Clone)]
pub struct LocalStiffness {
    pub consistency: DMatrix<f64>,
    pub stabilization: DMatrix<f64>,
    pub matrix: DMatrix<f64>,
}

/// a_h^K = a^K(Π^K ·, Π^K ·) + Σ_i χ_i(· - Π^K ·) χ_i(· - Π^K ·) h_i^{-2}.
pub fn local_stiffness(dofs: &DofSet, proj: &ProjectorMatrices) -> LocalStiffness {
    let nk = dofs.len();
    let consistency = proj.pi_star.transpose() * &proj.g * &proj.pi_star;
    let residual = DMatrix::identity(nk, nk) - &proj.pi_dof;
    let weights = DVector::from_iterator(nk, dofs.char_lengths.iter().map(|h| 1.0 / (h * h)));
    let stabilization = residual.transpose() * DMatrix::from_diagonal(&weights) * &residual;
    let matrix = &consistency + &stabilization;
    LocalStiffness {
        consistency,
        stabilization,
        matrix,
    }
}

/// cof([[a, b], [b, c]]) = [[c, -b], [-b, a]].
fn cofactor(h: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [[h[1][1], -h[0][1]], [-h[1][0], h[0][0]]]
}

/// T[i-3][j][k] = ½ ∫_K cof(D²m_i) ∇m_j · ∇m_k dx (zero for affine m_i).
pub type TrilinearTensor = [[[f64; NP2]; NP2]; 3];

fn trilinear_tensor(geom: &CellGeometry, basis: &LocalBasis) -> Result<TrilinearTensor, ElementError> {
    let rule = polygon_rule(&geom.vertices, 2).map_err(|source| ElementError::Quadrature {
        cell: geom.cell,
        source,
    })?;
    let mut t = [[[0.0; NP2]; NP2]; 3];
    for (&p, &w) in rule.points.iter().zip(&rule.weights) {
        let g = basis.gradients(p);
        for i in 0..3 {
            let c = cofactor(&basis.hessian(3 + i));
            for j in 0..NP2 {
                let cg = [
                    c[0][0] * g[j][0] + c[0][1] * g[j][1],
                    c[1][0] * g[j][0] + c[1][1] * g[j][1],
                ];
                for k in 0..NP2 {
                    t[i][j][k] += 0.5 * w * dot(cg, g[k]);
                }
            }
        }
    }
    Ok(t)
}

/// Local load for ⟨f_h, φ⟩|_K = P₀^K(f) |K| φ̂: (∫_K f)/n on each vertex dof.
pub fn local_load(geom: &CellGeometry, f: impl Fn(Point) -> f64) -> Result<DVector<f64>, ElementError> {
    let rule = polygon_rule(&geom.vertices, LOAD_DEGREE).map_err(|source| ElementError::Quadrature {
        cell: geom.cell,
        source,
    })?;
    let n = geom.num_vertices();
    let share = rule.integrate(f) / n as f64;
    let mut v = DVector::zeros(2 * n);
    for k in 0..n {
        v[k] = share;
    }
    Ok(v)
}

/// Everything the global assembly needs from one cell.
#[derive(Debug, Clone)]
pub struct LocalElement {
    pub geometry: CellGeometry,
    pub basis: LocalBasis,
    pub dofs: DofSet,
    pub projector: ProjectorMatrices,
    pub stiffness: LocalStiffness,
    pub trilinear: TrilinearTensor,
}

impl LocalElement {
    pub fn new(geometry: CellGeometry) -> Result<Self, ElementError> {
        let basis = LocalBasis::new(&geometry);
        let dofs = DofSet::new(&geometry);
        let projector = build_projector(&geometry, &basis)?;
        let stiffness = local_stiffness(&dofs, &projector);
        let trilinear = trilinear_tensor(&geometry, &basis)?;
        Ok(LocalElement {
            geometry,
            basis,
            dofs,
            projector,
            stiffness,
            trilinear,
        })
    }

    pub fn num_dofs(&self) -> usize {
        self.dofs.len()
    }

    /// Coefficients of Π^K φ from local dofs.
    pub fn project(&self, dofs: &[f64]) -> [f64; NP2] {
        let mut c = [0.0; NP2];
        for (i, ci) in c.iter_mut().enumerate() {
            *ci = self
                .projector
                .pi_star
                .row(i)
                .iter()
                .zip(dofs)
                .map(|(a, b)| a * b)
                .sum();
        }
        c
    }

    /// ½ ∫_K cof(D²p) ∇q · ∇r dx for quadratics given by their coefficients.
    pub fn local_trilinear(&self, p: &[f64; NP2], q: &[f64; NP2], r: &[f64; NP2]) -> f64 {
        let w = self.trilinear_vector(p, q);
        w.iter().zip(r).map(|(a, b)| a * b).sum()
    }

    /// w_k = b^K(p, q, m_k).
    pub fn trilinear_vector(&self, p: &[f64; NP2], q: &[f64; NP2]) -> [f64; NP2] {
        let mut w = [0.0; NP2];
        for i in 0..3 {
            if p[3 + i] == 0.0 {
                continue;
            }
            for j in 0..NP2 {
                let pq = p[3 + i] * q[j];
                for (k, wk) in w.iter_mut().enumerate() {
                    *wk += pq * self.trilinear[i][j][k];
                }
            }
        }
        w
    }

    /// M[k][j] = b^K(p, m_j, m_k): the map q ↦ b^K(p, q, ·) in coefficient space.
    pub fn first_slot_matrix(&self, p: &[f64; NP2]) -> [[f64; NP2]; NP2] {
        let mut m = [[0.0; NP2]; NP2];
        for i in 0..3 {
            for j in 0..NP2 {
                for k in 0..NP2 {
                    m[k][j] += p[3 + i] * self.trilinear[i][j][k];
                }
            }
        }
        m
    }

    /// M[k][i] = b^K(m_i, q, m_k): the map p ↦ b^K(p, q, ·) in coefficient space.
    pub fn second_slot_matrix(&self, q: &[f64; NP2]) -> [[f64; NP2]; NP2] {
        let mut m = [[0.0; NP2]; NP2];
        for i in 0..3 {
            for j in 0..NP2 {
                for k in 0..NP2 {
                    m[k][3 + i] += q[j] * self.trilinear[i][j][k];
                }
            }
        }
        m
    }
}
