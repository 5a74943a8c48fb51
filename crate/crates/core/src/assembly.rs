//! Global dof numbering, sparse operators and the scatter of local element
//! contributions into the coupled (u, v) system.

use std::sync::OnceLock;

use rayon::prelude::*;
use thiserror::Error;

use crate::element::{self, CellGeometry, ElementError, LocalElement, NP2};
use crate::geometry::Point;
use crate::mesh::PolygonalMesh;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("mesh has no interior vertices or edges, so the clamped space is trivial")]
    NoDofs,
    #[error(transparent)]
    Element(#[from] ElementError),
    #[error("state vector has length {got}, expected {expected}")]
    StateLength { got: usize, expected: usize },
}

/// Global numbering: interior vertices in mesh order, then interior edges in
/// mesh order. Boundary entities carry no dof (clamped data).
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub num_interior_vertices: usize,
    pub num_interior_edges: usize,
    vertex_dof: Vec<Option<usize>>,
    edge_dof: Vec<Option<usize>>,
    /// Per cell and local dof: global index, `None` on the boundary.
    cell_dofs: Vec<Vec<Option<usize>>>,
    /// Per cell and local dof: +1 for vertices, σ_{K,e} for edges.
    cell_signs: Vec<Vec<f64>>,
}

impl DofMap {
    pub fn new(mesh: &PolygonalMesh) -> Result<Self, AssemblyError> {
        let mut next = 0;
        let vertex_dof: Vec<Option<usize>> = (0..mesh.vertices().len())
            .map(|v| {
                (!mesh.is_boundary_vertex(v)).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        let num_interior_vertices = next;
        let edge_dof: Vec<Option<usize>> = mesh
            .edges()
            .iter()
            .map(|e| {
                (!e.is_boundary()).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        if next == 0 {
            return Err(AssemblyError::NoDofs);
        }
        let mut cell_dofs = Vec::with_capacity(mesh.num_cells());
        let mut cell_signs = Vec::with_capacity(mesh.num_cells());
        for c in 0..mesh.num_cells() {
            let ring = &mesh.cells()[c];
            let mut dofs: Vec<Option<usize>> = ring.iter().map(|&v| vertex_dof[v]).collect();
            dofs.extend(mesh.cell_edges(c).iter().map(|&e| edge_dof[e]));
            let mut signs = vec![1.0; ring.len()];
            signs.extend_from_slice(mesh.edge_signs(c));
            cell_dofs.push(dofs);
            cell_signs.push(signs);
        }
        Ok(DofMap {
            num_interior_vertices,
            num_interior_edges: next - num_interior_vertices,
            vertex_dof,
            edge_dof,
            cell_dofs,
            cell_signs,
        })
    }

    pub fn n_dof(&self) -> usize {
        self.num_interior_vertices + self.num_interior_edges
    }

    pub fn vertex_dof(&self, v: usize) -> Option<usize> {
        self.vertex_dof[v]
    }

    pub fn edge_dof(&self, e: usize) -> Option<usize> {
        self.edge_dof[e]
    }

    pub fn cell_dofs(&self, c: usize) -> &[Option<usize>] {
        &self.cell_dofs[c]
    }

    pub fn cell_signs(&self, c: usize) -> &[f64] {
        &self.cell_signs[c]
    }

    /// Local dof vector of cell `c` read from a global coefficient vector.
    pub fn gather(&self, c: usize, x: &[f64]) -> Vec<f64> {
        self.cell_dofs[c].iter().map(|g| g.map_or(0.0, |g| x[g])).collect()
    }
}

/// Square sparse matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
    pub symmetric: bool,
}

impl SparseOperator {
    /// Sums duplicate entries in input order, which keeps assembly
    /// bit-reproducible.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)], symmetric: bool) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut last = None;
        for k in order {
            let (i, j, v) = triplets[k];
            assert!(i < n && j < n, "entry ({i}, {j}) outside {n}x{n}");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseOperator {
            n,
            row_ptr,
            col_idx,
            values,
            symmetric,
        }
    }

    pub fn identity(n: usize) -> Self {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, &t, true)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col_idx[k], self.values[k]))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        cols.binary_search(&j)
            .map_or(0.0, |k| self.values[self.row_ptr[i] + k])
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .map(|k| self.values[k] * x[self.col_idx[k]])
                    .sum()
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// max |A_ij - A_ji|.
    pub fn asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// Sum of two operators of the same size.
    pub fn add(&self, other: &SparseOperator) -> SparseOperator {
        assert_eq!(self.n, other.n);
        let t: Vec<_> = self.triplets().chain(other.triplets()).collect();
        Self::from_triplets(self.n, &t, self.symmetric && other.symmetric)
    }

    /// [[a, 0], [0, b]].
    pub fn block_diag(a: &SparseOperator, b: &SparseOperator) -> SparseOperator {
        let t: Vec<_> = a
            .triplets()
            .chain(b.triplets().map(|(i, j, v)| (i + a.n, j + a.n, v)))
            .collect();
        Self::from_triplets(a.n + b.n, &t, a.symmetric && b.symmetric)
    }
}

/// Stacked coefficients (U; V) of u_h and v_h.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub data: Vec<f64>,
}

impl StateVector {
    pub fn zeros(n_dof: usize) -> Self {
        StateVector {
            data: vec![0.0; 2 * n_dof],
        }
    }

    pub fn from_parts(u: &[f64], v: &[f64]) -> Self {
        assert_eq!(u.len(), v.len());
        let mut data = u.to_vec();
        data.extend_from_slice(v);
        StateVector { data }
    }

    pub fn n_dof(&self) -> usize {
        self.data.len() / 2
    }

    pub fn u(&self) -> &[f64] {
        &self.data[..self.n_dof()]
    }

    pub fn v(&self) -> &[f64] {
        &self.data[self.n_dof()..]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Mesh, dof numbering and per-cell elements, built once and reused by
/// every assembly routine.
pub struct Discretization {
    pub mesh: PolygonalMesh,
    pub dofs: DofMap,
    pub elements: Vec<LocalElement>,
    threads: usize,
    pool: OnceLock<Option<rayon::ThreadPool>>,
}

impl std::fmt::Debug for Discretization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Discretization")
            .field("cells", &self.mesh.num_cells())
            .field("n_dof", &self.dofs.n_dof())
            .field("threads", &self.threads)
            .finish()
    }
}

impl Discretization {
    pub fn new(mesh: PolygonalMesh) -> Result<Self, AssemblyError> {
        Self::with_threads(mesh, 1)
    }

    /// `threads` caps the workers used for per-cell loops; results do not
    /// depend on it because contributions are merged in cell order.
    pub fn with_threads(mesh: PolygonalMesh, threads: usize) -> Result<Self, AssemblyError> {
        let dofs = DofMap::new(&mesh)?;
        let mut disc = Discretization {
            mesh,
            dofs,
            elements: Vec::new(),
            threads: threads.max(1),
            pool: OnceLock::new(),
        };
        let built: Vec<Result<LocalElement, ElementError>> = disc.map_cells(|c| {
            let geom = CellGeometry::new(c, disc.mesh.cell_points(c), Some(disc.mesh.edge_signs(c).to_vec()));
            LocalElement::new(geom)
        });
        disc.elements = built.into_iter().collect::<Result<_, _>>()?;
        Ok(disc)
    }

    pub fn n_dof(&self) -> usize {
        self.dofs.n_dof()
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    /// Evaluates `f` on every cell, returning results in cell order.
    pub fn map_cells<T: Send>(&self, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
        let n = self.mesh.num_cells();
        let pool = self.pool.get_or_init(|| {
            (self.threads > 1).then(|| {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(self.threads)
                    .build()
                    .expect("thread pool")
            })
        });
        match pool {
            Some(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
            None => (0..n).map(f).collect(),
        }
    }

    /// Global stiffness a_h on one field.
    pub fn assemble_stiffness(&self) -> SparseOperator {
        let mut t = Vec::new();
        for (c, el) in self.elements.iter().enumerate() {
            let map = self.dofs.cell_dofs(c);
            let a = &el.stiffness.matrix;
            for (i, gi) in map.iter().enumerate() {
                let Some(gi) = *gi else { continue };
                for (j, gj) in map.iter().enumerate() {
                    if let Some(gj) = *gj {
                        t.push((gi, gj, a[(i, j)]));
                    }
                }
            }
        }
        SparseOperator::from_triplets(self.n_dof(), &t, true)
    }

    /// (⟨f_h, φ⟩; ⟨g_h, φ⟩) over the two fields.
    pub fn assemble_load(
        &self,
        f: impl Fn(Point) -> f64 + Sync,
        g: impl Fn(Point) -> f64 + Sync,
    ) -> Result<Vec<f64>, AssemblyError> {
        let n = self.n_dof();
        let local: Vec<Result<_, ElementError>> = self.map_cells(|c| {
            let geom = &self.elements[c].geometry;
            Ok((element::local_load(geom, &f)?, element::local_load(geom, &g)?))
        });
        let mut out = vec![0.0; 2 * n];
        for (c, lv) in local.into_iter().enumerate() {
            let (lf, lg) = lv?;
            for (i, gi) in self.dofs.cell_dofs(c).iter().enumerate() {
                if let Some(gi) = *gi {
                    out[gi] += lf[i];
                    out[n + gi] += lg[i];
                }
            }
        }
        Ok(out)
    }

    /// Global dof vector interpolating a smooth function (value, gradient).
    pub fn interpolate(&self, f: impl Fn(Point) -> (f64, [f64; 2]) + Sync) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dof()];
        for (v, p) in self.mesh.vertices().iter().enumerate() {
            if let Some(g) = self.dofs.vertex_dof(v) {
                out[g] = f(*p).0;
            }
        }
        for (e, edge) in self.mesh.edges().iter().enumerate() {
            if let Some(g) = self.dofs.edge_dof(e) {
                let a = self.mesh.vertices()[edge.vertices[0]];
                let b = self.mesh.vertices()[edge.vertices[1]];
                let rule = crate::quadrature::edge_rule(a, b, element::EDGE_POINTS).expect("points > 0");
                out[g] = rule.integrate(|p| crate::geometry::dot(f(p).1, edge.normal));
            }
        }
        out
    }

    /// Coefficients of Π^K φ_h on every cell for a global dof vector.
    pub fn project(&self, x: &[f64]) -> Vec<[f64; NP2]> {
        self.map_cells(|c| self.elements[c].project(&self.dofs.gather(c, x)))
    }

    /// Residual r(X) with r·Φ = B_h(X, X, Φ) and the Jacobian J(X) with
    /// J(X)Y·Φ = B_h(X, Y, Φ) + B_h(Y, X, Φ).
    pub fn trilinear_scatter(&self, x: &StateVector) -> Result<(Vec<f64>, SparseOperator), AssemblyError> {
        let n = self.n_dof();
        if x.data.len() != 2 * n {
            return Err(AssemblyError::StateLength {
                got: x.data.len(),
                expected: 2 * n,
            });
        }
        let local = self.map_cells(|c| local_trilinear_contribution(&self.elements[c], &self.dofs.gather(c, x.u()), &self.dofs.gather(c, x.v())));
        let mut residual = vec![0.0; 2 * n];
        let mut t = Vec::new();
        for (c, lc) in local.iter().enumerate() {
            let map = self.dofs.cell_dofs(c);
            let nk = map.len();
            for (i, gi) in map.iter().enumerate() {
                let Some(gi) = *gi else { continue };
                residual[gi] += lc.r_u[i];
                residual[n + gi] += lc.r_v[i];
                for (j, gj) in map.iter().enumerate() {
                    let Some(gj) = *gj else { continue };
                    let k = i * nk + j;
                    t.push((gi, gj, lc.j_uu[k]));
                    t.push((gi, n + gj, lc.j_uv[k]));
                    t.push((n + gi, gj, -lc.j_uv[k]));
                }
            }
        }
        Ok((residual, SparseOperator::from_triplets(2 * n, &t, false)))
    }

    /// B_h(Ξ, Θ, Φ) evaluated cell by cell from the three global states.
    pub fn trilinear_form(&self, xi: &StateVector, theta: &StateVector, phi: &StateVector) -> f64 {
        let parts = self.map_cells(|c| {
            let el = &self.elements[c];
            let pr = |x: &[f64]| el.project(&self.dofs.gather(c, x));
            let (x1, x2) = (pr(xi.u()), pr(xi.v()));
            let (t1, t2) = (pr(theta.u()), pr(theta.v()));
            let (p1, p2) = (pr(phi.u()), pr(phi.v()));
            el.local_trilinear(&x1, &t2, &p1) + el.local_trilinear(&x2, &t1, &p1) - el.local_trilinear(&x1, &t1, &p2)
        });
        parts.iter().sum()
    }
}

/// Local residual and Jacobian blocks of one cell, row-major in local dofs.
struct LocalTrilinear {
    r_u: Vec<f64>,
    r_v: Vec<f64>,
    j_uu: Vec<f64>,
    /// ∂/∂V of the U rows; the ∂/∂U block of the V rows is its negative.
    j_uv: Vec<f64>,
}

fn local_trilinear_contribution(el: &LocalElement, du: &[f64], dv: &[f64]) -> LocalTrilinear {
    let pi = &el.projector.pi_star;
    let nk = du.len();
    let pu = el.project(du);
    let pv = el.project(dv);

    let back = |w: &[f64; NP2]| -> Vec<f64> {
        (0..nk).map(|i| (0..NP2).map(|k| pi[(k, i)] * w[k]).sum()).collect()
    };
    let wuv = el.trilinear_vector(&pu, &pv);
    let wvu = el.trilinear_vector(&pv, &pu);
    let wuu = el.trilinear_vector(&pu, &pu);
    let mut w1 = [0.0; NP2];
    for k in 0..NP2 {
        w1[k] = wuv[k] + wvu[k];
    }
    let r_u = back(&w1);
    let r_v: Vec<f64> = back(&wuu).into_iter().map(|x| -x).collect();

    // coefficient-space maps y ↦ b(p, y, ·) + b(y, p, ·)
    let sym_slots = |p: &[f64; NP2]| {
        let a = el.first_slot_matrix(p);
        let b = el.second_slot_matrix(p);
        let mut m = [[0.0; NP2]; NP2];
        for k in 0..NP2 {
            for j in 0..NP2 {
                m[k][j] = a[k][j] + b[k][j];
            }
        }
        m
    };
    let to_dofs = |m: &[[f64; NP2]; NP2]| -> Vec<f64> {
        // Π*ᵀ M Π*
        let mut mp = vec![0.0; NP2 * nk];
        for k in 0..NP2 {
            for j in 0..nk {
                mp[k * nk + j] = (0..NP2).map(|l| m[k][l] * pi[(l, j)]).sum();
            }
        }
        let mut out = vec![0.0; nk * nk];
        for i in 0..nk {
            for j in 0..nk {
                out[i * nk + j] = (0..NP2).map(|k| pi[(k, i)] * mp[k * nk + j]).sum();
            }
        }
        out
    };
    LocalTrilinear {
        r_u,
        r_v,
        j_uu: to_dofs(&sym_slots(&pv)),
        j_uv: to_dofs(&sym_slots(&pu)),
    }
}
