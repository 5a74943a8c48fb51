//! Polygonal meshes: data model, topology construction, quality checks,
//! generators and JSON I/O.

mod generate;
mod io;
mod voronoi;

use std::collections::HashMap;

use thiserror::Error;

use crate::geometry::{self, check_simple, dist, dot, sub, Point, RingDefect};

pub use generate::{generate_mesh, Domain, MeshFamily, MeshRequest, DEFAULT_LLOYD_ITERS, DEFAULT_SEED};
pub use io::{load_mesh, mesh_from_json, mesh_to_json, save_mesh, MeshFile};
pub use voronoi::{clipped_voronoi, lloyd_relax};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh has no cells")]
    NoCells,
    #[error("cell {cell} references vertex {index}, but the mesh has {count} vertices")]
    VertexOutOfRange { cell: usize, index: usize, count: usize },
    #[error("cell {cell} is not a simple polygon: {defect:?}")]
    MalformedCell { cell: usize, defect: RingDefect },
    #[error("cell {cell} is clockwise or degenerate (signed area {area:e})")]
    ClockwiseCell { cell: usize, area: f64 },
    #[error("edge ({0}, {1}) is shared by more than two cells or twice with the same orientation")]
    NonManifoldEdge(usize, usize),
    #[error("vertex {0} is not used by any cell")]
    UnusedVertex(usize),
    #[error("Euler characteristic V - E + C = {chi} (V={vertices}, E={edges}, C={cells}); expected 1")]
    EulerMismatch {
        vertices: usize,
        edges: usize,
        cells: usize,
        chi: i64,
    },
    #[error("edge {0} is a boundary edge; its normal is fixed to the outward normal")]
    BoundaryNormal(usize),
    #[error("mesh family {family} is not available on domain {domain}")]
    Unsupported { family: MeshFamily, domain: Domain },
    #[error("subdivision count {n} is too small for family {family}")]
    TooCoarse { family: MeshFamily, n: usize },
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One mesh edge with its global unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Endpoints in the orientation of the first cell that traverses the edge.
    pub vertices: [usize; 2],
    /// Adjacent cells; the second is `None` on the boundary.
    pub cells: [Option<usize>; 2],
    /// Global unit normal; outward from the domain on boundary edges.
    pub normal: Point,
    pub length: f64,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.cells[1].is_none()
    }
}

/// Immutable polygonal decomposition of a simply connected domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalMesh {
    vertices: Vec<Point>,
    cells: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    /// `cell_edges[c][k]` is the edge from local vertex k to k+1.
    cell_edges: Vec<Vec<usize>>,
    /// `edge_signs[c][k]` = sign(n_K · n_e) for the same local edge.
    edge_signs: Vec<Vec<f64>>,
    boundary_vertex: Vec<bool>,
    areas: Vec<f64>,
    diameters: Vec<f64>,
    h_max: f64,
}

impl PolygonalMesh {
    /// Builds the edge topology and checks every structural invariant.
    pub fn new(vertices: Vec<Point>, cells: Vec<Vec<usize>>) -> Result<Self, MeshError> {
        if cells.is_empty() {
            return Err(MeshError::NoCells);
        }
        let nv = vertices.len();
        let mut used = vec![false; nv];
        let mut areas = Vec::with_capacity(cells.len());
        let mut diameters = Vec::with_capacity(cells.len());
        for (c, ring) in cells.iter().enumerate() {
            for &i in ring {
                if i >= nv {
                    return Err(MeshError::VertexOutOfRange {
                        cell: c,
                        index: i,
                        count: nv,
                    });
                }
                used[i] = true;
            }
            let pts: Vec<Point> = ring.iter().map(|&i| vertices[i]).collect();
            for (k, &i) in ring.iter().enumerate() {
                if ring[..k].contains(&i) {
                    return Err(MeshError::MalformedCell {
                        cell: c,
                        defect: RingDefect::RepeatedVertex(k),
                    });
                }
            }
            check_simple(&pts).map_err(|defect| MeshError::MalformedCell { cell: c, defect })?;
            let area = geometry::signed_area(&pts);
            if area <= 0.0 {
                return Err(MeshError::ClockwiseCell { cell: c, area });
            }
            areas.push(area);
            diameters.push(geometry::diameter(&pts));
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(MeshError::UnusedVertex(v));
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (c, ring) in cells.iter().enumerate() {
            let n = ring.len();
            let mut local = Vec::with_capacity(n);
            for k in 0..n {
                let (a, b) = (ring[k], ring[(k + 1) % n]);
                let key = (a.min(b), a.max(b));
                match lookup.get(&key) {
                    Some(&e) => {
                        let edge = &mut edges[e];
                        // a manifold neighbour traverses the edge in the opposite direction
                        if edge.cells[1].is_some() || edge.vertices != [b, a] {
                            return Err(MeshError::NonManifoldEdge(a, b));
                        }
                        edge.cells[1] = Some(c);
                        local.push(e);
                    }
                    None => {
                        let (pa, pb) = (vertices[a], vertices[b]);
                        let length = dist(pa, pb);
                        let t = sub(pb, pa);
                        let normal = [t[1] / length, -t[0] / length];
                        lookup.insert(key, edges.len());
                        local.push(edges.len());
                        edges.push(Edge {
                            vertices: [a, b],
                            cells: [Some(c), None],
                            normal,
                            length,
                        });
                    }
                }
            }
            cell_edges.push(local);
        }

        let chi = nv as i64 - edges.len() as i64 + cells.len() as i64;
        if chi != 1 {
            return Err(MeshError::EulerMismatch {
                vertices: nv,
                edges: edges.len(),
                cells: cells.len(),
                chi,
            });
        }

        let mut boundary_vertex = vec![false; nv];
        for e in edges.iter().filter(|e| e.is_boundary()) {
            boundary_vertex[e.vertices[0]] = true;
            boundary_vertex[e.vertices[1]] = true;
        }
        let h_max = diameters.iter().cloned().fold(0.0, f64::max);
        let mut mesh = PolygonalMesh {
            vertices,
            cells,
            edges,
            cell_edges,
            edge_signs: Vec::new(),
            boundary_vertex,
            areas,
            diameters,
            h_max,
        };
        mesh.edge_signs = mesh.compute_edge_signs();
        Ok(mesh)
    }

    fn compute_edge_signs(&self) -> Vec<Vec<f64>> {
        (0..self.cells.len())
            .map(|c| {
                let ring = &self.cells[c];
                let n = ring.len();
                (0..n)
                    .map(|k| {
                        let t = sub(self.vertices[ring[(k + 1) % n]], self.vertices[ring[k]]);
                        let outward = [t[1], -t[0]];
                        let e = &self.edges[self.cell_edges[c][k]];
                        if dot(outward, e.normal) > 0.0 {
                            1.0
                        } else {
                            -1.0
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Same mesh with the global normal of interior edge `e` reversed.
    pub fn with_flipped_normal(mut self, e: usize) -> Result<Self, MeshError> {
        if self.edges[e].is_boundary() {
            return Err(MeshError::BoundaryNormal(e));
        }
        let n = self.edges[e].normal;
        self.edges[e].normal = [-n[0], -n[1]];
        self.edge_signs = self.compute_edge_signs();
        Ok(self)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_edges(&self, c: usize) -> &[usize] {
        &self.cell_edges[c]
    }

    pub fn edge_signs(&self, c: usize) -> &[f64] {
        &self.edge_signs[c]
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point> {
        self.cells[c].iter().map(|&i| self.vertices[i]).collect()
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        self.areas[c]
    }

    pub fn cell_diameter(&self, c: usize) -> f64 {
        self.diameters[c]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }
}

/// Shape-regularity measures of a mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshQualityReport {
    /// min over cells of (shortest edge) / (cell diameter).
    pub min_edge_to_diameter_ratio: f64,
    /// min over cells of (radius of the largest disc inside the cell's kernel) / (cell diameter).
    pub min_kernel_radius_to_diameter: f64,
    /// Cell attaining the smaller of the two ratios.
    pub worst_cell_id: usize,
}

/// Radius of the largest disc contained in the kernel (the set of points from
/// which the whole polygon is visible) of a counterclockwise ring; 0 if the kernel is empty.
pub fn kernel_radius(ring: &[Point]) -> f64 {
    let n = ring.len();
    // Inward unit normal m and offset c of each edge line: distance(x) = m·x - c.
    let lines: Vec<(Point, f64)> = (0..n)
        .map(|k| {
            let a = ring[k];
            let t = sub(ring[(k + 1) % n], a);
            let len = geometry::norm(t);
            let m = [-t[1] / len, t[0] / len];
            (m, dot(m, a))
        })
        .collect();
    let scale = geometry::diameter(ring);
    let mut best: f64 = 0.0;
    // The Chebyshev centre of the half-plane intersection has three active constraints.
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let rows = [lines[i], lines[j], lines[k]];
                // Solve m·x - r = c for (x, y, r).
                let a = nalgebra::Matrix3::new(
                    rows[0].0[0], rows[0].0[1], -1.0,
                    rows[1].0[0], rows[1].0[1], -1.0,
                    rows[2].0[0], rows[2].0[1], -1.0,
                );
                let b = nalgebra::Vector3::new(rows[0].1, rows[1].1, rows[2].1);
                let Some(sol) = a.lu().solve(&b) else { continue };
                let (x, r) = ([sol[0], sol[1]], sol[2]);
                if !r.is_finite() || r <= best {
                    continue;
                }
                let feasible = lines.iter().all(|&(m, c)| dot(m, x) - c >= r - 1e-12 * scale);
                if feasible {
                    best = r;
                }
            }
        }
    }
    best
}

/// Computes shape-regularity ratios; fails on a malformed cell, naming it.
pub fn validate(mesh: &PolygonalMesh) -> Result<MeshQualityReport, MeshError> {
    let mut report = MeshQualityReport {
        min_edge_to_diameter_ratio: 1.0,
        min_kernel_radius_to_diameter: 1.0,
        worst_cell_id: 0,
    };
    let mut worst = f64::INFINITY;
    for c in 0..mesh.num_cells() {
        let ring = mesh.cell_points(c);
        check_simple(&ring).map_err(|defect| MeshError::MalformedCell { cell: c, defect })?;
        let diam = geometry::diameter(&ring);
        let n = ring.len();
        let shortest = (0..n)
            .map(|k| dist(ring[k], ring[(k + 1) % n]))
            .fold(f64::INFINITY, f64::min);
        let edge_ratio = shortest / diam;
        let kernel_ratio = kernel_radius(&ring) / diam;
        report.min_edge_to_diameter_ratio = report.min_edge_to_diameter_ratio.min(edge_ratio);
        report.min_kernel_radius_to_diameter = report.min_kernel_radius_to_diameter.min(kernel_ratio);
        let w = edge_ratio.min(kernel_ratio);
        if w < worst {
            worst = w;
            report.worst_cell_id = c;
        }
    }
    Ok(report)
}
