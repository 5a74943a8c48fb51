use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::voronoi::{lloyd_relax, voronoi_mesh};
use super::{MeshError, PolygonalMesh};
use crate::geometry::Point;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_LLOYD_ITERS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshFamily {
    Triangular,
    Square,
    Concave,
    VoronoiStructured,
    VoronoiRandom,
}

impl MeshFamily {
    pub const ALL: [MeshFamily; 5] = [
        MeshFamily::Triangular,
        MeshFamily::Square,
        MeshFamily::Concave,
        MeshFamily::VoronoiStructured,
        MeshFamily::VoronoiRandom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeshFamily::Triangular => "triangular",
            MeshFamily::Square => "square",
            MeshFamily::Concave => "concave",
            MeshFamily::VoronoiStructured => "voronoi-structured",
            MeshFamily::VoronoiRandom => "voronoi-random",
        }
    }
}

impl fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    /// (0,1)²
    UnitSquare,
    /// (-1,1)² minus [0,1)×(-1,0]
    LShape,
}

impl Domain {
    pub fn area(self) -> f64 {
        match self {
            Domain::UnitSquare => 1.0,
            Domain::LShape => 3.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Domain::UnitSquare => "unit-square",
            Domain::LShape => "l-shape",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything that determines a generated mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshRequest {
    pub family: MeshFamily,
    pub domain: Domain,
    /// Subdivisions per unit length.
    pub n: usize,
    pub seed: Option<u64>,
    pub lloyd_iters: usize,
}

impl MeshRequest {
    pub fn new(family: MeshFamily, domain: Domain, n: usize) -> Self {
        MeshRequest {
            family,
            domain,
            n,
            seed: None,
            lloyd_iters: DEFAULT_LLOYD_ITERS,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_lloyd_iters(mut self, iters: usize) -> Self {
        self.lloyd_iters = iters;
        self
    }

    /// Checks the (family, domain, n) combination without building anything.
    pub fn check(&self) -> Result<(), MeshError> {
        if self.domain == Domain::LShape && self.family != MeshFamily::Triangular {
            return Err(MeshError::Unsupported {
                family: self.family,
                domain: self.domain,
            });
        }
        let min_n = match self.family {
            MeshFamily::VoronoiStructured | MeshFamily::VoronoiRandom => 2,
            _ => 1,
        };
        if self.n < min_n {
            return Err(MeshError::TooCoarse {
                family: self.family,
                n: self.n,
            });
        }
        Ok(())
    }
}

/// Generates one member of a mesh family. Deterministic in the request.
pub fn generate_mesh(req: &MeshRequest) -> Result<PolygonalMesh, MeshError> {
    req.check()?;
    let n = req.n;
    match (req.family, req.domain) {
        (MeshFamily::Triangular, Domain::UnitSquare) => triangulated_squares(n, &unit_square_blocks()),
        (MeshFamily::Triangular, Domain::LShape) => triangulated_squares(n, &l_shape_blocks()),
        (MeshFamily::Square, _) => square_grid(n),
        (MeshFamily::Concave, _) => concave_grid(n),
        (MeshFamily::VoronoiStructured, _) => voronoi_mesh(&structured_seeds(n)),
        (MeshFamily::VoronoiRandom, _) => {
            let mut rng = ChaCha8Rng::seed_from_u64(req.seed.unwrap_or(DEFAULT_SEED));
            let seeds: Vec<Point> = (0..n * n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
            voronoi_mesh(&lloyd_relax(seeds, req.lloyd_iters))
        }
    }
}

/// Lower-left corners of the unit squares making up a domain.
fn unit_square_blocks() -> Vec<(i64, i64)> {
    vec![(0, 0)]
}

fn l_shape_blocks() -> Vec<(i64, i64)> {
    vec![(-1, -1), (-1, 0), (0, 0)]
}

/// Each grid square split by its positive-slope diagonal.
fn triangulated_squares(n: usize, blocks: &[(i64, i64)]) -> Result<PolygonalMesh, MeshError> {
    let ni = n as i64;
    let min_x = blocks.iter().map(|b| b.0).min().unwrap() * ni;
    let min_y = blocks.iter().map(|b| b.1).min().unwrap() * ni;
    let max_x = (blocks.iter().map(|b| b.0).max().unwrap() + 1) * ni;
    let max_y = (blocks.iter().map(|b| b.1).max().unwrap() + 1) * ni;
    let inside = |i: i64, j: i64| {
        blocks
            .iter()
            .any(|&(bx, by)| i >= bx * ni && i < (bx + 1) * ni && j >= by * ni && j < (by + 1) * ni)
    };
    // number grid points row by row, keeping only those touched by a square
    let w = (max_x - min_x + 1) as usize;
    let h = (max_y - min_y + 1) as usize;
    let mut id = vec![usize::MAX; w * h];
    let mut vertices = Vec::new();
    for j in min_y..=max_y {
        for i in min_x..=max_x {
            let touched = [(i - 1, j - 1), (i, j - 1), (i - 1, j), (i, j)]
                .iter()
                .any(|&(a, b)| inside(a, b));
            if touched {
                id[((j - min_y) as usize) * w + (i - min_x) as usize] = vertices.len();
                vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
            }
        }
    }
    let at = |i: i64, j: i64| id[((j - min_y) as usize) * w + (i - min_x) as usize];
    let mut cells = Vec::new();
    for j in min_y..max_y {
        for i in min_x..max_x {
            if !inside(i, j) {
                continue;
            }
            let (v00, v10, v11, v01) = (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
            cells.push(vec![v00, v10, v11]);
            cells.push(vec![v00, v11, v01]);
        }
    }
    PolygonalMesh::new(vertices, cells)
}

fn grid_vertices(n: usize) -> Vec<Point> {
    let mut v = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            v.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    v
}

fn square_grid(n: usize) -> Result<PolygonalMesh, MeshError> {
    let vertices = grid_vertices(n);
    let at = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)]);
        }
    }
    PolygonalMesh::new(vertices, cells)
}

/// Each grid square is cut by the polyline (1/2,0) → (1/4,1/2) → (1/2,1) in
/// local coordinates into a concave and a convex pentagon.
fn concave_grid(n: usize) -> Result<PolygonalMesh, MeshError> {
    let s = 1.0 / n as f64;
    let mut vertices = grid_vertices(n);
    let at = |i: usize, j: usize| j * (n + 1) + i;
    // horizontal-edge midpoints, shared by vertically adjacent squares
    let mid_base = vertices.len();
    for j in 0..=n {
        for i in 0..n {
            vertices.push([(i as f64 + 0.5) * s, j as f64 * s]);
        }
    }
    let mid = |i: usize, j: usize| mid_base + j * n + i;
    let kink_base = vertices.len();
    for j in 0..n {
        for i in 0..n {
            vertices.push([(i as f64 + 0.25) * s, (j as f64 + 0.5) * s]);
        }
    }
    let kink = |i: usize, j: usize| kink_base + j * n + i;
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (b, p, t) = (mid(i, j), kink(i, j), mid(i, j + 1));
            cells.push(vec![at(i, j), b, p, t, at(i, j + 1)]);
            cells.push(vec![b, at(i + 1, j), at(i + 1, j + 1), t, p]);
        }
    }
    PolygonalMesh::new(vertices, cells)
}

/// Cell-centre seeds shifted horizontally by ±0.2/n in a checkerboard pattern.
fn structured_seeds(n: usize) -> Vec<Point> {
    let s = 1.0 / n as f64;
    let mut seeds = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            seeds.push([(i as f64 + 0.5 + 0.2 * sign) * s, (j as f64 + 0.5) * s]);
        }
    }
    seeds
}
