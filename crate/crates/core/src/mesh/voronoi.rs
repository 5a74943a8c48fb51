//! Voronoi tessellations of the unit square by half-plane clipping, with
//! Lloyd (centroidal) relaxation.

use std::collections::HashMap;

use super::{MeshError, PolygonalMesh};
use crate::geometry::{centroid, dist, dot, sub, Point};

/// Vertices closer than this are treated as one when welding cells together.
const WELD_TOL: f64 = 1e-10;

/// Uniform bucket grid over the unit square for neighbour searches.
struct Buckets {
    g: usize,
    cells: Vec<Vec<usize>>,
}

impl Buckets {
    fn new(seeds: &[Point]) -> Self {
        let g = ((seeds.len() as f64).sqrt().ceil() as usize).max(1);
        let mut cells = vec![Vec::new(); g * g];
        for (i, s) in seeds.iter().enumerate() {
            let (bx, by) = Self::locate(g, *s);
            cells[by * g + bx].push(i);
        }
        Buckets { g, cells }
    }

    fn locate(g: usize, p: Point) -> (usize, usize) {
        let f = |t: f64| ((t * g as f64).floor().max(0.0) as usize).min(g - 1);
        (f(p[0]), f(p[1]))
    }

    /// Seeds in buckets at Chebyshev distance exactly `ring` from bucket (bx, by).
    fn ring(&self, bx: usize, by: usize, ring: usize, out: &mut Vec<usize>) {
        let g = self.g as i64;
        let (bx, by, r) = (bx as i64, by as i64, ring as i64);
        for j in by - r..=by + r {
            for i in bx - r..=bx + r {
                if (i - bx).abs().max((j - by).abs()) != r || i < 0 || j < 0 || i >= g || j >= g {
                    continue;
                }
                out.extend_from_slice(&self.cells[(j * g + i) as usize]);
            }
        }
    }
}

/// Keeps the part of convex `poly` closer to `s` than to `q`.
fn clip(poly: &[Point], s: Point, q: Point) -> Vec<Point> {
    let d = sub(q, s);
    let mid = [0.5 * (s[0] + q[0]), 0.5 * (s[1] + q[1])];
    let side = |p: Point| dot(sub(p, mid), d);
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..n {
        let (a, b) = (poly[k], poly[(k + 1) % n]);
        let (fa, fb) = (side(a), side(b));
        if fa <= 0.0 {
            out.push(a);
        }
        if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
            let t = fa / (fa - fb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out.dedup_by(|a, b| dist(*a, *b) < 1e-14);
    while out.len() > 1 && dist(out[0], out[out.len() - 1]) < 1e-14 {
        out.pop();
    }
    out
}

/// Voronoi cells of `seeds` clipped to the unit square, each counterclockwise.
pub fn clipped_voronoi(seeds: &[Point]) -> Vec<Vec<Point>> {
    let buckets = Buckets::new(seeds);
    let w = 1.0 / buckets.g as f64;
    let mut candidates = Vec::new();
    seeds
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut poly = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
            let (bx, by) = Buckets::locate(buckets.g, s);
            for ring in 0..=buckets.g {
                candidates.clear();
                buckets.ring(bx, by, ring, &mut candidates);
                candidates.retain(|&j| j != i);
                candidates.sort_by(|&a, &b| {
                    dist(seeds[a], s)
                        .total_cmp(&dist(seeds[b], s))
                        .then(a.cmp(&b))
                });
                for &j in &candidates {
                    poly = clip(&poly, s, seeds[j]);
                }
                // any seed beyond this ring is at least ring*w away and cannot cut
                // a cell whose vertices all lie within half that distance
                let reach = poly.iter().map(|&p| dist(p, s)).fold(0.0, f64::max);
                if ring as f64 * w >= 2.0 * reach {
                    break;
                }
            }
            poly
        })
        .collect()
}

/// Replaces each seed by the centroid of its clipped cell, `iters` times.
pub fn lloyd_relax(mut seeds: Vec<Point>, iters: usize) -> Vec<Point> {
    for _ in 0..iters {
        seeds = clipped_voronoi(&seeds).iter().map(|c| centroid(c)).collect();
    }
    seeds
}

/// Merges the vertices of independently clipped cells into a shared vertex list.
fn weld(polys: &[Vec<Point>]) -> (Vec<Point>, Vec<Vec<usize>>) {
    let key = |p: Point| ((p[0] / WELD_TOL).floor() as i64, (p[1] / WELD_TOL).floor() as i64);
    let mut table: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let mut cells = Vec::with_capacity(polys.len());
    for poly in polys {
        let mut ring: Vec<usize> = Vec::with_capacity(poly.len());
        for &p in poly {
            let (kx, ky) = key(p);
            let mut found = None;
            'search: for dy in -1..=1 {
                for dx in -1..=1 {
                    if let Some(list) = table.get(&(kx + dx, ky + dy)) {
                        if let Some(&v) = list.iter().find(|&&v| dist(vertices[v], p) <= WELD_TOL) {
                            found = Some(v);
                            break 'search;
                        }
                    }
                }
            }
            let v = found.unwrap_or_else(|| {
                table.entry((kx, ky)).or_default().push(vertices.len());
                vertices.push(p);
                vertices.len() - 1
            });
            if ring.last() != Some(&v) {
                ring.push(v);
            }
        }
        while ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
        }
        cells.push(ring);
    }
    (vertices, cells)
}

pub(super) fn voronoi_mesh(seeds: &[Point]) -> Result<PolygonalMesh, MeshError> {
    let polys = clipped_voronoi(seeds);
    let (vertices, cells) = weld(&polys);
    PolygonalMesh::new(vertices, cells)
}
