//! Planar polygon helpers shared by the mesh, quadrature and element code.

/// A point or vector in the plane.
pub type Point = [f64; 2];

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

/// Twice the signed area of the triangle (a, b, c); positive when counterclockwise.
#[inline]
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(sub(b, a), sub(c, a))
}

/// Shoelace signed area; positive for counterclockwise rings.
pub fn signed_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    let mut s = 0.0;
    for i in 0..n {
        let p = ring[i];
        let q = ring[(i + 1) % n];
        s += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * s
}

/// Area centroid of a simple polygon with nonzero area.
pub fn centroid(ring: &[Point]) -> Point {
    let n = ring.len();
    // Shift by the first vertex to limit cancellation for cells far from the origin.
    let o = ring[0];
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let p = sub(ring[i], o);
        let q = sub(ring[(i + 1) % n], o);
        let w = p[0] * q[1] - q[0] * p[1];
        a += w;
        cx += (p[0] + q[0]) * w;
        cy += (p[1] + q[1]) * w;
    }
    [o[0] + cx / (3.0 * a), o[1] + cy / (3.0 * a)]
}

/// Largest distance between two vertices.
pub fn diameter(ring: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..ring.len() {
        for j in i + 1..ring.len() {
            d = d.max(dist(ring[i], ring[j]));
        }
    }
    d
}

/// Closed-segment intersection test (touching counts as intersecting).
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Point, b: Point, c: Point, o: f64| {
        o == 0.0
            && c[0] >= a[0].min(b[0])
            && c[0] <= a[0].max(b[0])
            && c[1] >= a[1].min(b[1])
            && c[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Why a ring fails to be a simple polygon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingDefect {
    TooFewVertices,
    RepeatedVertex(usize),
    SelfIntersection(usize, usize),
}

/// Checks that `ring` is a simple closed polygon. Returns the first defect found.
pub fn check_simple(ring: &[Point]) -> Result<(), RingDefect> {
    let n = ring.len();
    if n < 3 {
        return Err(RingDefect::TooFewVertices);
    }
    for i in 0..n {
        for j in i + 1..n {
            if ring[i] == ring[j] {
                return Err(RingDefect::RepeatedVertex(j));
            }
        }
    }
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        for j in i + 1..n {
            // adjacent edges share an endpoint by construction
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return Err(RingDefect::SelfIntersection(i, j));
            }
        }
    }
    // Adjacent edges folding back onto each other overlap without a proper crossing.
    for i in 0..n {
        let a = ring[(i + n - 1) % n];
        let b = ring[i];
        let c = ring[(i + 1) % n];
        if orient(a, b, c) == 0.0 && dot(sub(a, b), sub(c, b)) > 0.0 {
            return Err(RingDefect::SelfIntersection((i + n - 1) % n, i));
        }
    }
    Ok(())
}
