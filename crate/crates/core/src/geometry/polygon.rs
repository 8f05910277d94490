//! Planar polygon predicates on tessellated rings.

use crate::model::Point2;

/// Points closer than this to a ring count as on its boundary.
pub const BOUNDARY_EPS: f64 = 1e-9;

/// Shoelace area; positive for counter-clockwise rings.
pub fn signed_area(ring: &[Point2]) -> f64 {
    let n = ring.len();
    let mut acc = 0.0;
    for i in 0..n {
        acc += ring[i].cross(ring[(i + 1) % n]);
    }
    acc / 2.0
}

/// Even-odd crossing test; says nothing about boundary points.
pub fn crossings_odd(ring: &[Point2], p: Point2) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let a = ring[i];
        let b = ring[j];
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let t = if len2 > 0.0 { ((p - a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    p.dist(a + ab * t)
}

pub fn distance_to_ring(ring: &[Point2], p: Point2) -> f64 {
    let n = ring.len();
    (0..n).map(|i| segment_distance(p, ring[i], ring[(i + 1) % n])).fold(f64::INFINITY, f64::min)
}

pub fn on_boundary(ring: &[Point2], p: Point2) -> bool {
    distance_to_ring(ring, p) <= BOUNDARY_EPS
}

/// True when the open segments `ab` and `cd` cross at a single interior point.
/// Touching endpoints and collinear overlaps do not count.
pub fn segments_cross(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let scale = (b - a).norm().max((d - c).norm()).max(1e-300);
    let eps = 1e-12 * scale * scale;
    let d1 = (b - a).cross(c - a);
    let d2 = (b - a).cross(d - a);
    let d3 = (d - c).cross(a - c);
    let d4 = (d - c).cross(b - c);
    ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps))
        && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps))
}

pub fn rings_cross(r1: &[Point2], r2: &[Point2]) -> bool {
    let (n1, n2) = (r1.len(), r2.len());
    let (lo1, hi1) = bbox(r1);
    let (lo2, hi2) = bbox(r2);
    if lo1.x > hi2.x || lo2.x > hi1.x || lo1.y > hi2.y || lo2.y > hi1.y {
        return false;
    }
    for i in 0..n1 {
        let (a, b) = (r1[i], r1[(i + 1) % n1]);
        for j in 0..n2 {
            if segments_cross(a, b, r2[j], r2[(j + 1) % n2]) {
                return true;
            }
        }
    }
    false
}

/// True when some pair of non-adjacent edges of the ring cross.
pub fn self_intersects(ring: &[Point2]) -> bool {
    let n = ring.len();
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_cross(ring[i], ring[(i + 1) % n], ring[j], ring[(j + 1) % n]) {
                return true;
            }
        }
    }
    false
}

pub fn bbox(ring: &[Point2]) -> (Point2, Point2) {
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in ring {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (lo, hi)
}

/// Classifies `inner` against `outer` using the first vertex of `inner`
/// that is not on `outer`'s boundary. `None` when every vertex is on it.
pub fn ring_inside(outer: &[Point2], inner: &[Point2]) -> Option<bool> {
    inner.iter().find(|&&p| !on_boundary(outer, p)).map(|&p| crossings_odd(outer, p))
}
