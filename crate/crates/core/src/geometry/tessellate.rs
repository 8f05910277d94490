use crate::model::{Loop, Point2, Segment};

use super::arc::solve_arc;
use super::GeometryError;

/// Every arc or circle is split into at least this many segments.
pub const MIN_ARC_SEGMENTS: usize = 8;
const MAX_ARC_SEGMENTS: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub struct Polyline2 {
    pub vertices: Vec<Point2>,
    pub closed: bool,
}

/// Segment count keeping the sagitta of each chord under `chord_tol`.
pub fn arc_segments(radius: f64, sweep_rad: f64, chord_tol: f64) -> usize {
    let ratio = 1.0 - chord_tol / radius;
    let n = if ratio > -1.0 && ratio < 1.0 {
        let max_step = 2.0 * ratio.acos();
        (sweep_rad.abs() / max_step).ceil()
    } else {
        0.0
    };
    (n as usize).clamp(MIN_ARC_SEGMENTS, MAX_ARC_SEGMENTS)
}

/// Replaces arcs and circles with chords no further than `chord_tol` from
/// the true curve. The returned ring is closed and does not repeat its start.
pub fn tessellate_loop(lp: &Loop, chord_tol: f64) -> Result<Polyline2, GeometryError> {
    if !(chord_tol > 0.0) {
        return Err(GeometryError::Invalid(format!("chord tolerance {chord_tol} must be positive")));
    }
    let mut pts: Vec<Point2> = Vec::new();
    for seg in lp.segments() {
        match seg {
            Segment::Line { from, to } => {
                pts.push(from);
                pts.push(to);
            }
            Segment::Arc { from, to, sweep, clockwise } => {
                let arc = solve_arc(from, to, sweep, clockwise)?;
                let n = arc_segments(arc.radius, arc.signed_sweep, chord_tol);
                pts.push(from);
                for k in 1..n {
                    pts.push(arc.point_at(k as f64 / n as f64));
                }
                pts.push(to);
            }
            Segment::Circle { center, radius } => {
                if !(radius > 0.0) {
                    return Err(GeometryError::Invalid(format!("circle radius {radius}")));
                }
                let n = arc_segments(radius, std::f64::consts::TAU, chord_tol);
                for k in 0..n {
                    let a = std::f64::consts::TAU * k as f64 / n as f64;
                    pts.push(Point2::new(center.x + radius * a.cos(), center.y + radius * a.sin()));
                }
            }
        }
    }
    let mut ring: Vec<Point2> = Vec::with_capacity(pts.len());
    for p in pts {
        if ring.last().is_none_or(|q: &Point2| q.dist(p) > 1e-12) {
            ring.push(p);
        }
    }
    while ring.len() > 1 && ring[0].dist(*ring.last().unwrap()) <= 1e-6 {
        ring.pop();
    }
    if ring.len() < 3 {
        return Err(GeometryError::Degenerate(format!("loop tessellates to {} vertices", ring.len())));
    }
    Ok(Polyline2 { vertices: ring, closed: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CurveCmd;

    #[test]
    fn square_is_copied() {
        let sq = Loop::rect(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0));
        let pl = tessellate_loop(&sq, 1e-3).unwrap();
        assert_eq!(pl.vertices.len(), 4);
        assert!(pl.closed);
    }

    #[test]
    fn unit_circle_meets_sagitta_bound() {
        let c = Loop::circle(Point2::new(0.3, -0.2), 1.0);
        let pl = tessellate_loop(&c, 1e-3).unwrap();
        let need = (std::f64::consts::PI / (1.0f64 - 1e-3).acos()).ceil() as usize;
        assert!(pl.vertices.len() >= need, "{} < {}", pl.vertices.len(), need);
        for v in &pl.vertices {
            assert!((v.dist(Point2::new(0.3, -0.2)) - 1.0).abs() < 1e-9);
        }
        // max chord deviation = sagitta of one step
        let step = std::f64::consts::TAU / pl.vertices.len() as f64;
        assert!(1.0 - (step / 2.0).cos() <= 1e-3);
    }

    #[test]
    fn coarse_tolerance_hits_floor() {
        let mut lp = Loop::new(Point2::new(1.0, 0.0));
        lp.curves.push(CurveCmd::Arc { end: Point2::new(-1.0, 0.0), sweep: 180.0, clockwise: false, relative: false });
        lp.closed = true;
        let pl = tessellate_loop(&lp, 1.0).unwrap();
        // 8 arc chords plus the closing diameter
        assert_eq!(pl.vertices.len(), MIN_ARC_SEGMENTS + 1);
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        let sq = Loop::rect(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0));
        assert!(tessellate_loop(&sq, 0.0).is_err());
    }
}
