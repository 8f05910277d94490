use std::fmt;

use serde::Serialize;

use crate::geometry::polygon::{crossings_odd, on_boundary, rings_cross, self_intersects};
use crate::geometry::{solve_arc, tessellate_loop};

use super::types::{BooleanOp, CADModel, CurveCmd, Face, Loop, Point2, Segment, Sketch, Vec3, EPS_CLOSE};

/// Tolerance on unit length and orthogonality of sketch axes.
pub const AXIS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    NoPairs,
    FirstOpNotNew,
    NonFinite,
    AxisNotUnit,
    AxesNotOrthogonal,
    NoFaces,
    BadExtrude,
    EmptyLoop,
    CircleMixed,
    BadRadius,
    BadSweep,
    DegenerateArc,
    OpenLoop,
    SelfIntersecting,
    HoleOutside,
    HolesOverlap,
}

impl ViolationKind {
    pub fn message(self) -> &'static str {
        match self {
            ViolationKind::NoPairs => "model has no sketch-extrude pairs",
            ViolationKind::FirstOpNotNew => "first op must be NewBody",
            ViolationKind::NonFinite => "non-finite parameter",
            ViolationKind::AxisNotUnit => "axis is not unit length",
            ViolationKind::AxesNotOrthogonal => "x_axis not orthogonal to normal",
            ViolationKind::NoFaces => "sketch has no faces",
            ViolationKind::BadExtrude => "extrusion distances must be >= 0 with positive sum",
            ViolationKind::EmptyLoop => "loop has no curves",
            ViolationKind::CircleMixed => "circle mixed with other curves",
            ViolationKind::BadRadius => "circle radius must be positive",
            ViolationKind::BadSweep => "arc sweep outside (0, 360)",
            ViolationKind::DegenerateArc => "arc start and end coincide",
            ViolationKind::OpenLoop => "open loop",
            ViolationKind::SelfIntersecting => "self-intersecting loop",
            ViolationKind::HoleOutside => "hole not strictly inside outer loop",
            ViolationKind::HolesOverlap => "holes overlap",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    /// Location such as `pairs[1].sketch.faces[0].holes[2]`.
    pub path: String,
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, path: &str, kind: ViolationKind) {
        self.violations.push(Violation { path: path.to_string(), kind, message: kind.message().to_string() });
    }

    fn push_detail(&mut self, path: &str, kind: ViolationKind, detail: String) {
        self.violations.push(Violation {
            path: path.to_string(),
            kind,
            message: format!("{}: {detail}", kind.message()),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate_model(model: &CADModel) -> ValidationReport {
    let mut r = ValidationReport::default();
    if model.pairs.is_empty() {
        r.push("pairs", ViolationKind::NoPairs);
        return r;
    }
    if model.pairs[0].op != BooleanOp::NewBody {
        r.push("pairs[0].op", ViolationKind::FirstOpNotNew);
    }
    for (k, pair) in model.pairs.iter().enumerate() {
        let path = format!("pairs[{k}]");
        validate_sketch_into(&pair.sketch, &format!("{path}.sketch"), &mut r);
        let e = pair.extrude;
        if !e.dist_pos.is_finite() || !e.dist_neg.is_finite() {
            r.push(&format!("{path}.extrude"), ViolationKind::NonFinite);
        } else if e.dist_pos < 0.0 || e.dist_neg < 0.0 || !(e.dist_pos + e.dist_neg > 0.0) {
            r.push_detail(&format!("{path}.extrude"), ViolationKind::BadExtrude, format!("({}, {})", e.dist_pos, e.dist_neg));
        }
    }
    r
}

pub fn validate_sketch(sketch: &Sketch) -> ValidationReport {
    let mut r = ValidationReport::default();
    validate_sketch_into(sketch, "sketch", &mut r);
    r
}

pub fn validate_face(face: &Face) -> ValidationReport {
    let mut r = ValidationReport::default();
    validate_face_into(face, "face", &mut r);
    r
}

pub fn validate_loop(lp: &Loop) -> ValidationReport {
    let mut r = ValidationReport::default();
    validate_loop_into(lp, "loop", &mut r);
    r
}

fn check_vec(v: Vec3, unit: bool, path: &str, r: &mut ValidationReport) -> bool {
    if !v.is_finite() {
        r.push(path, ViolationKind::NonFinite);
        return false;
    }
    if unit && (v.norm() - 1.0).abs() > AXIS_TOL {
        r.push_detail(path, ViolationKind::AxisNotUnit, format!("|v| = {}", v.norm()));
        return false;
    }
    true
}

fn validate_sketch_into(sk: &Sketch, path: &str, r: &mut ValidationReport) {
    check_vec(sk.origin, false, &format!("{path}.origin"), r);
    let xo = check_vec(sk.x_axis, true, &format!("{path}.x_axis"), r);
    let no = check_vec(sk.normal, true, &format!("{path}.normal"), r);
    if xo && no && sk.x_axis.dot(sk.normal).abs() > AXIS_TOL {
        r.push(&format!("{path}.x_axis"), ViolationKind::AxesNotOrthogonal);
    }
    if sk.faces.is_empty() {
        r.push(&format!("{path}.faces"), ViolationKind::NoFaces);
    }
    for (i, face) in sk.faces.iter().enumerate() {
        validate_face_into(face, &format!("{path}.faces[{i}]"), r);
    }
}

/// Chord tolerance used for the containment checks of a single face.
fn face_tol(face: &Face) -> f64 {
    let (mut lo, mut hi) = (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for seg in face.outer.segments() {
        let pts = match seg {
            Segment::Line { from, to } | Segment::Arc { from, to, .. } => [from, to],
            Segment::Circle { center, radius } => {
                [center - Point2::new(radius, radius), center + Point2::new(radius, radius)]
            }
        };
        for p in pts {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
    }
    let d = hi.dist(lo);
    if d.is_finite() && d > 0.0 { 1e-3 * d } else { 1e-3 }
}

fn validate_face_into(face: &Face, path: &str, r: &mut ValidationReport) {
    let before = r.violations.len();
    validate_loop_into(&face.outer, &format!("{path}.outer"), r);
    for (i, h) in face.holes.iter().enumerate() {
        validate_loop_into(h, &format!("{path}.holes[{i}]"), r);
    }
    if r.violations.len() > before || face.holes.is_empty() {
        return;
    }
    let tol = face_tol(face);
    let Ok(outer) = tessellate_loop(&face.outer, tol) else { return };
    let outer = outer.vertices;
    let mut rings = Vec::with_capacity(face.holes.len());
    for (i, h) in face.holes.iter().enumerate() {
        let hp = format!("{path}.holes[{i}]");
        let Ok(ring) = tessellate_loop(h, tol) else { return };
        let ring = ring.vertices;
        let inside = ring.iter().all(|&p| crossings_odd(&outer, p) && !on_boundary(&outer, p));
        if !inside || rings_cross(&outer, &ring) {
            r.push(&hp, ViolationKind::HoleOutside);
        }
        rings.push((hp, ring));
    }
    for i in 0..rings.len() {
        for j in 0..i {
            let (a, b) = (&rings[i].1, &rings[j].1);
            let overlap = rings_cross(a, b)
                || a.iter().any(|&p| crossings_odd(b, p) || on_boundary(b, p))
                || b.iter().any(|&p| crossings_odd(a, p));
            if overlap {
                r.push_detail(&rings[i].0, ViolationKind::HolesOverlap, format!("with holes[{j}]"));
            }
        }
    }
}

fn validate_loop_into(lp: &Loop, path: &str, r: &mut ValidationReport) {
    if !lp.start.is_finite() {
        r.push(&format!("{path}.start"), ViolationKind::NonFinite);
        return;
    }
    if lp.curves.is_empty() {
        r.push(path, ViolationKind::EmptyLoop);
        return;
    }
    let circles = lp.curves.iter().filter(|c| matches!(c, CurveCmd::Circle { .. })).count();
    if circles > 0 && lp.curves.len() > 1 {
        r.push(path, ViolationKind::CircleMixed);
        return;
    }
    let mut ok = true;
    for (i, c) in lp.curves.iter().enumerate() {
        let cp = format!("{path}.curves[{i}]");
        match *c {
            CurveCmd::Line { end, .. } => {
                if !end.is_finite() {
                    r.push(&cp, ViolationKind::NonFinite);
                    ok = false;
                }
            }
            CurveCmd::Arc { end, sweep, .. } => {
                if !end.is_finite() || !sweep.is_finite() {
                    r.push(&cp, ViolationKind::NonFinite);
                    ok = false;
                } else if !(sweep > 0.0 && sweep < 360.0) {
                    r.push_detail(&cp, ViolationKind::BadSweep, format!("{sweep}"));
                    ok = false;
                }
            }
            CurveCmd::Circle { radius } => {
                if !(radius > 0.0) || !radius.is_finite() {
                    r.push_detail(&cp, ViolationKind::BadRadius, format!("{radius}"));
                    ok = false;
                }
            }
        }
    }
    if !ok || lp.is_circle() {
        return;
    }
    let gap = lp.closure_gap();
    if !lp.closed && gap > EPS_CLOSE {
        r.push_detail(path, ViolationKind::OpenLoop, format!("ends {gap} from start"));
        return;
    }
    for (i, seg) in lp.segments().iter().enumerate() {
        if let Segment::Arc { from, to, sweep, clockwise } = *seg {
            if solve_arc(from, to, sweep, clockwise).is_err() {
                r.push(&format!("{path}.curves[{i}]"), ViolationKind::DegenerateArc);
                ok = false;
            }
        }
    }
    if !ok {
        return;
    }
    let tol = face_tol(&Face::new(lp.clone()));
    match tessellate_loop(lp, tol) {
        Ok(ring) => {
            if self_intersects(&ring.vertices) {
                r.push(path, ViolationKind::SelfIntersecting);
            }
        }
        Err(e) => r.push_detail(path, ViolationKind::SelfIntersecting, e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Extrude;

    #[test]
    fn unit_cube_is_valid() {
        assert!(validate_model(&CADModel::unit_cube()).is_valid());
    }

    #[test]
    fn open_loop_reported() {
        let mut lp = Loop::new(Point2::new(0.0, 0.0));
        for end in [Point2::new(1.0, 0.0), Point2::new(1.0, 1.0), Point2::new(0.0, 1.0), Point2::new(0.0, 0.1)] {
            lp.curves.push(CurveCmd::Line { end, relative: false });
        }
        let m = CADModel::single(Sketch::xy(vec![Face::new(lp.clone())]), Extrude::new(1.0, 0.0));
        let rep = validate_model(&m);
        assert!(rep.has(ViolationKind::OpenLoop), "{rep}");
        assert_eq!(rep.violations[0].message.split(':').next(), Some("open loop"));
        lp.closed = true;
        let m = CADModel::single(Sketch::xy(vec![Face::new(lp)]), Extrude::new(1.0, 0.0));
        assert!(validate_model(&m).is_valid());
    }

    #[test]
    fn first_op_cut_reported() {
        let mut m = CADModel::unit_cube();
        m.pairs[0].op = BooleanOp::Cut;
        let rep = validate_model(&m);
        assert!(rep.has(ViolationKind::FirstOpNotNew));
        assert_eq!(rep.violations[0].message, "first op must be NewBody");
    }

    #[test]
    fn empty_faces_reported() {
        let m = CADModel::single(Sketch::xy(vec![]), Extrude::new(1.0, 0.0));
        assert!(validate_model(&m).has(ViolationKind::NoFaces));
    }

    #[test]
    fn axis_checks() {
        let mut m = CADModel::unit_cube();
        m.pairs[0].sketch.x_axis = Vec3::new(1.0, 0.0, 1e-3).normalized();
        assert!(validate_model(&m).has(ViolationKind::AxesNotOrthogonal));
        m.pairs[0].sketch.x_axis = Vec3::new(2.0, 0.0, 0.0);
        assert!(validate_model(&m).has(ViolationKind::AxisNotUnit));
    }

    #[test]
    fn hole_checks() {
        let outer = Loop::rect(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0));
        let ok = Face::new(outer.clone()).with_hole(Loop::circle(Point2::new(0.5, 0.5), 0.2));
        assert!(validate_face(&ok).is_valid());
        let outside = Face::new(outer.clone()).with_hole(Loop::circle(Point2::new(0.95, 0.5), 0.2));
        assert!(validate_face(&outside).has(ViolationKind::HoleOutside));
        let overlap = Face::new(outer)
            .with_hole(Loop::circle(Point2::new(0.4, 0.5), 0.2))
            .with_hole(Loop::circle(Point2::new(0.6, 0.5), 0.2));
        assert!(validate_face(&overlap).has(ViolationKind::HolesOverlap));
    }

    #[test]
    fn curve_checks() {
        let lp = Loop {
            start: Point2::new(0.0, 0.0),
            curves: vec![CurveCmd::Line { end: Point2::new(1.0, 0.0), relative: false }, CurveCmd::Circle { radius: 1.0 }],
            closed: true,
        };
        assert!(validate_loop(&lp).has(ViolationKind::CircleMixed));
        assert!(validate_loop(&Loop::circle(Point2::new(0.0, 0.0), 0.0)).has(ViolationKind::BadRadius));
        let arc = Loop {
            start: Point2::new(0.0, 0.0),
            curves: vec![CurveCmd::Arc { end: Point2::new(1.0, 0.0), sweep: 360.0, clockwise: false, relative: false }],
            closed: true,
        };
        assert!(validate_loop(&arc).has(ViolationKind::BadSweep));
        let bowtie = Loop::polygon(&[Point2::new(0.0, 0.0), Point2::new(1.0, 1.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)]);
        assert!(validate_loop(&bowtie).has(ViolationKind::SelfIntersecting));
    }
}
