//! Analytic point membership: each pair is a prism tested in its sketch frame,
//! and the model is a left fold of the boolean operations over the pairs.

use crate::model::{BooleanOp, CADModel, Face, Point2, SEPair, Segment, Vec3};

use super::arc::solve_arc;
use super::polygon::{crossings_odd, on_boundary, BOUNDARY_EPS};
use super::tessellate::tessellate_loop;
use super::GeometryError;

/// Fraction of the model diagonal used as the default chord tolerance.
pub const CHORD_TOL_FRACTION: f64 = 1e-3;

/// Sum of three terms in ascending order, so that permuting or negating the
/// coordinate axes of both operands yields a bit-identical dot product.
#[inline]
pub(crate) fn sum3_sorted(mut t: [f64; 3]) -> f64 {
    if t[0] > t[1] {
        t.swap(0, 1);
    }
    if t[1] > t[2] {
        t.swap(1, 2);
    }
    if t[0] > t[1] {
        t.swap(0, 1);
    }
    t[0] + t[1] + t[2]
}

#[inline]
pub(crate) fn dot_sym(a: Vec3, b: Vec3) -> f64 {
    sum3_sorted([a.x * b.x, a.y * b.y, a.z * b.z])
}

pub(crate) fn norm_sym(v: Vec3) -> f64 {
    dot_sym(v, v).sqrt()
}

#[derive(Clone, Debug)]
struct CompiledFace {
    rings: Vec<Vec<Point2>>,
    lo: Point2,
    hi: Point2,
}

impl CompiledFace {
    fn new(face: &Face, chord_tol: f64) -> Result<Self, GeometryError> {
        let mut rings = Vec::new();
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for lp in face.loops() {
            let ring = tessellate_loop(lp, chord_tol)?.vertices;
            for p in &ring {
                lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
            }
            rings.push(ring);
        }
        Ok(CompiledFace { rings, lo, hi })
    }

    fn contains(&self, p: Point2) -> bool {
        let e = BOUNDARY_EPS;
        if p.x < self.lo.x - e || p.x > self.hi.x + e || p.y < self.lo.y - e || p.y > self.hi.y + e {
            return false;
        }
        let odd = self.rings.iter().fold(false, |acc, r| acc ^ crossings_odd(r, p));
        odd || self.rings.iter().any(|r| on_boundary(r, p))
    }
}

#[derive(Clone, Debug)]
struct CompiledSe {
    origin: Vec3,
    x: Vec3,
    y: Vec3,
    n: Vec3,
    lo: f64,
    hi: f64,
    faces: Vec<CompiledFace>,
    op: BooleanOp,
}

impl CompiledSe {
    fn new(pair: &SEPair, chord_tol: f64) -> Result<Self, GeometryError> {
        let sk = &pair.sketch;
        let faces = sk
            .faces
            .iter()
            .map(|f| CompiledFace::new(f, chord_tol))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CompiledSe {
            origin: sk.origin,
            x: sk.x_axis,
            y: sk.y_axis(),
            n: sk.normal,
            lo: -pair.extrude.dist_neg,
            hi: pair.extrude.dist_pos,
            faces,
            op: pair.op,
        })
    }

    fn contains(&self, p: Vec3) -> bool {
        let d = p - self.origin;
        let h = dot_sym(d, self.n);
        if h < self.lo - BOUNDARY_EPS || h > self.hi + BOUNDARY_EPS {
            return false;
        }
        let q = Point2::new(dot_sym(d, self.x), dot_sym(d, self.y));
        self.faces.iter().any(|f| f.contains(q))
    }
}

/// A model with every loop tessellated once, ready for repeated membership queries.
#[derive(Clone, Debug)]
pub struct CompiledModel {
    pairs: Vec<CompiledSe>,
}

impl CompiledModel {
    pub fn new(model: &CADModel, chord_tol: f64) -> Result<Self, GeometryError> {
        let pairs = model
            .pairs
            .iter()
            .map(|p| CompiledSe::new(p, chord_tol))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CompiledModel { pairs })
    }

    /// Compiles with [`default_chord_tol`].
    pub fn with_default_tol(model: &CADModel) -> Result<Self, GeometryError> {
        CompiledModel::new(model, default_chord_tol(model)?)
    }

    pub fn contains(&self, p: Vec3) -> bool {
        self.pairs.iter().fold(false, |acc, se| match se.op {
            BooleanOp::NewBody | BooleanOp::Join => acc || se.contains(p),
            BooleanOp::Cut => acc && !se.contains(p),
            BooleanOp::Intersect => acc && se.contains(p),
        })
    }

    /// Membership in pair `k` alone.
    pub fn contains_in_pair(&self, k: usize, p: Vec3) -> bool {
        self.pairs[k].contains(p)
    }
}

/// Even-odd membership in the tessellated face; boundary points are inside.
pub fn point_in_face(face: &Face, p: Point2, chord_tol: f64) -> Result<bool, GeometryError> {
    Ok(CompiledFace::new(face, chord_tol)?.contains(p))
}

pub fn point_in_se(se: &SEPair, p: Vec3, chord_tol: f64) -> Result<bool, GeometryError> {
    Ok(CompiledSe::new(se, chord_tol)?.contains(p))
}

pub fn membership(model: &CADModel, p: Vec3, chord_tol: f64) -> Result<bool, GeometryError> {
    Ok(CompiledModel::new(model, chord_tol)?.contains(p))
}

/// Conservative bounds from curve endpoints and full circles of every arc.
fn rough_bounds(model: &CADModel) -> Option<(Vec3, Vec3)> {
    let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = -lo;
    let mut any = false;
    for pair in &model.pairs {
        let sk = &pair.sketch;
        let mut pts: Vec<Point2> = Vec::new();
        for lp in sk.faces.iter().flat_map(|f| f.loops()) {
            for seg in lp.segments() {
                match seg {
                    Segment::Line { from, to } => pts.extend([from, to]),
                    Segment::Arc { from, to, sweep, clockwise } => {
                        pts.extend([from, to]);
                        if let Ok(a) = solve_arc(from, to, sweep, clockwise) {
                            let (c, r) = (a.center, a.radius);
                            pts.extend([Point2::new(c.x - r, c.y - r), Point2::new(c.x + r, c.y + r)]);
                        }
                    }
                    Segment::Circle { center, radius } => pts.extend([
                        Point2::new(center.x - radius, center.y - radius),
                        Point2::new(center.x + radius, center.y + radius),
                    ]),
                }
            }
        }
        let (l, h) = (-pair.extrude.dist_neg, pair.extrude.dist_pos);
        for p in pts {
            for z in [l, h] {
                let w = sk.to_world(p, z);
                lo = lo.min(w);
                hi = hi.max(w);
                any = true;
            }
        }
    }
    any.then_some((lo, hi))
}

/// `CHORD_TOL_FRACTION` of the model diagonal.
pub fn default_chord_tol(model: &CADModel) -> Result<f64, GeometryError> {
    let (lo, hi) = rough_bounds(model).ok_or_else(|| GeometryError::EmptySolid("model has no curves".into()))?;
    let diag = norm_sym(hi - lo);
    if !(diag > 0.0) || !diag.is_finite() {
        return Err(GeometryError::Degenerate(format!("model diagonal {diag}")));
    }
    Ok(CHORD_TOL_FRACTION * diag)
}

/// Axis-aligned bounds over the tessellated prisms of the material-adding
/// pairs. Cut and intersect pairs only remove material and are skipped.
pub fn model_bounds(model: &CADModel, chord_tol: f64) -> Result<(Vec3, Vec3), GeometryError> {
    let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = -lo;
    for pair in model.pairs.iter().filter(|p| matches!(p.op, BooleanOp::NewBody | BooleanOp::Join)) {
        let sk = &pair.sketch;
        for lp in sk.faces.iter().flat_map(|f| f.loops()) {
            for p in tessellate_loop(lp, chord_tol)?.vertices {
                for z in [-pair.extrude.dist_neg, pair.extrude.dist_pos] {
                    let w = sk.to_world(p, z);
                    lo = lo.min(w);
                    hi = hi.max(w);
                }
            }
        }
    }
    if !(lo.x <= hi.x) {
        return Err(GeometryError::EmptySolid("model has no loops".into()));
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Extrude, Loop, Sketch};

    fn holed_square() -> Face {
        Face::new(Loop::rect(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)))
            .with_hole(Loop::rect(Point2::new(0.25, 0.25), Point2::new(0.75, 0.75)))
    }

    #[test]
    fn face_membership() {
        let sq = Face::new(Loop::rect(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)));
        assert!(point_in_face(&sq, Point2::new(0.5, 0.5), 1e-3).unwrap());
        assert!(point_in_face(&sq, Point2::new(1.0, 0.5), 1e-3).unwrap());
        assert!(point_in_face(&sq, Point2::new(0.0, 0.0), 1e-3).unwrap());
        assert!(!point_in_face(&sq, Point2::new(1.0 + 1e-6, 0.5), 1e-3).unwrap());
        assert!(!point_in_face(&holed_square(), Point2::new(0.5, 0.5), 1e-3).unwrap());
        assert!(point_in_face(&holed_square(), Point2::new(0.1, 0.5), 1e-3).unwrap());
    }

    #[test]
    fn se_membership() {
        let cube = CADModel::unit_cube();
        let se = &cube.pairs[0];
        assert!(point_in_se(se, Vec3::new(0.5, 0.5, 0.5), 1e-3).unwrap());
        assert!(!point_in_se(se, Vec3::new(0.5, 0.5, 1.0 + 1e-6), 1e-3).unwrap());
        let holed = SEPair {
            sketch: Sketch::xy(vec![holed_square()]),
            extrude: Extrude::new(1.0, 0.0),
            op: BooleanOp::NewBody,
        };
        // on the hole axis, inside the bounding box
        assert!(!point_in_se(&holed, Vec3::new(0.5, 0.5, 0.5), 1e-3).unwrap());
        assert!(point_in_se(&holed, Vec3::new(0.1, 0.5, 0.5), 1e-3).unwrap());
    }

    #[test]
    fn cut_fold() {
        let m = CADModel::unit_cube().with(
            Sketch::xy(vec![Face::new(Loop::circle(Point2::new(0.5, 0.5), 0.25))]),
            Extrude::new(1.0, 0.0),
            BooleanOp::Cut,
        );
        assert!(!membership(&m, Vec3::new(0.5, 0.5, 0.5), 1e-3).unwrap());
        // corner is 0.5*sqrt(2) - 0.05 from the axis, well outside r = 0.25
        assert!(membership(&m, Vec3::new(0.05, 0.05, 0.5), 1e-3).unwrap());
        assert!(!membership(&CADModel::unit_cube(), Vec3::new(2.0, 0.5, 0.5), 1e-3).unwrap());
    }

    #[test]
    fn intersect_fold() {
        let m = CADModel::unit_cube().with(
            Sketch::xy(vec![Face::new(Loop::rect(Point2::new(0.5, 0.0), Point2::new(2.0, 1.0)))]),
            Extrude::new(1.0, 0.0),
            BooleanOp::Intersect,
        );
        assert!(membership(&m, Vec3::new(0.75, 0.5, 0.5), 1e-3).unwrap());
        assert!(!membership(&m, Vec3::new(0.25, 0.5, 0.5), 1e-3).unwrap());
        assert!(!membership(&m, Vec3::new(1.5, 0.5, 0.5), 1e-3).unwrap());
    }

    #[test]
    fn bounds_and_tolerance() {
        let cube = CADModel::unit_cube();
        let (lo, hi) = model_bounds(&cube, 1e-3).unwrap();
        assert_eq!(lo, Vec3::ZERO);
        assert_eq!(hi, Vec3::new(1.0, 1.0, 1.0));
        let tol = default_chord_tol(&cube).unwrap();
        assert!((tol - 1e-3 * 3f64.sqrt()).abs() < 1e-15);
    }
}
