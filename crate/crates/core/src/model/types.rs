use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Loop closure tolerance in model units.
pub const EPS_CLOSE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(a: [f64; 2]) -> Self {
        Point2::new(a[0], a[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        self * (1.0 / self.norm())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// One drawing command of a loop.
///
/// `relative` endpoints are offsets from the current pen position.
/// A circle is centered on the pen position set by `moveTo`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CurveCmd {
    Line {
        end: Point2,
        #[serde(default)]
        relative: bool,
    },
    Arc {
        end: Point2,
        /// Sweep in degrees, strictly inside (0, 360).
        sweep: f64,
        clockwise: bool,
        #[serde(default)]
        relative: bool,
    },
    Circle {
        radius: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Line,
    Arc,
    Circle,
}

impl CurveCmd {
    pub fn kind(&self) -> CurveKind {
        match self {
            CurveCmd::Line { .. } => CurveKind::Line,
            CurveCmd::Arc { .. } => CurveKind::Arc,
            CurveCmd::Circle { .. } => CurveKind::Circle,
        }
    }
}

/// A curve with its endpoints resolved to absolute sketch coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Segment {
    Line { from: Point2, to: Point2 },
    Arc { from: Point2, to: Point2, sweep: f64, clockwise: bool },
    Circle { center: Point2, radius: f64 },
}

impl Segment {
    pub fn kind(&self) -> CurveKind {
        match self {
            Segment::Line { .. } => CurveKind::Line,
            Segment::Arc { .. } => CurveKind::Arc,
            Segment::Circle { .. } => CurveKind::Circle,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Loop {
    pub start: Point2,
    pub curves: Vec<CurveCmd>,
    #[serde(default)]
    pub closed: bool,
}

impl Loop {
    pub fn new(start: Point2) -> Self {
        Loop { start, curves: Vec::new(), closed: false }
    }

    pub fn circle(center: Point2, radius: f64) -> Self {
        Loop { start: center, curves: vec![CurveCmd::Circle { radius }], closed: true }
    }

    /// Closed polygon through `pts` with absolute line commands.
    pub fn polygon(pts: &[Point2]) -> Self {
        let mut curves: Vec<CurveCmd> =
            pts[1..].iter().map(|&end| CurveCmd::Line { end, relative: false }).collect();
        curves.push(CurveCmd::Line { end: pts[0], relative: false });
        Loop { start: pts[0], curves, closed: true }
    }

    /// Axis-aligned rectangle, counter-clockwise from the min corner.
    pub fn rect(min: Point2, max: Point2) -> Self {
        Loop::polygon(&[min, Point2::new(max.x, min.y), max, Point2::new(min.x, max.y)])
    }

    pub fn is_circle(&self) -> bool {
        matches!(self.curves.as_slice(), [CurveCmd::Circle { .. }])
    }

    /// Pen position after the last explicit curve.
    pub fn end_point(&self) -> Point2 {
        let mut pen = self.start;
        for c in &self.curves {
            match *c {
                CurveCmd::Line { end, relative } | CurveCmd::Arc { end, relative, .. } => {
                    pen = if relative { pen + end } else { end };
                }
                CurveCmd::Circle { .. } => {}
            }
        }
        pen
    }

    /// Gap between the pen after the last curve and the start point.
    pub fn closure_gap(&self) -> f64 {
        if self.is_circle() {
            0.0
        } else {
            self.end_point().dist(self.start)
        }
    }

    /// Absolute segments, including the implicit closing line that `close()`
    /// adds when the pen has not returned to the start.
    pub fn segments(&self) -> Vec<Segment> {
        let mut out = Vec::with_capacity(self.curves.len() + 1);
        let mut pen = self.start;
        for c in &self.curves {
            match *c {
                CurveCmd::Line { end, relative } => {
                    let to = if relative { pen + end } else { end };
                    out.push(Segment::Line { from: pen, to });
                    pen = to;
                }
                CurveCmd::Arc { end, sweep, clockwise, relative } => {
                    let to = if relative { pen + end } else { end };
                    out.push(Segment::Arc { from: pen, to, sweep, clockwise });
                    pen = to;
                }
                CurveCmd::Circle { radius } => {
                    out.push(Segment::Circle { center: pen, radius });
                }
            }
        }
        if self.closed && !self.is_circle() && pen.dist(self.start) > EPS_CLOSE {
            out.push(Segment::Line { from: pen, to: self.start });
        }
        out
    }

    /// Same loop with every endpoint made absolute.
    pub fn to_absolute(&self) -> Loop {
        let mut pen = self.start;
        let curves = self
            .curves
            .iter()
            .map(|c| match *c {
                CurveCmd::Line { end, relative } => {
                    pen = if relative { pen + end } else { end };
                    CurveCmd::Line { end: pen, relative: false }
                }
                CurveCmd::Arc { end, sweep, clockwise, relative } => {
                    pen = if relative { pen + end } else { end };
                    CurveCmd::Arc { end: pen, sweep, clockwise, relative: false }
                }
                circle @ CurveCmd::Circle { .. } => circle,
            })
            .collect();
        Loop { start: self.start, curves, closed: self.closed }
    }

    fn map_points(&self, f: &impl Fn(Point2) -> Point2, scale: f64) -> Loop {
        let abs = self.to_absolute();
        Loop {
            start: f(abs.start),
            curves: abs
                .curves
                .iter()
                .map(|c| match *c {
                    CurveCmd::Line { end, .. } => CurveCmd::Line { end: f(end), relative: false },
                    CurveCmd::Arc { end, sweep, clockwise, .. } => {
                        CurveCmd::Arc { end: f(end), sweep, clockwise, relative: false }
                    }
                    CurveCmd::Circle { radius } => CurveCmd::Circle { radius: radius * scale },
                })
                .collect(),
            closed: abs.closed,
        }
    }

    /// Uniformly scales the loop about the sketch origin.
    pub fn scaled(&self, s: f64) -> Loop {
        self.map_points(&|p| p * s, s)
    }

    /// Rotates the loop about the sketch origin by a multiple of 90 degrees.
    pub fn rotated_quarter_turns(&self, turns: i32) -> Loop {
        let t = turns.rem_euclid(4);
        self.map_points(
            &|p| match t {
                0 => p,
                1 => Point2::new(-p.y, p.x),
                2 => Point2::new(-p.x, -p.y),
                _ => Point2::new(p.y, -p.x),
            },
            1.0,
        )
    }

    pub fn translated(&self, d: Point2) -> Loop {
        self.map_points(&|p| p + d, 1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub outer: Loop,
    #[serde(default)]
    pub holes: Vec<Loop>,
}

impl Face {
    pub fn new(outer: Loop) -> Self {
        Face { outer, holes: Vec::new() }
    }

    pub fn with_hole(mut self, hole: Loop) -> Self {
        self.holes.push(hole);
        self
    }

    /// Outer loop first, then holes.
    pub fn loops(&self) -> impl Iterator<Item = &Loop> {
        std::iter::once(&self.outer).chain(self.holes.iter())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sketch {
    pub origin: Vec3,
    pub x_axis: Vec3,
    pub normal: Vec3,
    pub faces: Vec<Face>,
}

impl Sketch {
    /// Sketch on the world XY plane at the origin.
    pub fn xy(faces: Vec<Face>) -> Self {
        Sketch { origin: Vec3::ZERO, x_axis: Vec3::X, normal: Vec3::Z, faces }
    }

    pub fn y_axis(&self) -> Vec3 {
        self.normal.cross(self.x_axis)
    }

    /// World position of sketch point `p` lifted by `h` along the normal.
    pub fn to_world(&self, p: Point2, h: f64) -> Vec3 {
        let y = self.y_axis();
        Vec3::new(
            self.origin.x + p.x * self.x_axis.x + p.y * y.x + h * self.normal.x,
            self.origin.y + p.x * self.x_axis.y + p.y * y.y + h * self.normal.y,
            self.origin.z + p.x * self.x_axis.z + p.y * y.z + h * self.normal.z,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrude {
    /// Distance along the sketch normal.
    pub dist_pos: f64,
    /// Distance against the sketch normal.
    pub dist_neg: f64,
}

impl Extrude {
    pub const fn new(dist_pos: f64, dist_neg: f64) -> Self {
        Extrude { dist_pos, dist_neg }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BooleanOp {
    #[serde(rename = "new")]
    NewBody,
    #[serde(rename = "join")]
    Join,
    #[serde(rename = "cut")]
    Cut,
    #[serde(rename = "intersect")]
    Intersect,
}

impl BooleanOp {
    /// Script spelling of the operation.
    pub fn as_str(self) -> &'static str {
        match self {
            BooleanOp::NewBody => "new",
            BooleanOp::Join => "join",
            BooleanOp::Cut => "cut",
            BooleanOp::Intersect => "intersect",
        }
    }

    /// Accepts the script spellings plus a few common aliases, case-insensitively.
    pub fn parse(s: &str) -> Option<BooleanOp> {
        match s.to_ascii_lowercase().as_str() {
            "new" | "newbody" | "new_body" | "newbodyfeatureoperation" => Some(BooleanOp::NewBody),
            "join" | "union" | "add" | "joinfeatureoperation" => Some(BooleanOp::Join),
            "cut" | "subtract" | "difference" | "cutfeatureoperation" => Some(BooleanOp::Cut),
            "intersect" | "intersection" | "intersectfeatureoperation" => {
                Some(BooleanOp::Intersect)
            }
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SEPair {
    pub sketch: Sketch,
    pub extrude: Extrude,
    pub op: BooleanOp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CADModel {
    pub pairs: Vec<SEPair>,
}

impl CADModel {
    pub fn single(sketch: Sketch, extrude: Extrude) -> Self {
        CADModel { pairs: vec![SEPair { sketch, extrude, op: BooleanOp::NewBody }] }
    }

    pub fn with(mut self, sketch: Sketch, extrude: Extrude, op: BooleanOp) -> Self {
        self.pairs.push(SEPair { sketch, extrude, op });
        self
    }

    pub fn loops(&self) -> impl Iterator<Item = &Loop> {
        self.pairs.iter().flat_map(|p| p.sketch.faces.iter().flat_map(|f| f.loops()))
    }

    /// Unit cube `[0,1]^3` as a single extruded square.
    pub fn unit_cube() -> Self {
        CADModel::single(
            Sketch::xy(vec![Face::new(Loop::rect(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)))]),
            Extrude::new(1.0, 0.0),
        )
    }
}
