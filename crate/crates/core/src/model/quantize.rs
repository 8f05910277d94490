//! 8-bit quantization of model parameters.
//!
//! Coordinates in `[-1, 1]` map to `round((x + 1) / 2 * 255)` with ties
//! rounded up. Non-negative magnitudes (circle radii, extrusion distances)
//! live in `[0, 2]` and map to `round(d / 2 * 255)`, which keeps a zero
//! extrusion exactly zero. Both use the same step of `2/255`.
//!
//! Angles are whole degrees. Arc sweeps are stored directly; sketch planes
//! are stored as three angles `(theta, phi, gamma)`: the normal has polar
//! angle `theta` and azimuth `phi`, and the x axis is the polar tangent
//! `(cos theta cos phi, cos theta sin phi, -sin theta)` turned by `gamma`
//! about the normal. At the poles `phi` is fixed to 0.
//!
//! Relative curve endpoints are resolved to absolute ones.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Categorized, FailureCategory};

use super::types::{BooleanOp, CADModel, CurveCmd, Extrude, Face, Loop, Point2, SEPair, Sketch, Vec3};

pub const LEVELS: u32 = 256;
const MAX_LEVEL: f64 = 255.0;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field} = {value} outside {range}")]
pub struct RangeError {
    pub field: String,
    pub value: f64,
    pub range: &'static str,
}

impl Categorized for RangeError {
    fn category(&self) -> FailureCategory {
        FailureCategory::Range
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum QCurve {
    Line { end: [u8; 2] },
    Arc { end: [u8; 2], sweep: u16, clockwise: bool },
    Circle { radius: u8 },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QLoop {
    pub start: [u8; 2],
    pub curves: Vec<QCurve>,
    pub closed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QFace {
    pub outer: QLoop,
    pub holes: Vec<QLoop>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QSketch {
    pub origin: [u8; 3],
    /// `[theta, phi, gamma]` in degrees.
    pub orientation: [u16; 3],
    pub faces: Vec<QFace>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QPair {
    pub sketch: QSketch,
    pub extrude: [u8; 2],
    pub op: BooleanOp,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuantizedModel {
    pub pairs: Vec<QPair>,
}

fn round_half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

pub fn quantize_coord(x: f64, field: &str) -> Result<u8, RangeError> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(RangeError { field: field.to_string(), value: x, range: "[-1, 1]" });
    }
    Ok(round_half_up((x + 1.0) / 2.0 * MAX_LEVEL) as u8)
}

pub fn dequantize_coord(k: u8) -> f64 {
    2.0 * k as f64 / MAX_LEVEL - 1.0
}

pub fn quantize_magnitude(d: f64, field: &str) -> Result<u8, RangeError> {
    if !(0.0..=2.0).contains(&d) {
        return Err(RangeError { field: field.to_string(), value: d, range: "[0, 2]" });
    }
    Ok(round_half_up(d / 2.0 * MAX_LEVEL) as u8)
}

pub fn dequantize_magnitude(k: u8) -> f64 {
    2.0 * k as f64 / MAX_LEVEL
}

/// Radians to whole degrees, so `[0, pi]` lands on `[0, 180]`.
pub fn quantize_angle_radians(a: f64) -> i64 {
    round_half_up(a.to_degrees()) as i64
}

/// `(sin, cos)` of whole degrees, exact at multiples of 90.
pub fn sin_cos_deg(deg: i64) -> (f64, f64) {
    match deg.rem_euclid(360) {
        0 => (0.0, 1.0),
        90 => (1.0, 0.0),
        180 => (0.0, -1.0),
        270 => (-1.0, 0.0),
        d => (d as f64).to_radians().sin_cos(),
    }
}

fn frame_from_angles(theta: i64, phi: i64, gamma: i64) -> (Vec3, Vec3) {
    let (st, ct) = sin_cos_deg(theta);
    let (sp, cp) = sin_cos_deg(phi);
    let (sg, cg) = sin_cos_deg(gamma);
    let n = Vec3::new(st * cp, st * sp, ct);
    let r = Vec3::new(ct * cp, ct * sp, -st);
    let b = n.cross(r);
    (n, r * cg + b * sg)
}

/// Whole-degree `(theta, phi, gamma)` of a sketch frame.
pub fn quantize_orientation(x_axis: Vec3, normal: Vec3, field: &str) -> Result<[u16; 3], RangeError> {
    let bad = |v: f64| RangeError { field: field.to_string(), value: v, range: "unit axes" };
    let (nl, xl) = (normal.norm(), x_axis.norm());
    if !(nl > 0.0 && xl > 0.0) || !nl.is_finite() || !xl.is_finite() {
        return Err(bad(nl.min(xl)));
    }
    let n = normal * (1.0 / nl);
    let x = x_axis * (1.0 / xl);
    let theta = round_half_up(n.z.clamp(-1.0, 1.0).acos().to_degrees()) as i64;
    let phi = if theta == 0 || theta == 180 {
        0
    } else {
        (round_half_up(n.y.atan2(n.x).to_degrees()) as i64).rem_euclid(360)
    };
    let (qn, r) = frame_from_angles(theta, phi, 0);
    let b = qn.cross(r);
    let gamma = (round_half_up(x.dot(b).atan2(x.dot(r)).to_degrees()) as i64).rem_euclid(360);
    Ok([theta as u16, phi as u16, gamma as u16])
}

pub fn dequantize_orientation(q: [u16; 3]) -> (Vec3, Vec3) {
    let (n, x) = frame_from_angles(q[0] as i64, q[1] as i64, q[2] as i64);
    (x, n)
}

fn qpoint(p: Point2, field: &str) -> Result<[u8; 2], RangeError> {
    Ok([quantize_coord(p.x, &format!("{field}.x"))?, quantize_coord(p.y, &format!("{field}.y"))?])
}

fn dpoint(q: [u8; 2]) -> Point2 {
    Point2::new(dequantize_coord(q[0]), dequantize_coord(q[1]))
}

pub fn quantize_loop(lp: &Loop, path: &str) -> Result<QLoop, RangeError> {
    let abs = lp.to_absolute();
    let mut curves = Vec::with_capacity(abs.curves.len());
    for (i, c) in abs.curves.iter().enumerate() {
        let cp = format!("{path}.curves[{i}]");
        curves.push(match *c {
            CurveCmd::Line { end, .. } => QCurve::Line { end: qpoint(end, &format!("{cp}.end"))? },
            CurveCmd::Arc { end, sweep, clockwise, .. } => {
                if !(sweep > 0.0 && sweep < 360.0) {
                    return Err(RangeError { field: format!("{cp}.sweep"), value: sweep, range: "(0, 360)" });
                }
                let s = round_half_up(sweep).clamp(1.0, 359.0) as u16;
                QCurve::Arc { end: qpoint(end, &format!("{cp}.end"))?, sweep: s, clockwise }
            }
            CurveCmd::Circle { radius } => {
                let r = quantize_magnitude(radius, &format!("{cp}.radius"))?.max(1);
                QCurve::Circle { radius: r }
            }
        });
    }
    Ok(QLoop { start: qpoint(abs.start, &format!("{path}.start"))?, curves, closed: abs.closed })
}

pub fn dequantize_loop(q: &QLoop) -> Loop {
    Loop {
        start: dpoint(q.start),
        curves: q
            .curves
            .iter()
            .map(|c| match *c {
                QCurve::Line { end } => CurveCmd::Line { end: dpoint(end), relative: false },
                QCurve::Arc { end, sweep, clockwise } => {
                    CurveCmd::Arc { end: dpoint(end), sweep: sweep as f64, clockwise, relative: false }
                }
                QCurve::Circle { radius } => CurveCmd::Circle { radius: dequantize_magnitude(radius) },
            })
            .collect(),
        closed: q.closed,
    }
}

pub fn quantize_face(face: &Face, path: &str) -> Result<QFace, RangeError> {
    Ok(QFace {
        outer: quantize_loop(&face.outer, &format!("{path}.outer"))?,
        holes: face
            .holes
            .iter()
            .enumerate()
            .map(|(i, h)| quantize_loop(h, &format!("{path}.holes[{i}]")))
            .collect::<Result<_, _>>()?,
    })
}

pub fn dequantize_face(q: &QFace) -> Face {
    Face { outer: dequantize_loop(&q.outer), holes: q.holes.iter().map(dequantize_loop).collect() }
}

pub fn quantize_sketch(sk: &Sketch, path: &str) -> Result<QSketch, RangeError> {
    let o = sk.origin;
    Ok(QSketch {
        origin: [
            quantize_coord(o.x, &format!("{path}.origin.x"))?,
            quantize_coord(o.y, &format!("{path}.origin.y"))?,
            quantize_coord(o.z, &format!("{path}.origin.z"))?,
        ],
        orientation: quantize_orientation(sk.x_axis, sk.normal, &format!("{path}.normal"))?,
        faces: sk
            .faces
            .iter()
            .enumerate()
            .map(|(i, f)| quantize_face(f, &format!("{path}.faces[{i}]")))
            .collect::<Result<_, _>>()?,
    })
}

pub fn dequantize_sketch(q: &QSketch) -> Sketch {
    let (x_axis, normal) = dequantize_orientation(q.orientation);
    Sketch {
        origin: Vec3::new(dequantize_coord(q.origin[0]), dequantize_coord(q.origin[1]), dequantize_coord(q.origin[2])),
        x_axis,
        normal,
        faces: q.faces.iter().map(dequantize_face).collect(),
    }
}

pub fn quantize_pair(pair: &SEPair, path: &str) -> Result<QPair, RangeError> {
    let mut extrude = [
        quantize_magnitude(pair.extrude.dist_pos, &format!("{path}.extrude.dist_pos"))?,
        quantize_magnitude(pair.extrude.dist_neg, &format!("{path}.extrude.dist_neg"))?,
    ];
    if extrude == [0, 0] {
        extrude[0] = 1;
    }
    Ok(QPair { sketch: quantize_sketch(&pair.sketch, &format!("{path}.sketch"))?, extrude, op: pair.op })
}

pub fn dequantize_pair(q: &QPair) -> SEPair {
    SEPair {
        sketch: dequantize_sketch(&q.sketch),
        extrude: Extrude::new(dequantize_magnitude(q.extrude[0]), dequantize_magnitude(q.extrude[1])),
        op: q.op,
    }
}

pub fn quantize(model: &CADModel) -> Result<QuantizedModel, RangeError> {
    Ok(QuantizedModel {
        pairs: model
            .pairs
            .iter()
            .enumerate()
            .map(|(k, p)| quantize_pair(p, &format!("pairs[{k}]")))
            .collect::<Result<_, _>>()?,
    })
}

pub fn dequantize(q: &QuantizedModel) -> CADModel {
    CADModel { pairs: q.pairs.iter().map(dequantize_pair).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_endpoints_and_midpoint() {
        assert_eq!(quantize_coord(-1.0, "x").unwrap(), 0);
        assert_eq!(quantize_coord(1.0, "x").unwrap(), 255);
        // 127.5 rounds up
        assert_eq!(quantize_coord(0.0, "x").unwrap(), 128);
        assert_eq!(dequantize_coord(0), -1.0);
        assert_eq!(dequantize_coord(255), 1.0);
        assert!((dequantize_coord(128) - 0.003921568627451).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_names_field() {
        let err = quantize_coord(1.5, "pairs[0].sketch.origin.x").unwrap_err();
        assert_eq!(err.field, "pairs[0].sketch.origin.x");
        let mut m = CADModel::unit_cube();
        m.pairs[0].sketch.origin.z = -3.0;
        assert_eq!(quantize(&m).unwrap_err().field, "pairs[0].sketch.origin.z");
    }

    #[test]
    fn pi_is_180_degrees() {
        assert_eq!(quantize_angle_radians(std::f64::consts::PI), 180);
        assert_eq!(quantize_angle_radians(std::f64::consts::FRAC_PI_2), 90);
        assert_eq!(quantize_angle_radians(0.0), 0);
    }

    #[test]
    fn canonical_planes_are_exact() {
        for (x, n) in [(Vec3::X, Vec3::Z), (Vec3::Y, Vec3::X), (Vec3::Z, Vec3::Y), (-Vec3::X, -Vec3::Z)] {
            let q = quantize_orientation(x, n, "n").unwrap();
            let (qx, qn) = dequantize_orientation(q);
            assert_eq!((qx, qn), (x, n), "{q:?}");
        }
    }

    #[test]
    fn orientation_round_trip() {
        for theta in (0..=180).step_by(7) {
            for phi in (0..360).step_by(23) {
                for gamma in (0..360).step_by(31) {
                    let phi = if theta == 0 || theta == 180 { 0 } else { phi };
                    let q = [theta as u16, phi as u16, gamma as u16];
                    let (x, n) = dequantize_orientation(q);
                    assert!((x.norm() - 1.0).abs() < 1e-12 && x.dot(n).abs() < 1e-12);
                    assert_eq!(quantize_orientation(x, n, "n").unwrap(), q);
                }
            }
        }
    }

    #[test]
    fn model_round_trip_is_identity() {
        let m = CADModel::unit_cube();
        let q = quantize(&m).unwrap();
        assert_eq!(quantize(&dequantize(&q)).unwrap(), q);
        assert_eq!(q.pairs[0].extrude, [128, 0]);
    }
}
