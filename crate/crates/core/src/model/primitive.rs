use std::fmt;

use serde::{Deserialize, Serialize};

use super::types::{CADModel, Extrude, Face, Loop, Point2, SEPair, Sketch};
use super::validate::validate_model;
use super::ModelError;

/// The five levels of the primitive hierarchy, in curriculum order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PrimitiveLevel {
    L,
    F,
    S,
    SE,
    MSE,
}

impl PrimitiveLevel {
    pub const ALL: [PrimitiveLevel; 5] =
        [PrimitiveLevel::L, PrimitiveLevel::F, PrimitiveLevel::S, PrimitiveLevel::SE, PrimitiveLevel::MSE];

    pub fn as_str(self) -> &'static str {
        match self {
            PrimitiveLevel::L => "L",
            PrimitiveLevel::F => "F",
            PrimitiveLevel::S => "S",
            PrimitiveLevel::SE => "SE",
            PrimitiveLevel::MSE => "MSE",
        }
    }
}

impl fmt::Display for PrimitiveLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "level", content = "value")]
pub enum Primitive {
    L(Loop),
    F(Face),
    S(Sketch),
    SE(SEPair),
    MSE(CADModel),
}

/// Canonical wrapper extrusion for loop, face and sketch primitives.
pub const WRAPPER_EXTRUDE: Extrude = Extrude::new(0.1, 0.0);

impl Primitive {
    pub fn level(&self) -> PrimitiveLevel {
        match self {
            Primitive::L(_) => PrimitiveLevel::L,
            Primitive::F(_) => PrimitiveLevel::F,
            Primitive::S(_) => PrimitiveLevel::S,
            Primitive::SE(_) => PrimitiveLevel::SE,
            Primitive::MSE(_) => PrimitiveLevel::MSE,
        }
    }

    /// Lifts the primitive into a minimal model.
    ///
    /// Loops and faces are placed on the world XY plane, sketches keep their
    /// own plane; all three are extruded by [`WRAPPER_EXTRUDE`]. A single pair
    /// becomes a new body regardless of its original operation.
    pub fn to_model(&self) -> CADModel {
        match self {
            Primitive::L(lp) => CADModel::single(Sketch::xy(vec![Face::new(lp.clone())]), WRAPPER_EXTRUDE),
            Primitive::F(f) => CADModel::single(Sketch::xy(vec![f.clone()]), WRAPPER_EXTRUDE),
            Primitive::S(s) => CADModel::single(s.clone(), WRAPPER_EXTRUDE),
            Primitive::SE(p) => CADModel::single(p.sketch.clone(), p.extrude),
            Primitive::MSE(m) => m.clone(),
        }
    }
}

/// Where a primitive came from inside its model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimitiveSource {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub face: Option<usize>,
    /// 0 for the outer loop, `k + 1` for hole `k`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loop_index: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractedPrimitive {
    pub level: PrimitiveLevel,
    pub source: PrimitiveSource,
    pub curve_count: usize,
    pub primitive: Primitive,
}

pub fn count_loop_curves(lp: &Loop) -> usize {
    lp.curves.len()
}

pub fn count_face_curves(f: &Face) -> usize {
    f.loops().map(count_loop_curves).sum()
}

pub fn count_sketch_curves(s: &Sketch) -> usize {
    s.faces.iter().map(count_face_curves).sum()
}

pub fn count_model_curves(m: &CADModel) -> usize {
    m.pairs.iter().map(|p| count_sketch_curves(&p.sketch)).sum()
}

/// Number of curve commands in the primitive's subtree; a circle is one curve.
pub fn count_curves(p: &Primitive) -> usize {
    match p {
        Primitive::L(lp) => count_loop_curves(lp),
        Primitive::F(f) => count_face_curves(f),
        Primitive::S(s) => count_sketch_curves(s),
        Primitive::SE(se) => count_sketch_curves(&se.sketch),
        Primitive::MSE(m) => count_model_curves(m),
    }
}

/// Every loop, face, sketch and pair of a valid model, plus the model itself
/// when it has more than one pair.
///
/// Order per pair: for each face its outer loop, its holes, then the face;
/// after all faces the sketch, then the pair. The whole model comes last.
pub fn extract_primitives(model: &CADModel) -> Result<Vec<ExtractedPrimitive>, ModelError> {
    let report = validate_model(model);
    if !report.is_valid() {
        return Err(ModelError::Invalid(report));
    }
    let mut out = Vec::new();
    let mut push = |primitive: Primitive, source: PrimitiveSource| {
        out.push(ExtractedPrimitive { level: primitive.level(), source, curve_count: count_curves(&primitive), primitive });
    };
    for (k, pair) in model.pairs.iter().enumerate() {
        for (fi, face) in pair.sketch.faces.iter().enumerate() {
            for (li, lp) in face.loops().enumerate() {
                push(Primitive::L(lp.clone()), PrimitiveSource { pair: Some(k), face: Some(fi), loop_index: Some(li) });
            }
            push(Primitive::F(face.clone()), PrimitiveSource { pair: Some(k), face: Some(fi), loop_index: None });
        }
        push(Primitive::S(pair.sketch.clone()), PrimitiveSource { pair: Some(k), face: None, loop_index: None });
        push(Primitive::SE(pair.clone()), PrimitiveSource { pair: Some(k), face: None, loop_index: None });
    }
    if model.pairs.len() > 1 {
        push(Primitive::MSE(model.clone()), PrimitiveSource::default());
    }
    Ok(out)
}

/// Axis-aligned square loop of side `s` with its min corner at `(x, y)`.
pub fn square_loop(x: f64, y: f64, s: f64) -> Loop {
    Loop::rect(Point2::new(x, y), Point2::new(x + s, y + s))
}
