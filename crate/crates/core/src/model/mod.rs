//! Sketch-extrude model types, validation, quantization, the primitive
//! hierarchy and the JSON formats.

pub mod external;
pub mod primitive;
pub mod quantize;
pub mod synth;
pub mod types;
pub mod validate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Categorized, FailureCategory};
use crate::geometry::GeometryError;

pub use external::{from_external_json, merge_profiles_to_faces};
pub use primitive::{
    count_curves, count_model_curves, extract_primitives, ExtractedPrimitive, Primitive, PrimitiveLevel,
    PrimitiveSource, WRAPPER_EXTRUDE,
};
pub use quantize::{dequantize, quantize, quantize_angle_radians, QuantizedModel, RangeError};
pub use types::*;
pub use validate::{validate_model, ValidationReport, Violation, ViolationKind};

pub const NATIVE_SCHEMA: &str = "recad/1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
    #[error("unsupported feature at {path}: {feature}")]
    Unsupported { path: String, feature: String },
    #[error("invalid model: {0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Range(#[from] RangeError),
}

impl ModelError {
    pub fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        ModelError::Parse { path: path.into(), message: message.into() }
    }
}

impl Categorized for ModelError {
    fn category(&self) -> FailureCategory {
        match self {
            ModelError::Parse { .. } => FailureCategory::Parse,
            ModelError::Unsupported { .. } => FailureCategory::UnsupportedFeature,
            ModelError::Invalid(_) => FailureCategory::Validation,
            ModelError::Geometry(e) => e.category(),
            ModelError::Range(e) => e.category(),
        }
    }
}

#[derive(Serialize)]
struct NativeOut<'a> {
    schema: &'a str,
    pairs: &'a [SEPair],
}

#[derive(Deserialize)]
struct NativeIn {
    schema: String,
    pairs: Vec<SEPair>,
}

/// Native JSON document: `{"schema": "recad/1", "pairs": [...]}`.
pub fn to_native_json(model: &CADModel) -> String {
    serde_json::to_string_pretty(&NativeOut { schema: NATIVE_SCHEMA, pairs: &model.pairs }).expect("model serializes")
}

/// Parses and validates a native JSON document.
pub fn from_native_json(text: &str) -> Result<CADModel, ModelError> {
    let doc: NativeIn = serde_json::from_str(text)
        .map_err(|e| ModelError::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    if doc.schema != NATIVE_SCHEMA {
        return Err(ModelError::parse("schema", format!("expected \"{NATIVE_SCHEMA}\", found \"{}\"", doc.schema)));
    }
    let model = CADModel { pairs: doc.pairs };
    let report = validate_model(&model);
    if !report.is_valid() {
        return Err(ModelError::Invalid(report));
    }
    Ok(model)
}

/// Reads either format, choosing by the presence of the native schema tag.
pub fn from_any_json(text: &str) -> Result<CADModel, ModelError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| ModelError::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    if value.get("schema").is_some() {
        from_native_json(text)
    } else {
        from_external_json(text.as_bytes())
    }
}
