use std::fmt;

use serde::{Deserialize, Serialize};

/// Machine-readable reason an artifact failed to become a usable solid.
///
/// Every failing path (lexing, parsing, execution, validation, geometry)
/// maps onto exactly one category; invalidity ratios and rewards key on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureCategory {
    Lexical,
    Parse,
    RejectedConstruct,
    Resource,
    Contract,
    Evaluation,
    Validation,
    Geometry,
    EmptySolid,
    Extraction,
    UnsupportedFeature,
    Range,
    Unpaired,
    Io,
}

impl FailureCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureCategory::Lexical => "lexical",
            FailureCategory::Parse => "parse",
            FailureCategory::RejectedConstruct => "rejected-construct",
            FailureCategory::Resource => "resource",
            FailureCategory::Contract => "contract",
            FailureCategory::Evaluation => "evaluation",
            FailureCategory::Validation => "validation",
            FailureCategory::Geometry => "geometry",
            FailureCategory::EmptySolid => "empty-solid",
            FailureCategory::Extraction => "extraction",
            FailureCategory::UnsupportedFeature => "unsupported-feature",
            FailureCategory::Range => "range",
            FailureCategory::Unpaired => "unpaired",
            FailureCategory::Io => "io",
        }
    }
}

impl fmt::Display for FailureCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Errors that carry a [`FailureCategory`].
pub trait Categorized {
    fn category(&self) -> FailureCategory;
}
