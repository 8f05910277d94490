#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Sketch-extrude CAD kernel with a restricted script language, geometric
//! metrics, the reward function and the guided-GRPO training mathematics.

pub mod api;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod reward;
pub mod script;

pub use error::{Categorized, FailureCategory};
