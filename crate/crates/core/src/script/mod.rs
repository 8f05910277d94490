//! The restricted CAD scripting language: lexer, parser, sandboxed
//! interpreter and the emitter that turns primitives back into scripts.
//!
//! The grammar is documented in `docs/grammar.md`.

pub mod ast;
pub mod emit;
pub mod interp;
pub mod lexer;
pub mod parser;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Categorized, FailureCategory};
use crate::model::CADModel;

pub use ast::{BinOp, Expr, ExprKind, ScriptAst, Stmt, StmtKind, Target};
pub use emit::{emit_hardcoded, emit_model};
pub use interp::execute;
pub use lexer::{tokenize, Span, Token, TokenKind};
pub use parser::{parse, MAX_NESTING};

/// Modules a script may import.
pub const ALLOWED_MODULES: &[&str] = &["CADLib", "math"];

/// Math functions reachable as bare names or through the `math` module.
pub const MATH_FUNCTIONS: &[&str] = &[
    "sin", "cos", "tan", "asin", "acos", "atan", "atan2", "sqrt", "radians", "degrees", "hypot", "floor", "ceil",
    "fabs", "exp", "log", "pow",
];

pub const MATH_CONSTANTS: &[&str] = &["pi", "e", "tau"];

/// Builder methods of the CAD interface plus `list.append`.
pub const METHODS: &[&str] = &["moveTo", "lineTo", "arcTo", "close", "circle", "addLoop", "addFace", "addSE", "append"];

/// Every attribute name the parser lets through.
pub const ALLOWED_ATTRIBUTES: &[&str] = &[
    "moveTo", "lineTo", "arcTo", "close", "circle", "addLoop", "addFace", "addSE", "append", "sin", "cos", "tan",
    "asin", "acos", "atan", "atan2", "sqrt", "radians", "degrees", "hypot", "floor", "ceil", "fabs", "exp", "log",
    "pow", "pi", "e", "tau",
];

/// Sandbox budgets for one execution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExecLimits {
    pub max_steps: u64,
    pub max_loop_iters: u64,
    pub max_curves: u64,
}

impl Default for ExecLimits {
    fn default() -> Self {
        ExecLimits { max_steps: 200_000, max_loop_iters: 10_000, max_curves: 5_000 }
    }
}

impl ExecLimits {
    pub fn is_valid(&self) -> bool {
        self.max_steps > 0 && self.max_loop_iters > 0 && self.max_curves > 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScriptError {
    pub category: FailureCategory,
    pub message: String,
    pub span: Option<Span>,
}

impl ScriptError {
    pub fn new(category: FailureCategory, message: impl Into<String>) -> Self {
        ScriptError { category, message: message.into(), span: None }
    }

    pub fn at(category: FailureCategory, message: String, span: Span) -> Self {
        ScriptError { category, message, span: Some(span) }
    }
}

impl fmt::Display for ScriptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.span {
            Some(s) => write!(f, "{} error at line {}, column {}: {}", self.category, s.line, s.col, self.message),
            None => write!(f, "{} error: {}", self.category, self.message),
        }
    }
}

impl std::error::Error for ScriptError {}

impl Categorized for ScriptError {
    fn category(&self) -> FailureCategory {
        self.category
    }
}

/// Tokenizes, parses and runs `source`, returning the model bound to `cad_model`.
pub fn execute_script(source: &str, limits: &ExecLimits) -> Result<CADModel, ScriptError> {
    let tokens = tokenize(source)?;
    let ast = parse(&tokens)?;
    execute(&ast, limits)
}
