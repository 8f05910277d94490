use serde::Serialize;

use super::lexer::Span;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    FloorDiv,
    Mod,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::FloorDiv => "//",
            BinOp::Mod => "%",
            BinOp::Pow => "**",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "expr", rename_all = "snake_case")]
pub enum ExprKind {
    Num(f64),
    Str(String),
    Bool(bool),
    None,
    Name(String),
    List(Vec<Expr>),
    Tuple(Vec<Expr>),
    Neg(Box<Expr>),
    Pos(Box<Expr>),
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Call { func: Box<Expr>, args: Vec<Expr>, kwargs: Vec<(String, Expr)> },
    Attr { value: Box<Expr>, name: String },
    Index { value: Box<Expr>, index: Box<Expr> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "target", rename_all = "snake_case")]
pub enum Target {
    Name(String),
    Tuple(Vec<Target>),
    Index { value: Expr, index: Expr },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "stmt", rename_all = "snake_case")]
pub enum StmtKind {
    /// `from CADLib import ...`, `import math`, `from math import ...`.
    Import { module: String, names: Vec<(String, String)>, alias: Option<String> },
    Assign { targets: Vec<Target>, value: Expr },
    AugAssign { name: String, op: BinOp, value: Expr },
    Expr(Expr),
    For { target: Target, iter: Expr, body: Vec<Stmt> },
    Pass,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScriptAst {
    pub statements: Vec<Stmt>,
}

impl ScriptAst {
    /// Visits every statement, depth first.
    pub fn walk(&self, f: &mut impl FnMut(&Stmt, usize)) {
        fn go(stmts: &[Stmt], depth: usize, f: &mut impl FnMut(&Stmt, usize)) {
            for s in stmts {
                f(s, depth);
                if let StmtKind::For { body, .. } = &s.kind {
                    go(body, depth + 1, f);
                }
            }
        }
        go(&self.statements, 0, f);
    }
}
