use crate::error::FailureCategory;

use super::ast::{BinOp, Expr, ExprKind, ScriptAst, Stmt, StmtKind, Target};
use super::lexer::{Span, Token, TokenKind};
use super::{ScriptError, ALLOWED_ATTRIBUTES, ALLOWED_MODULES};

/// Deepest expression or block nesting the parser accepts.
pub const MAX_NESTING: usize = 64;

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    depth: usize,
}

fn describe(kind: &TokenKind) -> String {
    match kind {
        TokenKind::Ident(s) => format!("identifier '{s}'"),
        TokenKind::Number(_) => "number".into(),
        TokenKind::Str(_) => "string".into(),
        TokenKind::Keyword(k) => format!("keyword '{k}'"),
        TokenKind::Op(o) => format!("'{o}'"),
        TokenKind::Delim(d) => format!("'{d}'"),
        TokenKind::Newline => "end of line".into(),
        TokenKind::Indent => "indent".into(),
        TokenKind::Dedent => "dedent".into(),
        TokenKind::Eof => "end of input".into(),
    }
}

/// Positional and keyword arguments of a call.
type CallArgs = (Vec<Expr>, Vec<(String, Expr)>);

impl<'a> Parser<'a> {
    fn peek(&self) -> &'a Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn peek_kind(&self) -> &'a TokenKind {
        &self.peek().kind
    }

    fn next(&mut self) -> &'a Token {
        let t = self.peek();
        if self.pos < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(self.peek_kind(), TokenKind::Op(o) if o == op)
    }

    fn is_delim(&self, d: char) -> bool {
        matches!(self.peek_kind(), TokenKind::Delim(c) if *c == d)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek_kind(), TokenKind::Keyword(w) if w == k)
    }

    fn syntax(&self, expected: &str) -> ScriptError {
        let t = self.peek();
        ScriptError::at(FailureCategory::Parse, format!("expected {expected}, found {}", describe(&t.kind)), t.span)
    }

    fn rejected(&self, what: String, span: Span) -> ScriptError {
        ScriptError::at(FailureCategory::RejectedConstruct, what, span)
    }

    fn expect_delim(&mut self, d: char) -> Result<Span, ScriptError> {
        if self.is_delim(d) {
            Ok(self.next().span)
        } else {
            Err(self.syntax(&format!("'{d}'")))
        }
    }

    fn expect_kw(&mut self, k: &str) -> Result<Span, ScriptError> {
        if self.is_kw(k) {
            Ok(self.next().span)
        } else {
            Err(self.syntax(&format!("'{k}'")))
        }
    }

    fn ident(&mut self) -> Result<(String, Span), ScriptError> {
        match self.peek_kind() {
            TokenKind::Ident(s) => {
                let span = self.next().span;
                if s.starts_with("__") {
                    return Err(self.rejected(format!("dunder name '{s}' is not allowed"), span));
                }
                Ok((s.clone(), span))
            }
            _ => Err(self.syntax("identifier")),
        }
    }

    fn enter(&mut self) -> Result<(), ScriptError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            let span = self.peek().span;
            return Err(ScriptError::at(FailureCategory::Parse, format!("nesting deeper than {MAX_NESTING}"), span));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn program(&mut self) -> Result<ScriptAst, ScriptError> {
        let mut statements = Vec::new();
        loop {
            match self.peek_kind() {
                TokenKind::Eof => break,
                TokenKind::Newline => {
                    self.next();
                }
                TokenKind::Indent => {
                    return Err(ScriptError::at(FailureCategory::Parse, "unexpected indent".into(), self.peek().span))
                }
                _ => self.statement(&mut statements)?,
            }
        }
        Ok(ScriptAst { statements })
    }

    fn statement(&mut self, out: &mut Vec<Stmt>) -> Result<(), ScriptError> {
        if self.is_kw("for") {
            out.push(self.for_stmt()?);
            return Ok(());
        }
        self.simple_line(out)
    }

    /// One or more `;`-separated simple statements ending the line.
    fn simple_line(&mut self, out: &mut Vec<Stmt>) -> Result<(), ScriptError> {
        loop {
            out.push(self.simple()?);
            if self.is_delim(';') {
                self.next();
                if matches!(self.peek_kind(), TokenKind::Newline | TokenKind::Eof) {
                    break;
                }
                continue;
            }
            break;
        }
        match self.peek_kind() {
            TokenKind::Newline => {
                self.next();
                Ok(())
            }
            TokenKind::Eof => Ok(()),
            _ => Err(self.syntax("end of line")),
        }
    }

    fn for_stmt(&mut self) -> Result<Stmt, ScriptError> {
        let start = self.expect_kw("for")?;
        self.enter()?;
        let target_expr = self.target_list()?;
        let target = self.to_target(target_expr)?;
        self.expect_kw("in")?;
        let iter = self.expr_list()?;
        self.expect_delim(':')?;
        let mut body = Vec::new();
        if matches!(self.peek_kind(), TokenKind::Newline) {
            self.next();
            while matches!(self.peek_kind(), TokenKind::Newline) {
                self.next();
            }
            if !matches!(self.peek_kind(), TokenKind::Indent) {
                return Err(self.syntax("an indented block"));
            }
            self.next();
            loop {
                match self.peek_kind() {
                    TokenKind::Dedent => {
                        self.next();
                        break;
                    }
                    TokenKind::Eof => break,
                    TokenKind::Newline => {
                        self.next();
                    }
                    _ => self.statement(&mut body)?,
                }
            }
        } else {
            self.simple_line(&mut body)?;
        }
        self.leave();
        Ok(Stmt { kind: StmtKind::For { target, iter, body }, span: start })
    }

    /// Names separated by commas, as in a for-loop header.
    fn target_list(&mut self) -> Result<Expr, ScriptError> {
        let first = self.postfix()?;
        if !self.is_delim(',') {
            return Ok(first);
        }
        let span = first.span;
        let mut items = vec![first];
        while self.is_delim(',') {
            self.next();
            if self.is_kw("in") {
                break;
            }
            items.push(self.postfix()?);
        }
        Ok(Expr { kind: ExprKind::Tuple(items), span })
    }

    fn to_target(&self, e: Expr) -> Result<Target, ScriptError> {
        match e.kind {
            ExprKind::Name(n) => Ok(Target::Name(n)),
            ExprKind::Tuple(items) | ExprKind::List(items) => {
                Ok(Target::Tuple(items.into_iter().map(|i| self.to_target(i)).collect::<Result<_, _>>()?))
            }
            ExprKind::Index { value, index } => Ok(Target::Index { value: *value, index: *index }),
            ExprKind::Attr { name, .. } => {
                Err(self.rejected(format!("assignment to attribute '{name}' is not allowed"), e.span))
            }
            _ => Err(ScriptError::at(FailureCategory::Parse, "cannot assign to expression".into(), e.span)),
        }
    }

    fn import(&mut self) -> Result<Stmt, ScriptError> {
        let span = self.peek().span;
        let check = |p: &Self, m: &str, s: Span| -> Result<(), ScriptError> {
            if ALLOWED_MODULES.contains(&m) {
                Ok(())
            } else {
                Err(p.rejected(format!("import of module '{m}' is not allowed"), s))
            }
        };
        if self.is_kw("import") {
            self.next();
            let (module, ms) = self.ident()?;
            check(self, &module, ms)?;
            let alias = if self.is_kw("as") {
                self.next();
                Some(self.ident()?.0)
            } else {
                None
            };
            return Ok(Stmt { kind: StmtKind::Import { module, names: vec![], alias }, span });
        }
        self.expect_kw("from")?;
        let (module, ms) = self.ident()?;
        check(self, &module, ms)?;
        self.expect_kw("import")?;
        let mut names = Vec::new();
        if self.is_op("*") {
            self.next();
            names.push(("*".to_string(), "*".to_string()));
        } else {
            let paren = self.is_delim('(');
            if paren {
                self.next();
            }
            loop {
                let (n, _) = self.ident()?;
                let alias = if self.is_kw("as") {
                    self.next();
                    self.ident()?.0
                } else {
                    n.clone()
                };
                names.push((n, alias));
                if !self.is_delim(',') {
                    break;
                }
                self.next();
                if paren && self.is_delim(')') {
                    break;
                }
            }
            if paren {
                self.expect_delim(')')?;
            }
        }
        Ok(Stmt { kind: StmtKind::Import { module, names, alias: None }, span })
    }

    fn simple(&mut self) -> Result<Stmt, ScriptError> {
        let t = self.peek();
        if let TokenKind::Keyword(k) = &t.kind {
            match k.as_str() {
                "import" | "from" => return self.import(),
                "pass" => {
                    self.next();
                    return Ok(Stmt { kind: StmtKind::Pass, span: t.span });
                }
                "True" | "False" | "None" => {}
                "def" => return Err(self.rejected("function definitions are not allowed".into(), t.span)),
                "while" => return Err(self.rejected("while-loops are not allowed".into(), t.span)),
                "class" => return Err(self.rejected("class definitions are not allowed".into(), t.span)),
                "lambda" => return Err(self.rejected("lambda expressions are not allowed".into(), t.span)),
                other => return Err(self.rejected(format!("'{other}' statements are not allowed"), t.span)),
            }
        }
        let span = t.span;
        let first = self.expr_list()?;
        if let TokenKind::Op(op) = self.peek_kind() {
            let aug = match op.as_str() {
                "+=" => Some(BinOp::Add),
                "-=" => Some(BinOp::Sub),
                "*=" => Some(BinOp::Mul),
                "/=" => Some(BinOp::Div),
                "//=" => Some(BinOp::FloorDiv),
                "%=" => Some(BinOp::Mod),
                "**=" => Some(BinOp::Pow),
                _ => None,
            };
            if let Some(op) = aug {
                self.next();
                let ExprKind::Name(name) = first.kind else {
                    return Err(ScriptError::at(
                        FailureCategory::Parse,
                        "augmented assignment needs a plain name".into(),
                        first.span,
                    ));
                };
                let value = self.expr_list()?;
                return Ok(Stmt { kind: StmtKind::AugAssign { name, op, value }, span });
            }
            if op == "=" {
                let mut targets = vec![self.to_target(first)?];
                let mut value;
                loop {
                    self.next();
                    value = self.expr_list()?;
                    if self.is_op("=") {
                        targets.push(self.to_target(value)?);
                        continue;
                    }
                    break;
                }
                return Ok(Stmt { kind: StmtKind::Assign { targets, value }, span });
            }
        }
        Ok(Stmt { kind: StmtKind::Expr(first), span })
    }

    /// Comma-separated expressions; more than one (or a trailing comma) makes a tuple.
    fn expr_list(&mut self) -> Result<Expr, ScriptError> {
        let first = self.expr()?;
        if !self.is_delim(',') {
            return Ok(first);
        }
        let span = first.span;
        let mut items = vec![first];
        while self.is_delim(',') {
            self.next();
            if !self.starts_expr() {
                break;
            }
            items.push(self.expr()?);
        }
        Ok(Expr { kind: ExprKind::Tuple(items), span })
    }

    fn starts_expr(&self) -> bool {
        match self.peek_kind() {
            TokenKind::Ident(_) | TokenKind::Number(_) | TokenKind::Str(_) => true,
            TokenKind::Keyword(k) => matches!(k.as_str(), "True" | "False" | "None"),
            TokenKind::Op(o) => o == "-" || o == "+",
            TokenKind::Delim(d) => *d == '(' || *d == '[',
            _ => false,
        }
    }

    fn expr(&mut self) -> Result<Expr, ScriptError> {
        self.enter()?;
        let e = self.arith()?;
        if let TokenKind::Op(o) = self.peek_kind() {
            if matches!(o.as_str(), "==" | "!=" | "<" | ">" | "<=" | ">=") {
                let span = self.peek().span;
                return Err(self.rejected(format!("comparison '{o}' is not allowed"), span));
            }
        }
        if let TokenKind::Keyword(k) = self.peek_kind() {
            if matches!(k.as_str(), "and" | "or" | "not" | "is" | "if" | "else" | "lambda") {
                let span = self.peek().span;
                return Err(self.rejected(format!("'{k}' expressions are not allowed"), span));
            }
        }
        self.leave();
        Ok(e)
    }

    fn arith(&mut self) -> Result<Expr, ScriptError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.is_op("+") {
                BinOp::Add
            } else if self.is_op("-") {
                BinOp::Sub
            } else {
                break;
            };
            self.next();
            let rhs = self.term()?;
            let span = lhs.span;
            lhs = Expr { kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ScriptError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek_kind() {
                TokenKind::Op(o) if o == "*" => BinOp::Mul,
                TokenKind::Op(o) if o == "/" => BinOp::Div,
                TokenKind::Op(o) if o == "//" => BinOp::FloorDiv,
                TokenKind::Op(o) if o == "%" => BinOp::Mod,
                _ => break,
            };
            self.next();
            let rhs = self.factor()?;
            let span = lhs.span;
            lhs = Expr { kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ScriptError> {
        if self.is_op("-") || self.is_op("+") {
            let t = self.next();
            self.enter()?;
            let inner = self.factor()?;
            self.leave();
            let kind = if matches!(&t.kind, TokenKind::Op(o) if o == "-") {
                ExprKind::Neg(Box::new(inner))
            } else {
                ExprKind::Pos(Box::new(inner))
            };
            return Ok(Expr { kind, span: t.span });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ScriptError> {
        let base = self.postfix()?;
        if self.is_op("**") {
            self.next();
            self.enter()?;
            let exp = self.factor()?;
            self.leave();
            let span = base.span;
            return Ok(Expr { kind: ExprKind::Binary { op: BinOp::Pow, lhs: Box::new(base), rhs: Box::new(exp) }, span });
        }
        Ok(base)
    }

    fn postfix(&mut self) -> Result<Expr, ScriptError> {
        let mut e = self.atom()?;
        loop {
            if self.is_delim('(') {
                self.next();
                self.enter()?;
                let (args, kwargs) = self.call_args()?;
                self.leave();
                self.expect_delim(')')?;
                let span = e.span;
                e = Expr { kind: ExprKind::Call { func: Box::new(e), args, kwargs }, span };
            } else if self.is_op(".") {
                self.next();
                let (name, span) = match self.peek_kind() {
                    TokenKind::Ident(s) => (s.clone(), self.next().span),
                    _ => return Err(self.syntax("attribute name")),
                };
                if !ALLOWED_ATTRIBUTES.contains(&name.as_str()) {
                    return Err(self.rejected(format!("attribute '{name}' is not part of the interface"), span));
                }
                let espan = e.span;
                e = Expr { kind: ExprKind::Attr { value: Box::new(e), name }, span: espan };
            } else if self.is_delim('[') {
                self.next();
                self.enter()?;
                let index = self.expr_list()?;
                self.leave();
                if self.is_delim(':') {
                    let span = self.peek().span;
                    return Err(self.rejected("slices are not allowed".into(), span));
                }
                self.expect_delim(']')?;
                let span = e.span;
                e = Expr { kind: ExprKind::Index { value: Box::new(e), index: Box::new(index) }, span };
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn call_args(&mut self) -> Result<CallArgs, ScriptError> {
        let mut args = Vec::new();
        let mut kwargs: Vec<(String, Expr)> = Vec::new();
        while !self.is_delim(')') {
            if self.is_op("*") || self.is_op("**") {
                let span = self.peek().span;
                return Err(self.rejected("argument unpacking is not allowed".into(), span));
            }
            let is_kw = matches!(self.peek_kind(), TokenKind::Ident(_))
                && matches!(self.toks.get(self.pos + 1).map(|t| &t.kind), Some(TokenKind::Op(o)) if o == "=");
            if is_kw {
                let (name, span) = self.ident()?;
                self.next();
                if kwargs.iter().any(|(n, _)| *n == name) {
                    return Err(ScriptError::at(FailureCategory::Parse, format!("repeated keyword argument '{name}'"), span));
                }
                kwargs.push((name, self.expr()?));
            } else {
                if !kwargs.is_empty() {
                    let span = self.peek().span;
                    return Err(ScriptError::at(
                        FailureCategory::Parse,
                        "positional argument follows keyword argument".into(),
                        span,
                    ));
                }
                args.push(self.expr()?);
            }
            if !self.is_delim(',') {
                break;
            }
            self.next();
        }
        Ok((args, kwargs))
    }

    fn atom(&mut self) -> Result<Expr, ScriptError> {
        let t = self.peek();
        let span = t.span;
        let kind = match &t.kind {
            TokenKind::Number(v) => {
                self.next();
                ExprKind::Num(*v)
            }
            TokenKind::Str(s) => {
                self.next();
                let mut s = s.clone();
                // adjacent literals concatenate
                while let TokenKind::Str(more) = self.peek_kind() {
                    s.push_str(more);
                    self.next();
                }
                ExprKind::Str(s)
            }
            TokenKind::Ident(_) => ExprKind::Name(self.ident()?.0),
            TokenKind::Keyword(k) if k == "True" => {
                self.next();
                ExprKind::Bool(true)
            }
            TokenKind::Keyword(k) if k == "False" => {
                self.next();
                ExprKind::Bool(false)
            }
            TokenKind::Keyword(k) if k == "None" => {
                self.next();
                ExprKind::None
            }
            TokenKind::Keyword(k) if k == "lambda" => {
                return Err(self.rejected("lambda expressions are not allowed".into(), span));
            }
            TokenKind::Delim('(') => {
                self.next();
                self.enter()?;
                if self.is_delim(')') {
                    self.next();
                    self.leave();
                    return Ok(Expr { kind: ExprKind::Tuple(vec![]), span });
                }
                let inner = self.expr_list()?;
                if self.is_kw("for") {
                    let s = self.peek().span;
                    return Err(self.rejected("comprehensions are not allowed".into(), s));
                }
                self.expect_delim(')')?;
                self.leave();
                return Ok(inner);
            }
            TokenKind::Delim('[') => {
                self.next();
                self.enter()?;
                let mut items = Vec::new();
                while !self.is_delim(']') {
                    items.push(self.expr()?);
                    if self.is_kw("for") {
                        let s = self.peek().span;
                        return Err(self.rejected("comprehensions are not allowed".into(), s));
                    }
                    if !self.is_delim(',') {
                        break;
                    }
                    self.next();
                }
                self.expect_delim(']')?;
                self.leave();
                ExprKind::List(items)
            }
            TokenKind::Delim('{') => {
                return Err(self.rejected("dict and set literals are not allowed".into(), span));
            }
            _ => return Err(self.syntax("an expression")),
        };
        Ok(Expr { kind, span })
    }
}

pub fn parse(tokens: &[Token]) -> Result<ScriptAst, ScriptError> {
    if tokens.is_empty() {
        return Ok(ScriptAst { statements: vec![] });
    }
    Parser { toks: tokens, pos: 0, depth: 0 }.program()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::script::tokenize;

    fn p(src: &str) -> Result<ScriptAst, ScriptError> {
        parse(&tokenize(src)?)
    }

    #[test]
    fn nested_for_accepted() {
        let ast = p("for i in range(2):\n    for j in range(3):\n        x = i * j\n").unwrap();
        let mut depths = Vec::new();
        ast.walk(&mut |_, d| depths.push(d));
        assert_eq!(depths, vec![0, 1, 2]);
    }

    #[test]
    fn rejected_constructs() {
        for src in ["def f():\n    pass\n", "while True:\n    pass\n", "import os\n", "from os import path\n",
            "x = lambda: 1\n", "if x:\n    pass\n", "x = {}\n", "a.__class__\n", "x = [i for i in range(3)]\n",
            "x = 1 < 2\n", "open('f').read()\n"]
        {
            let e = p(src).unwrap_err();
            assert_eq!(e.category, FailureCategory::RejectedConstruct, "{src}: {e}");
        }
    }

    #[test]
    fn allowed_imports() {
        let ast = p("from CADLib import Loop, Face, Sketch, Extrude, CADModel\nimport math\nfrom math import pi, sin\n").unwrap();
        assert_eq!(ast.statements.len(), 3);
    }

    #[test]
    fn syntax_error_lists_expectation() {
        let e = p("x = (1 + \n").unwrap_err();
        assert_eq!(e.category, FailureCategory::Parse);
        assert!(e.message.starts_with("expected"), "{}", e.message);
        let e = p("x = f(1 2)\n").unwrap_err();
        assert!(e.message.contains("expected ')'"), "{}", e.message);
    }

    #[test]
    fn precedence() {
        let ast = p("x = -2 ** 2 + 3 * 4\n").unwrap();
        let StmtKind::Assign { value, .. } = &ast.statements[0].kind else { panic!() };
        let ExprKind::Binary { op: BinOp::Add, lhs, .. } = &value.kind else { panic!("{value:?}") };
        assert!(matches!(lhs.kind, ExprKind::Neg(_)));
    }

    #[test]
    fn deep_nesting_is_a_diagnostic() {
        let src = format!("x = {}1{}\n", "(".repeat(500), ")".repeat(500));
        assert_eq!(p(&src).unwrap_err().category, FailureCategory::Parse);
    }

    #[test]
    fn assignment_forms() {
        let ast = p("a, b = 1, 2\nc = d = 3\npts[0] = 4\nx += 1\n").unwrap();
        assert_eq!(ast.statements.len(), 4);
        assert!(matches!(&ast.statements[1].kind, StmtKind::Assign { targets, .. } if targets.len() == 2));
    }
}
