use serde::Serialize;

use crate::error::FailureCategory;

use super::ScriptError;

/// Byte range plus 1-based line and column of its first character.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum TokenKind {
    Ident(String),
    Number(f64),
    Str(String),
    Keyword(String),
    Op(String),
    Delim(char),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub span: Span,
}

/// Words the grammar reserves. Only some are accepted by the parser; the
/// rest exist so that their use is reported as a rejected construct.
pub const KEYWORDS: &[&str] = &[
    "for", "in", "from", "import", "as", "True", "False", "None", "pass", "def", "while", "class", "lambda", "if",
    "elif", "else", "try", "except", "finally", "with", "return", "yield", "global", "nonlocal", "del", "assert",
    "raise", "async", "await", "break", "continue", "and", "or", "not", "is",
];

const OPS3: &[&str] = &["**=", "//="];
const OPS2: &[&str] = &["**", "//", "+=", "-=", "*=", "/=", "%=", "==", "!=", "<=", ">=", "->"];
const OPS1: &str = "+-*/%=<>.@&|^~";
const DELIMS: &str = "()[]{},:;";

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
    tokens: Vec<Token>,
    indents: Vec<usize>,
    depth: usize,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span_from(&self, start: usize, line: usize, col: usize) -> Span {
        Span { start, end: self.pos, line, col }
    }

    fn err(&self, msg: String) -> ScriptError {
        ScriptError::at(FailureCategory::Lexical, msg, Span { start: self.pos, end: self.pos, line: self.line, col: self.col })
    }

    fn push(&mut self, kind: TokenKind, start: usize, line: usize, col: usize) {
        let span = self.span_from(start, line, col);
        self.tokens.push(Token { kind, lexeme: self.src[start..self.pos].to_string(), span });
    }

    fn marker(&mut self, kind: TokenKind) {
        let span = Span { start: self.pos, end: self.pos, line: self.line, col: self.col };
        self.tokens.push(Token { kind, lexeme: String::new(), span });
    }

    /// Handles indentation at the start of a logical line. Returns false for
    /// blank or comment-only lines.
    fn line_start(&mut self) -> Result<bool, ScriptError> {
        let mut width = 0usize;
        loop {
            match self.peek() {
                Some(' ') => width += 1,
                Some('\t') => width = (width / 8 + 1) * 8,
                Some('\r') | Some('\x0c') => {}
                _ => break,
            }
            self.bump();
        }
        match self.peek() {
            None | Some('\n') | Some('#') => return Ok(false),
            _ => {}
        }
        let cur = *self.indents.last().unwrap();
        if width > cur {
            self.indents.push(width);
            self.marker(TokenKind::Indent);
        } else {
            while width < *self.indents.last().unwrap() {
                self.indents.pop();
                self.marker(TokenKind::Dedent);
            }
            if width != *self.indents.last().unwrap() {
                return Err(self.err("unindent does not match any outer indentation level".into()));
            }
        }
        Ok(true)
    }

    fn number(&mut self) -> Result<(), ScriptError> {
        let (start, line, col) = (self.pos, self.line, self.col);
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        if self.peek() == Some('.') {
            self.bump();
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some('e') | Some('E')) {
            let sign = matches!(self.peek_at(1), Some('+') | Some('-'));
            let digit_at = if sign { 2 } else { 1 };
            if self.peek_at(digit_at).is_some_and(|c| c.is_ascii_digit()) {
                for _ in 0..digit_at {
                    self.bump();
                }
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
            }
        }
        if self.peek().is_some_and(|c| c.is_alphanumeric() || c == '_') {
            return Err(self.err(format!("invalid number literal {:?}", &self.src[start..=self.pos])));
        }
        let text = &self.src[start..self.pos];
        let v: f64 = text.parse().map_err(|_| self.err(format!("invalid number literal {text:?}")))?;
        self.push(TokenKind::Number(v), start, line, col);
        Ok(())
    }

    fn string(&mut self, quote: char) -> Result<(), ScriptError> {
        let (start, line, col) = (self.pos, self.line, self.col);
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => {
                    return Err(ScriptError::at(
                        FailureCategory::Lexical,
                        "unterminated string literal".into(),
                        Span { start, end: self.pos, line, col },
                    ))
                }
                Some('\\') => match self.bump() {
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some(c) => out.push(c),
                    None => return Err(self.err("unterminated string literal".into())),
                },
                Some(c) if c == quote => break,
                Some(c) => out.push(c),
            }
        }
        self.push(TokenKind::Str(out), start, line, col);
        Ok(())
    }

    fn run(mut self) -> Result<Vec<Token>, ScriptError> {
        let mut at_line_start = true;
        loop {
            if at_line_start && self.depth == 0 {
                if !self.line_start()? {
                    // blank line: skip to the next one
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                    if self.bump().is_none() {
                        break;
                    }
                    continue;
                }
                at_line_start = false;
            }
            let Some(c) = self.peek() else { break };
            let (start, line, col) = (self.pos, self.line, self.col);
            match c {
                '\n' => {
                    self.bump();
                    if self.depth == 0 {
                        self.push(TokenKind::Newline, start, line, col);
                        at_line_start = true;
                    }
                }
                ' ' | '\t' | '\r' | '\x0c' => {
                    self.bump();
                }
                '#' => {
                    while self.peek().is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                }
                '\\' if self.peek_at(1) == Some('\n') => {
                    self.bump();
                    self.bump();
                }
                '"' | '\'' => self.string(c)?,
                c if c.is_ascii_digit() => self.number()?,
                '.' if self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) => self.number()?,
                c if c.is_alphabetic() || c == '_' => {
                    while self.peek().is_some_and(|c| c.is_alphanumeric() || c == '_') {
                        self.bump();
                    }
                    let word = &self.src[start..self.pos];
                    let kind = if KEYWORDS.contains(&word) {
                        TokenKind::Keyword(word.to_string())
                    } else {
                        TokenKind::Ident(word.to_string())
                    };
                    self.push(kind, start, line, col);
                }
                c if DELIMS.contains(c) => {
                    self.bump();
                    match c {
                        '(' | '[' | '{' => self.depth += 1,
                        ')' | ']' | '}' => self.depth = self.depth.saturating_sub(1),
                        _ => {}
                    }
                    self.push(TokenKind::Delim(c), start, line, col);
                }
                _ => {
                    let rest = &self.src[self.pos..];
                    let op = OPS3
                        .iter()
                        .chain(OPS2)
                        .find(|o| rest.starts_with(**o))
                        .map(|o| o.to_string())
                        .or_else(|| OPS1.contains(c).then(|| c.to_string()));
                    let Some(op) = op else {
                        return Err(self.err(format!("illegal character {c:?}")));
                    };
                    for _ in 0..op.chars().count() {
                        self.bump();
                    }
                    self.push(TokenKind::Op(op), start, line, col);
                }
            }
        }
        if !matches!(self.tokens.last().map(|t| &t.kind), None | Some(TokenKind::Newline)) {
            self.marker(TokenKind::Newline);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.marker(TokenKind::Dedent);
        }
        self.marker(TokenKind::Eof);
        Ok(self.tokens)
    }
}

/// Splits source text into tokens, turning indentation into indent and
/// dedent markers. Newlines inside brackets are ignored.
pub fn tokenize(source: &str) -> Result<Vec<Token>, ScriptError> {
    Lexer { src: source, pos: 0, line: 1, col: 1, tokens: Vec::new(), indents: vec![0], depth: 0 }.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn assignment() {
        assert_eq!(
            kinds("x = 1.5"),
            vec![
                TokenKind::Ident("x".into()),
                TokenKind::Op("=".into()),
                TokenKind::Number(1.5),
                TokenKind::Newline,
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn for_header() {
        assert_eq!(
            kinds("for i in range(6):"),
            vec![
                TokenKind::Keyword("for".into()),
                TokenKind::Ident("i".into()),
                TokenKind::Keyword("in".into()),
                TokenKind::Ident("range".into()),
                TokenKind::Delim('('),
                TokenKind::Number(6.0),
                TokenKind::Delim(')'),
                TokenKind::Delim(':'),
                TokenKind::Newline,
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn indentation_blocks() {
        let k = kinds("for i in range(2):\n    x = i\n\n    # note\ny = 1\n");
        assert_eq!(k.iter().filter(|t| **t == TokenKind::Indent).count(), 1);
        assert_eq!(k.iter().filter(|t| **t == TokenKind::Dedent).count(), 1);
        let trailing = kinds("for i in range(2):\n  for j in range(2):\n    x = j");
        assert_eq!(trailing.iter().filter(|t| **t == TokenKind::Dedent).count(), 2);
    }

    #[test]
    fn brackets_join_lines() {
        let k = kinds("x = f(1,\n      2)\n");
        assert_eq!(k.iter().filter(|t| **t == TokenKind::Newline).count(), 1);
    }

    #[test]
    fn spans_track_lines() {
        let toks = tokenize("a = 1\nbb = 'new'\n").unwrap();
        let bb = toks.iter().find(|t| t.lexeme == "bb").unwrap();
        assert_eq!((bb.span.line, bb.span.col), (2, 1));
        assert!(toks.iter().any(|t| t.kind == TokenKind::Str("new".into())));
        for w in toks.windows(2) {
            assert!(w[0].span.end <= w[1].span.start);
        }
    }

    #[test]
    fn numbers() {
        assert_eq!(kinds("1e-3")[0], TokenKind::Number(1e-3));
        assert_eq!(kinds(".25")[0], TokenKind::Number(0.25));
        assert_eq!(kinds("0.30000000000000004")[0], TokenKind::Number(0.30000000000000004));
        assert!(tokenize("12abc").is_err());
    }

    #[test]
    fn illegal_character_has_position() {
        let e = tokenize("x = 1\ny = $\n").unwrap_err();
        assert_eq!(e.category, FailureCategory::Lexical);
        let s = e.span.unwrap();
        assert_eq!((s.line, s.col), (2, 5));
    }

    #[test]
    fn import_is_a_keyword() {
        assert_eq!(kinds("import os")[0], TokenKind::Keyword("import".into()));
    }

    #[test]
    fn bad_dedent() {
        assert!(tokenize("for i in range(2):\n    x = 1\n  y = 2\n").is_err());
    }
}
