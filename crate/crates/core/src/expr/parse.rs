//! Recursive-descent parser for the expression DSL.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := '-' unary | power
//! power    := primary ('^' unary)?          right associative
//! primary  := number | ident | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! Exponents must fold to an integer or a simple rational literal.

use num_rational::Rational64;
use serde::Serialize;
use thiserror::Error;

use super::{Expression, Func, Node, Scope};

/// Byte offsets `[start, end)` into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

impl SourceSpan {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        SourceSpan { start, end }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at {}..{}: {message}", span.start, span.end)]
    Syntax { span: SourceSpan, message: String },
    #[error("unknown name `{name}` at {}..{}", span.start, span.end)]
    UnknownName { span: SourceSpan, name: String },
    #[error("exponent at {}..{} is not an integer or simple rational literal", span.start, span.end)]
    NonIntegerExponent { span: SourceSpan },
}

impl ParseError {
    pub fn span(&self) -> SourceSpan {
        match self {
            ParseError::Syntax { span, .. }
            | ParseError::UnknownName { span, .. }
            | ParseError::NonIntegerExponent { span } => *span,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: SourceSpan,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            i += 1;
            out.push(Token { tok, span: SourceSpan::new(start, i) });
            continue;
        }
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                span: SourceSpan::new(start, i),
                message: format!("malformed number `{}`", text),
            })?;
            out.push(Token { tok: Tok::Num(value), span: SourceSpan::new(start, i) });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(src[start..i].to_string()),
                span: SourceSpan::new(start, i),
            });
            continue;
        }
        // Step over a whole UTF-8 scalar so spans stay on char boundaries.
        let ch_len = src[start..].chars().next().map_or(1, char::len_utf8);
        return Err(ParseError::Syntax {
            span: SourceSpan::new(start, start + ch_len),
            message: format!("unexpected character `{}`", &src[start..start + ch_len]),
        });
    }
    out.push(Token { tok: Tok::End, span: SourceSpan::new(src.len(), src.len()) });
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    scope: &'a Scope,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, what: &str) -> ParseError {
        let t = self.peek();
        let message = match &t.tok {
            Tok::End => format!("unexpected end of input, expected {}", what),
            other => format!("unexpected {:?}, expected {}", other, what),
        };
        ParseError::Syntax { span: t.span, message }
    }

    fn expr(&mut self) -> Result<(Expression, SourceSpan), ParseError> {
        let (mut lhs, mut span) = self.term()?;
        loop {
            let make: fn(Expression, Expression) -> Node = match self.peek().tok {
                Tok::Plus => Node::Add,
                Tok::Minus => Node::Sub,
                _ => break,
            };
            self.bump();
            let (rhs, rspan) = self.term()?;
            lhs = Expression::new(make(lhs, rhs));
            span.end = rspan.end;
        }
        Ok((lhs, span))
    }

    fn term(&mut self) -> Result<(Expression, SourceSpan), ParseError> {
        let (mut lhs, mut span) = self.unary()?;
        loop {
            let make: fn(Expression, Expression) -> Node = match self.peek().tok {
                Tok::Star => Node::Mul,
                Tok::Slash => Node::Div,
                _ => break,
            };
            self.bump();
            let (rhs, rspan) = self.unary()?;
            lhs = Expression::new(make(lhs, rhs));
            span.end = rspan.end;
        }
        Ok((lhs, span))
    }

    fn unary(&mut self) -> Result<(Expression, SourceSpan), ParseError> {
        if self.peek().tok == Tok::Minus {
            let start = self.bump().span.start;
            let (inner, span) = self.unary()?;
            return Ok((Expression::new(Node::Neg(inner)), SourceSpan::new(start, span.end)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<(Expression, SourceSpan), ParseError> {
        let (base, mut span) = self.primary()?;
        if self.peek().tok != Tok::Caret {
            return Ok((base, span));
        }
        self.bump();
        let (exponent, espan) = self.unary()?;
        let k = fold_rational(&exponent).ok_or(ParseError::NonIntegerExponent { span: espan })?;
        span.end = espan.end;
        Ok((Expression::new(Node::Pow(base, k)), span))
    }

    fn primary(&mut self) -> Result<(Expression, SourceSpan), ParseError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Num(v) => {
                self.bump();
                Ok((Expression::constant(v), t.span))
            }
            Tok::LParen => {
                self.bump();
                let (inner, _) = self.expr()?;
                let close = self.peek().clone();
                if close.tok != Tok::RParen {
                    return Err(self.unexpected("`)`"));
                }
                self.bump();
                Ok((inner, SourceSpan::new(t.span.start, close.span.end)))
            }
            Tok::Ident(name) => {
                self.bump();
                let followed_by_paren = self.peek().tok == Tok::LParen;
                if followed_by_paren {
                    if let Some(func) = Func::from_name(&name) {
                        self.bump();
                        let (arg, _) = self.expr()?;
                        let close = self.peek().clone();
                        if close.tok != Tok::RParen {
                            return Err(self.unexpected("`)`"));
                        }
                        self.bump();
                        return Ok((
                            Expression::new(Node::Func(func, arg)),
                            SourceSpan::new(t.span.start, close.span.end),
                        ));
                    }
                }
                if self.scope.is_coordinate(&name) {
                    Ok((Expression::coord(&name), t.span))
                } else if self.scope.is_parameter(&name) {
                    Ok((Expression::param(&name), t.span))
                } else {
                    Err(ParseError::UnknownName { span: t.span, name })
                }
            }
            _ => Err(self.unexpected("a number, name or `(`")),
        }
    }
}

fn to_rational(v: f64) -> Option<Rational64> {
    if !v.is_finite() || v.abs() > 1e12 {
        return None;
    }
    (1..=1000i64).find_map(|q| {
        let p = (v * q as f64).round();
        (p / q as f64 == v).then(|| Rational64::new(p as i64, q))
    })
}

/// Fold a literal-only exponent expression to an exact rational.
fn fold_rational(e: &Expression) -> Option<Rational64> {
    match e.node() {
        Node::Const(v) => to_rational(*v),
        Node::Neg(a) => fold_rational(a).map(|r| -r),
        Node::Add(a, b) => Some(fold_rational(a)? + fold_rational(b)?),
        Node::Sub(a, b) => Some(fold_rational(a)? - fold_rational(b)?),
        Node::Mul(a, b) => Some(fold_rational(a)? * fold_rational(b)?),
        Node::Div(a, b) => {
            let d = fold_rational(b)?;
            (d != Rational64::from_integer(0)).then_some(())?;
            Some(fold_rational(a)? / d)
        }
        Node::Pow(a, k) if k.is_integer() && k.numer().abs() <= 64 => {
            let base = fold_rational(a)?;
            let n = *k.numer() as i32;
            if n < 0 && base == Rational64::from_integer(0) {
                return None;
            }
            Some(base.pow(n))
        }
        _ => None,
    }
}

/// Parse `src` into an expression over the names declared in `scope`.
pub fn parse_expression(src: &str, scope: &Scope) -> Result<Expression, ParseError> {
    let tokens = lex(src)?;
    let mut p = Parser { tokens, pos: 0, scope };
    let (e, _) = p.expr()?;
    if p.peek().tok != Tok::End {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(e)
}
