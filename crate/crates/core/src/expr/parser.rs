use std::fmt;

use thiserror::Error;

use super::{BinaryOp, Expr, ImmersionSpec, UnaryOp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: unexpected {found}, expected {}", expected.join(" or "))]
    Syntax {
        line: usize,
        col: usize,
        found: String,
        expected: Vec<String>,
    },
    #[error("{line}:{col}: undeclared identifier `{name}`")]
    UndeclaredIdentifier {
        name: String,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: {message}")]
    Invalid {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("declared ambient dimension {declared} but F has {found} components")]
    DimensionMismatch { declared: usize, found: usize },
    #[error("missing `{0}` statement")]
    Missing(&'static str),
    #[error("parameter override `{0}` does not name a declared parameter")]
    UnknownOverride(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Eq,
    Arrow,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::Caret => f.write_str("`^`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            '+' => Some(Tok::Plus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '=' => Some(Tok::Eq),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token { tok, line, col });
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' {
            let tok = if chars.get(i + 1) == Some(&'>') {
                i += 1;
                col += 1;
                Tok::Arrow
            } else {
                Tok::Minus
            };
            out.push(Token {
                tok,
                line,
                col: tcol,
            });
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text.parse::<f64>().map_err(|_| ParseError::Invalid {
                line: tline,
                col: tcol,
                message: format!("malformed number `{text}`"),
            })?;
            col += i - start;
            out.push(Token {
                tok: Tok::Num(value),
                line: tline,
                col: tcol,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: tline,
                col: tcol,
            });
            continue;
        }
        return Err(ParseError::Invalid {
            line,
            col,
            message: format!("unexpected character `{c}`"),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

/// Which identifiers an expression may reference besides parameters.
#[derive(Clone, Copy)]
enum Scope {
    /// Only literals, `pi`, `e` and declared parameters.
    Constant,
    /// Chart components: coordinates `x1, x2, ...`.
    Chart,
    /// Scalar fields: coordinates and components `F1..FN`.
    Scalar { ambient_dim: usize },
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    params: Vec<(String, f64)>,
    overrides: &'a [(String, f64)],
}

fn coordinate_index(name: &str, prefix: char) -> Option<usize> {
    let rest = name.strip_prefix(prefix)?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) || rest.starts_with('0') {
        return None;
    }
    rest.parse::<usize>().ok().map(|k| k - 1)
}

fn fold(expr: Expr) -> Expr {
    let literal = |e: &Expr| matches!(e, Expr::Const(_));
    let foldable = match &expr {
        Expr::Unary(_, a) => literal(a),
        Expr::Binary(_, a, b) => literal(a) && literal(b),
        _ => false,
    };
    if foldable {
        if let Some(v) = expr.eval_constant() {
            if v.is_finite() {
                return Expr::Const(v);
            }
        }
    }
    expr
}

impl<'a> Parser<'a> {
    fn new(src: &str, overrides: &'a [(String, f64)]) -> Result<Self, ParseError> {
        Ok(Self {
            tokens: lex(src)?,
            pos: 0,
            params: Vec::new(),
            overrides,
        })
    }

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

    fn error(&self, expected: &[&str]) -> ParseError {
        let t = self.peek();
        ParseError::Syntax {
            line: t.line,
            col: t.col,
            found: t.tok.to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Token, ParseError> {
        if self.peek().tok == tok {
            Ok(self.bump())
        } else {
            Err(self.error(&[what]))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<Token, ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) if s == kw => Ok(self.bump()),
            _ => Err(self.error(&[&format!("`{kw}`")])),
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Token), ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                Ok((s, self.bump()))
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn expect_integer(&mut self) -> Result<usize, ParseError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Num(v) if v.fract() == 0.0 && (0.0..1e9).contains(&v) => {
                self.bump();
                Ok(v as usize)
            }
            _ => Err(self.error(&["integer"])),
        }
    }

    /// Statement terminator: `;`, or nothing before end of input.
    fn end_statement(&mut self) -> Result<(), ParseError> {
        match self.peek().tok {
            Tok::Semi => {
                self.bump();
                Ok(())
            }
            Tok::Eof => Ok(()),
            _ => Err(self.error(&["`;`"])),
        }
    }

    fn expr(&mut self, scope: Scope) -> Result<Expr, ParseError> {
        let mut lhs = self.term(scope)?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term(scope)?;
            lhs = fold(Expr::binary(op, lhs, rhs));
        }
    }

    fn term(&mut self, scope: Scope) -> Result<Expr, ParseError> {
        let mut lhs = self.unary(scope)?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary(scope)?;
            lhs = fold(Expr::binary(op, lhs, rhs));
        }
    }

    fn unary(&mut self, scope: Scope) -> Result<Expr, ParseError> {
        match self.peek().tok {
            Tok::Minus => {
                self.bump();
                let arg = self.unary(scope)?;
                Ok(fold(Expr::unary(UnaryOp::Neg, arg)))
            }
            Tok::Plus => {
                self.bump();
                self.unary(scope)
            }
            _ => self.power(scope),
        }
    }

    fn power(&mut self, scope: Scope) -> Result<Expr, ParseError> {
        let base = self.primary(scope)?;
        if self.peek().tok != Tok::Caret {
            return Ok(base);
        }
        let caret = self.bump();
        let exponent = self.unary(scope)?;
        if !exponent.is_coordinate_free() {
            return Err(ParseError::Invalid {
                line: caret.line,
                col: caret.col,
                message: "exponent must not depend on coordinates".into(),
            });
        }
        Ok(fold(Expr::binary(BinaryOp::Pow, base, exponent)))
    }

    fn primary(&mut self, scope: Scope) -> Result<Expr, ParseError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr(scope)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(ref name) => {
                let name = name.clone();
                self.bump();
                let func = match name.as_str() {
                    "sin" => Some(UnaryOp::Sin),
                    "cos" => Some(UnaryOp::Cos),
                    "exp" => Some(UnaryOp::Exp),
                    "sqrt" => Some(UnaryOp::Sqrt),
                    _ => None,
                };
                if let Some(op) = func {
                    self.expect(Tok::LParen, "`(`")?;
                    let arg = self.expr(scope)?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(fold(Expr::unary(op, arg)));
                }
                self.resolve(&name, &t, scope)
            }
            _ => Err(self.error(&["number", "identifier", "`(`", "`-`"])),
        }
    }

    fn resolve(&self, name: &str, at: &Token, scope: Scope) -> Result<Expr, ParseError> {
        if let Some((_, v)) = self.params.iter().find(|(n, _)| n == name) {
            return Ok(Expr::Param {
                name: name.to_string(),
                value: *v,
            });
        }
        match name {
            "pi" => return Ok(Expr::Const(std::f64::consts::PI)),
            "e" => return Ok(Expr::Const(std::f64::consts::E)),
            _ => {}
        }
        let undeclared = || ParseError::UndeclaredIdentifier {
            name: name.to_string(),
            line: at.line,
            col: at.col,
        };
        match scope {
            Scope::Constant => Err(undeclared()),
            Scope::Chart => coordinate_index(name, 'x')
                .map(Expr::Var)
                .ok_or_else(undeclared),
            Scope::Scalar { ambient_dim } => {
                if let Some(i) = coordinate_index(name, 'x') {
                    return Ok(Expr::Var(i));
                }
                match coordinate_index(name, 'F') {
                    Some(a) if a < ambient_dim => Ok(Expr::Component(a)),
                    _ => Err(undeclared()),
                }
            }
        }
    }

    fn constant(&mut self) -> Result<f64, ParseError> {
        let at = self.peek().clone();
        let e = self.expr(Scope::Constant)?;
        match e.eval_constant() {
            Some(v) if v.is_finite() => Ok(v),
            _ => Err(ParseError::Invalid {
                line: at.line,
                col: at.col,
                message: "constant expression is not finite".into(),
            }),
        }
    }

    fn param_statement(&mut self) -> Result<(), ParseError> {
        let (name, at) = self.expect_ident()?;
        if matches!(name.as_str(), "pi" | "e" | "sin" | "cos" | "exp" | "sqrt")
            || coordinate_index(&name, 'x').is_some()
        {
            return Err(ParseError::Invalid {
                line: at.line,
                col: at.col,
                message: format!("`{name}` is reserved"),
            });
        }
        if self.params.iter().any(|(n, _)| *n == name) {
            return Err(ParseError::Invalid {
                line: at.line,
                col: at.col,
                message: format!("parameter `{name}` declared twice"),
            });
        }
        self.expect(Tok::Eq, "`=`")?;
        let mut value = self.constant()?;
        if let Some((_, v)) = self.overrides.iter().find(|(n, _)| *n == name) {
            value = *v;
        }
        self.params.push((name, value));
        self.end_statement()
    }

    fn box_statement(&mut self) -> Result<Vec<(usize, f64, f64, Token)>, ParseError> {
        let mut entries = Vec::new();
        loop {
            let (name, at) = self.expect_ident()?;
            let idx = coordinate_index(&name, 'x').ok_or_else(|| ParseError::Invalid {
                line: at.line,
                col: at.col,
                message: format!("`{name}` is not a coordinate"),
            })?;
            self.expect_keyword("in")?;
            self.expect(Tok::LBracket, "`[`")?;
            let lo = self.constant()?;
            self.expect(Tok::Comma, "`,`")?;
            let hi = self.constant()?;
            self.expect(Tok::RBracket, "`]`")?;
            entries.push((idx, lo, hi, at));
            if self.peek().tok == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        self.end_statement()?;
        Ok(entries)
    }

    fn file(mut self) -> Result<ImmersionSpec, ParseError> {
        let mut dims: Option<(usize, usize)> = None;
        let mut components: Option<(Vec<Expr>, Token)> = None;
        let mut boxes: Option<Vec<(usize, f64, f64, Token)>> = None;
        loop {
            let t = self.peek().clone();
            let kw = match &t.tok {
                Tok::Eof => break,
                Tok::Semi => {
                    self.bump();
                    continue;
                }
                Tok::Ident(s) => s.clone(),
                _ => return Err(self.error(&["`param`", "`dim`", "`F`", "`box`"])),
            };
            let duplicate = |what: &str| ParseError::Invalid {
                line: t.line,
                col: t.col,
                message: format!("duplicate `{what}` statement"),
            };
            match kw.as_str() {
                "param" => {
                    self.bump();
                    self.param_statement()?;
                }
                "dim" => {
                    if dims.is_some() {
                        return Err(duplicate("dim"));
                    }
                    self.bump();
                    let m = self.expect_integer()?;
                    self.expect(Tok::Arrow, "`->`")?;
                    let n = self.expect_integer()?;
                    if m < 1 || n < m {
                        return Err(ParseError::Invalid {
                            line: t.line,
                            col: t.col,
                            message: format!("need N >= m >= 1, got m = {m}, N = {n}"),
                        });
                    }
                    dims = Some((m, n));
                    self.end_statement()?;
                }
                "F" => {
                    if components.is_some() {
                        return Err(duplicate("F"));
                    }
                    self.bump();
                    self.expect(Tok::Eq, "`=`")?;
                    self.expect(Tok::LParen, "`(`")?;
                    let mut list = vec![self.expr(Scope::Chart)?];
                    while self.peek().tok == Tok::Comma {
                        self.bump();
                        list.push(self.expr(Scope::Chart)?);
                    }
                    self.expect(Tok::RParen, "`)` or `,`")?;
                    self.end_statement()?;
                    components = Some((list, t));
                }
                "box" => {
                    if boxes.is_some() {
                        return Err(duplicate("box"));
                    }
                    self.bump();
                    boxes = Some(self.box_statement()?);
                }
                _ => return Err(self.error(&["`param`", "`dim`", "`F`", "`box`"])),
            }
        }

        for (name, _) in self.overrides {
            if !self.params.iter().any(|(n, _)| n == name) {
                return Err(ParseError::UnknownOverride(name.clone()));
            }
        }
        let (m, n) = dims.ok_or(ParseError::Missing("dim"))?;
        let (components, f_tok) = components.ok_or(ParseError::Missing("F"))?;
        let boxes = boxes.ok_or(ParseError::Missing("box"))?;
        if components.len() != n {
            return Err(ParseError::DimensionMismatch {
                declared: n,
                found: components.len(),
            });
        }
        if let Some(k) = components.iter().filter_map(Expr::max_var).max() {
            if k >= m {
                return Err(ParseError::UndeclaredIdentifier {
                    name: format!("x{}", k + 1),
                    line: f_tok.line,
                    col: f_tok.col,
                });
            }
        }
        let mut domain_box = vec![None; m];
        for (idx, lo, hi, at) in boxes {
            let invalid = |message: String| ParseError::Invalid {
                line: at.line,
                col: at.col,
                message,
            };
            if idx >= m {
                return Err(invalid(format!(
                    "x{} exceeds domain dimension {m}",
                    idx + 1
                )));
            }
            if domain_box[idx].is_some() {
                return Err(invalid(format!("x{} bounded twice", idx + 1)));
            }
            if lo >= hi {
                return Err(invalid(format!("empty interval [{lo}, {hi}]")));
            }
            domain_box[idx] = Some((lo, hi));
        }
        let domain_box = domain_box
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or(ParseError::Missing("box entry for every coordinate"))?;

        Ok(ImmersionSpec {
            domain_dim: m,
            ambient_dim: n,
            components,
            params: self.params,
            domain_box,
        })
    }
}

/// Parses an immersion file.
pub fn parse(source: &str) -> Result<ImmersionSpec, ParseError> {
    parse_with_overrides(source, &[])
}

/// Parses an immersion file, replacing the values of declared parameters.
pub fn parse_with_overrides(
    source: &str,
    overrides: &[(String, f64)],
) -> Result<ImmersionSpec, ParseError> {
    Parser::new(source, overrides)?.file()
}

/// Parses a scalar field over a chart: an expression in `x1..xm`, `F1..FN`
/// and the chart's parameters.
pub fn parse_scalar(source: &str, spec: &ImmersionSpec) -> Result<Expr, ParseError> {
    let mut p = Parser::new(source, &[])?;
    p.params = spec.params.clone();
    let e = p.expr(Scope::Scalar {
        ambient_dim: spec.ambient_dim,
    })?;
    if p.peek().tok != Tok::Eof {
        return Err(p.error(&["operator", "end of input"]));
    }
    if let Some(k) = e.max_var() {
        if k >= spec.domain_dim {
            return Err(ParseError::UndeclaredIdentifier {
                name: format!("x{}", k + 1),
                line: 1,
                col: 1,
            });
        }
    }
    Ok(e)
}
