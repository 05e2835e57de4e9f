//! Polynomial expression parser.
//!
//! Expressions support `+ - * ^` with nonnegative integer exponents,
//! parentheses, complex literals `a`, `bi`, `a+bi` and the bare imaginary
//! unit `i`. Multiplication is always explicit; the grammar is LL(1).

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

/// Exponent cap per variable occurrence.
pub const MAX_EXPONENT: u32 = 4096;
/// Cap on the number of distinct monomials an expression may expand to.
pub const MAX_TERMS: usize = 100_000;

#[derive(Debug, Error, PartialEq)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseErrorKind {
    #[error("unexpected character '{0}'")]
    UnexpectedChar(char),
    #[error("malformed number '{0}'")]
    BadNumber(String),
    #[error("numeric literal is not finite")]
    NonFiniteLiteral,
    #[error("expected {expected}, found {found}")]
    Unexpected { expected: String, found: String },
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("undeclared variable '{0}'")]
    UndeclaredVariable(String),
    #[error("exponent must be a nonnegative integer up to 4096")]
    BadExponent,
    #[error("expression expands to more than 100000 terms")]
    TooManyTerms,
    #[error("component {component} has nonzero constant term {value}")]
    NonzeroConstantTerm { component: usize, value: String },
    #[error("duplicate '{0}:' line")]
    DuplicateKey(String),
    #[error("unknown directive '{0}'")]
    UnknownKey(String),
    #[error("missing '{0}:' line")]
    MissingKey(&'static str),
    #[error("'{0}' is reserved for the imaginary unit")]
    ReservedVariable(String),
    #[error("duplicate variable '{0}'")]
    DuplicateVariable(String),
    #[error("invalid variable name '{0}'")]
    BadVariableName(String),
    #[error("expected {expected} component expressions, found {found}")]
    ComponentCount { expected: usize, found: usize },
    #[error("at most 6 variables are supported, found {0}")]
    TooManyVariables(usize),
    #[error("'{0}:' must appear after 'vars:'")]
    BeforeVars(String),
    #[error("invalid value for '{key}': {detail}")]
    BadDirective { key: String, detail: String },
}

fn err(line: usize, col: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, col, kind }
}

/// Sparse polynomial over the declared variables with complex coefficients.
/// Coefficients that become exactly zero are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Complex64>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Poly {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Complex64) -> Poly {
        let mut p = Poly::zero(nvars);
        if c != Complex64::new(0.0, 0.0) {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn variable(nvars: usize, idx: usize) -> Poly {
        let mut exps = vec![0; nvars];
        exps[idx] = 1;
        let mut p = Poly::zero(nvars);
        p.terms.insert(exps, Complex64::new(1.0, 0.0));
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, Complex64)> {
        self.terms.iter().map(|(e, &c)| (e, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn constant_term(&self) -> Complex64 {
        self.terms
            .get(&vec![0; self.nvars])
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn max_degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&x| x as usize).sum())
            .max()
            .unwrap_or(0)
    }

    fn insert(&mut self, exps: Vec<u32>, c: Complex64) {
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exps) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let sum = *o.get() + c;
                if sum == Complex64::new(0.0, 0.0) {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        debug_assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in other.terms() {
            out.insert(e.clone(), c);
        }
        out
    }

    pub fn neg(&self) -> Poly {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = -*c;
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Result<Poly, ParseErrorKind> {
        debug_assert_eq!(self.nvars, other.nvars);
        let mut out = Poly::zero(self.nvars);
        for (ea, ca) in self.terms() {
            for (eb, cb) in other.terms() {
                let exps: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.insert(exps, ca * cb);
                if out.terms.len() > MAX_TERMS {
                    return Err(ParseErrorKind::TooManyTerms);
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, e: u32) -> Result<Poly, ParseErrorKind> {
        let mut acc = Poly::constant(self.nvars, Complex64::new(1.0, 0.0));
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    Ident(String),
    Number { value: f64, imaginary: bool },
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Plus => write!(f, "'+'"),
            Tok::Minus => write!(f, "'-'"),
            Tok::Star => write!(f, "'*'"),
            Tok::Caret => write!(f, "'^'"),
            Tok::LParen => write!(f, "'('"),
            Tok::RParen => write!(f, "')'"),
            Tok::Ident(s) => write!(f, "identifier '{s}'"),
            Tok::Number { value, imaginary } => {
                write!(f, "number '{value}{}'", if *imaginary { "i" } else { "" })
            }
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Tokenizes one expression. `line` and `col0` anchor spans in the source
/// file; columns are 1-based.
fn lex(src: &str, line: usize, col0: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let col = col0 + i;
        let c = chars[i];
        match c {
            ' ' | '\t' => {
                i += 1;
            }
            '+' => {
                toks.push((Tok::Plus, col));
                i += 1;
            }
            '-' => {
                toks.push((Tok::Minus, col));
                i += 1;
            }
            '*' => {
                toks.push((Tok::Star, col));
                i += 1;
            }
            '^' => {
                toks.push((Tok::Caret, col));
                i += 1;
            }
            '(' => {
                toks.push((Tok::LParen, col));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, col));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i < chars.len() && chars[i] == '.' {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mark = i;
                    i += 1;
                    if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                        i += 1;
                    }
                    if i < chars.len() && chars[i].is_ascii_digit() {
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    } else {
                        // Not an exponent after all (e.g. "2e" before "*"):
                        // treat 'e' as the start of the next token.
                        i = mark;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let value: f64 = text
                    .parse()
                    .map_err(|_| err(line, col, ParseErrorKind::BadNumber(text.clone())))?;
                if !value.is_finite() {
                    return Err(err(line, col, ParseErrorKind::NonFiniteLiteral));
                }
                // An 'i' suffix marks an imaginary literal unless it starts
                // a longer identifier.
                let imaginary = i < chars.len()
                    && chars[i] == 'i'
                    && !(i + 1 < chars.len() && is_ident_continue(chars[i + 1]));
                if imaginary {
                    i += 1;
                }
                toks.push((Tok::Number { value, imaginary }, col));
            }
            c if is_ident_start(c) => {
                let start = i;
                while i < chars.len() && is_ident_continue(chars[i]) {
                    i += 1;
                }
                toks.push((Tok::Ident(chars[start..i].iter().collect()), col));
            }
            other => return Err(err(line, col, ParseErrorKind::UnexpectedChar(other))),
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a [String],
    line: usize,
    end_col: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn next(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn here(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|&(_, c)| c)
            .unwrap_or(self.end_col)
    }

    fn fail_end(&self) -> ParseError {
        err(self.line, self.end_col, ParseErrorKind::UnexpectedEnd)
    }

    fn expr(&mut self) -> Result<Poly, ParseError> {
        let mut acc = self.term()?;
        while let Some(tok) = self.peek() {
            match tok {
                Tok::Plus => {
                    self.next();
                    acc = acc.add(&self.term()?);
                }
                Tok::Minus => {
                    self.next();
                    acc = acc.add(&self.term()?.neg());
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Poly, ParseError> {
        let mut acc = self.factor()?;
        while self.peek() == Some(&Tok::Star) {
            let (_, col) = self.next().unwrap();
            let rhs = self.factor()?;
            acc = acc.mul(&rhs).map_err(|k| err(self.line, col, k))?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Poly, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.next();
            return Ok(self.factor()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<Poly, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            let (_, col) = self.next().unwrap();
            match self.next() {
                Some((Tok::Number { value, imaginary }, ncol)) => {
                    if imaginary
                        || value.fract() != 0.0
                        || value < 0.0
                        || value > MAX_EXPONENT as f64
                    {
                        return Err(err(self.line, ncol, ParseErrorKind::BadExponent));
                    }
                    base.pow(value as u32).map_err(|k| err(self.line, col, k))
                }
                Some((tok, ncol)) => Err(err(
                    self.line,
                    ncol,
                    ParseErrorKind::Unexpected {
                        expected: "a nonnegative integer exponent".into(),
                        found: tok.to_string(),
                    },
                )),
                None => Err(self.fail_end()),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Poly, ParseError> {
        let nvars = self.vars.len();
        match self.next() {
            Some((Tok::Number { value, imaginary }, _)) => {
                let c = if imaginary {
                    Complex64::new(0.0, value)
                } else {
                    Complex64::new(value, 0.0)
                };
                Ok(Poly::constant(nvars, c))
            }
            Some((Tok::Ident(name), col)) => {
                if name == "i" {
                    return Ok(Poly::constant(nvars, Complex64::new(0.0, 1.0)));
                }
                match self.vars.iter().position(|v| *v == name) {
                    Some(idx) => Ok(Poly::variable(nvars, idx)),
                    None => Err(err(
                        self.line,
                        col,
                        ParseErrorKind::UndeclaredVariable(name),
                    )),
                }
            }
            Some((Tok::LParen, lcol)) => {
                let inner = self.expr()?;
                match self.next() {
                    Some((Tok::RParen, _)) => Ok(inner),
                    Some((tok, col)) => Err(err(
                        self.line,
                        col,
                        ParseErrorKind::Unexpected {
                            expected: "')'".into(),
                            found: tok.to_string(),
                        },
                    )),
                    None => Err(err(self.line, lcol, ParseErrorKind::UnexpectedEnd)),
                }
            }
            Some((tok, col)) => Err(err(
                self.line,
                col,
                ParseErrorKind::Unexpected {
                    expected: "a number, variable or '('".into(),
                    found: tok.to_string(),
                },
            )),
            None => Err(self.fail_end()),
        }
    }
}

/// Parses one expression over the given variables. `line` and `col0` locate
/// the expression inside its source file for error reporting.
pub fn parse_expression(
    src: &str,
    vars: &[String],
    line: usize,
    col0: usize,
) -> Result<Poly, ParseError> {
    let toks = lex(src, line, col0)?;
    let end_col = col0 + src.chars().count();
    let mut parser = Parser {
        toks,
        pos: 0,
        vars,
        line,
        end_col,
    };
    if parser.peek().is_none() {
        return Err(parser.fail_end());
    }
    let poly = parser.expr()?;
    if let Some((tok, col)) = parser.next() {
        return Err(err(
            line,
            col,
            ParseErrorKind::Unexpected {
                expected: "'+', '-', '*', '^' or end of expression".into(),
                found: tok.to_string(),
            },
        ));
    }
    Ok(poly)
}

/// Parses a standalone complex literal such as `0.1`, `-2i` or `1+2i`
/// (used for command-line points).
pub fn parse_complex_literal(src: &str) -> Result<Complex64, ParseError> {
    let poly = parse_expression(src, &[], 1, 1)?;
    Ok(poly.constant_term())
}
