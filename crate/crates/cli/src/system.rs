//! Line-oriented system specifications.
//!
//! ```text
//! # comment
//! vars: x, y
//! degree: 8
//! radius: 0.5
//! field: i*x, -i*y + x*y^2
//! ```
//!
//! `vars:` declares the variables, `map:` or `field:` gives one expression
//! per variable, and the optional `degree:` / `radius:` lines carry the
//! default truncation degree and domain radius. Constant terms must cancel
//! exactly: maps and fields are germs.

use num_complex::Complex64;

use isochron_core::sim::EvaluableField;
use isochron_core::{Jet, MapJet, MultiIndex};

use crate::expr::{parse_expression, ParseError, ParseErrorKind, Poly};

/// Variable-count cap; keeps basis sizes sane.
pub const MAX_VARS: usize = 6;
/// Truncation degree cap for jets built from specs and documents.
pub const MAX_DEGREE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    Map,
    Field,
}

impl SystemKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            SystemKind::Map => "map",
            SystemKind::Field => "field",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub vars: Vec<String>,
    pub kind: SystemKind,
    pub components: Vec<Poly>,
    pub degree: Option<usize>,
    pub radius: Option<f64>,
}

fn fail(line: usize, col: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, col, kind }
}

fn valid_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Splits `rest` (starting at 1-based column `col0` of `line`) on commas,
/// returning trimmed pieces with the column of their first character.
fn split_commas(rest: &str, col0: usize) -> Vec<(String, usize)> {
    let mut pieces = Vec::new();
    let mut start = 0usize;
    let chars: Vec<char> = rest.chars().collect();
    for i in 0..=chars.len() {
        if i == chars.len() || chars[i] == ',' {
            let piece: String = chars[start..i].iter().collect();
            let lead = piece.chars().take_while(|c| c.is_whitespace()).count();
            pieces.push((piece.trim().to_string(), col0 + start + lead));
            start = i + 1;
        }
    }
    pieces
}

pub fn parse_system(text: &str) -> Result<SystemSpec, ParseError> {
    let mut vars: Option<(Vec<String>, usize)> = None;
    let mut kind: Option<SystemKind> = None;
    let mut components: Option<Vec<Poly>> = None;
    let mut degree: Option<usize> = None;
    let mut radius: Option<f64> = None;
    let mut kind_line = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = raw.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let indent = raw.chars().count() - trimmed.chars().count();
        let key_col = indent + 1;
        let Some(colon) = trimmed.find(':') else {
            return Err(fail(
                line_no,
                key_col,
                ParseErrorKind::Unexpected {
                    expected: "a 'key: value' line".into(),
                    found: format!("'{}'", trimmed.trim_end()),
                },
            ));
        };
        let key = trimmed[..colon].trim();
        let rest = &trimmed[colon + 1..];
        let rest_col = key_col + trimmed[..colon + 1].chars().count();

        match key {
            "vars" => {
                if vars.is_some() {
                    return Err(fail(line_no, key_col, ParseErrorKind::DuplicateKey("vars".into())));
                }
                let mut names = Vec::new();
                for (name, col) in split_commas(rest, rest_col) {
                    if !valid_ident(&name) {
                        return Err(fail(line_no, col, ParseErrorKind::BadVariableName(name)));
                    }
                    if name == "i" {
                        return Err(fail(line_no, col, ParseErrorKind::ReservedVariable(name)));
                    }
                    if names.contains(&name) {
                        return Err(fail(line_no, col, ParseErrorKind::DuplicateVariable(name)));
                    }
                    names.push(name);
                }
                if names.len() > MAX_VARS {
                    return Err(fail(
                        line_no,
                        rest_col,
                        ParseErrorKind::TooManyVariables(names.len()),
                    ));
                }
                vars = Some((names, line_no));
            }
            "map" | "field" => {
                if kind.is_some() {
                    return Err(fail(
                        line_no,
                        key_col,
                        ParseErrorKind::DuplicateKey(key.into()),
                    ));
                }
                let Some((names, _)) = &vars else {
                    return Err(fail(line_no, key_col, ParseErrorKind::BeforeVars(key.into())));
                };
                let pieces = split_commas(rest, rest_col);
                if pieces.len() != names.len() {
                    return Err(fail(
                        line_no,
                        rest_col,
                        ParseErrorKind::ComponentCount {
                            expected: names.len(),
                            found: pieces.len(),
                        },
                    ));
                }
                let mut polys = Vec::with_capacity(pieces.len());
                for (src, col) in &pieces {
                    polys.push(parse_expression(src, names, line_no, *col)?);
                }
                kind = Some(if key == "map" {
                    SystemKind::Map
                } else {
                    SystemKind::Field
                });
                kind_line = line_no;
                components = Some(polys);
            }
            "degree" => {
                if degree.is_some() {
                    return Err(fail(line_no, key_col, ParseErrorKind::DuplicateKey("degree".into())));
                }
                let value: usize = rest.trim().parse().map_err(|_| {
                    fail(
                        line_no,
                        rest_col,
                        ParseErrorKind::BadDirective {
                            key: "degree".into(),
                            detail: format!("expected an integer, got '{}'", rest.trim()),
                        },
                    )
                })?;
                if !(1..=MAX_DEGREE).contains(&value) {
                    return Err(fail(
                        line_no,
                        rest_col,
                        ParseErrorKind::BadDirective {
                            key: "degree".into(),
                            detail: format!("must be in 1..={MAX_DEGREE}, got {value}"),
                        },
                    ));
                }
                degree = Some(value);
            }
            "radius" => {
                if radius.is_some() {
                    return Err(fail(line_no, key_col, ParseErrorKind::DuplicateKey("radius".into())));
                }
                let value: f64 = rest.trim().parse().map_err(|_| {
                    fail(
                        line_no,
                        rest_col,
                        ParseErrorKind::BadDirective {
                            key: "radius".into(),
                            detail: format!("expected a number, got '{}'", rest.trim()),
                        },
                    )
                })?;
                if !(value > 0.0 && value.is_finite()) {
                    return Err(fail(
                        line_no,
                        rest_col,
                        ParseErrorKind::BadDirective {
                            key: "radius".into(),
                            detail: format!("must be positive and finite, got {value}"),
                        },
                    ));
                }
                radius = Some(value);
            }
            other => {
                return Err(fail(
                    line_no,
                    key_col,
                    ParseErrorKind::UnknownKey(other.into()),
                ))
            }
        }
    }

    let (vars, _) = vars.ok_or_else(|| fail(1, 1, ParseErrorKind::MissingKey("vars")))?;
    let kind = kind.ok_or_else(|| fail(1, 1, ParseErrorKind::MissingKey("map' or 'field")))?;
    let components = components.expect("components set with kind");

    // Maps and fields are germs: constant terms must cancel exactly.
    for (j, poly) in components.iter().enumerate() {
        let c = poly.constant_term();
        if c != Complex64::new(0.0, 0.0) {
            return Err(fail(
                kind_line,
                1,
                ParseErrorKind::NonzeroConstantTerm {
                    component: j + 1,
                    value: format!("{c}"),
                },
            ));
        }
    }

    Ok(SystemSpec {
        vars,
        kind,
        components,
        degree,
        radius,
    })
}

impl SystemSpec {
    pub fn n(&self) -> usize {
        self.vars.len()
    }

    /// Builds the map jet at the given truncation degree; terms above the
    /// degree are dropped.
    pub fn to_map_jet(&self, degree: usize) -> MapJet {
        let n = self.n();
        let components = self
            .components
            .iter()
            .map(|poly| {
                Jet::from_terms_truncated(
                    n,
                    degree,
                    poly.terms().map(|(e, c)| (e.as_slice(), c)),
                )
            })
            .collect();
        MapJet::new(components).expect("component count enforced at parse time")
    }

    /// Full-polynomial numeric evaluator (no truncation).
    pub fn to_evaluable(&self, radius: f64) -> Result<EvaluableField, isochron_core::sim::SimError> {
        let components = self
            .components
            .iter()
            .map(|poly| poly.terms().map(|(e, c)| (e.clone(), c)).collect())
            .collect();
        EvaluableField::from_terms(self.n(), components, radius)
    }

    /// Canonical text form; parsing it back yields an identical spec.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("vars: ");
        out.push_str(&self.vars.join(", "));
        out.push('\n');
        if let Some(d) = self.degree {
            out.push_str(&format!("degree: {d}\n"));
        }
        if let Some(r) = self.radius {
            out.push_str(&format!("radius: {r}\n"));
        }
        out.push_str(self.kind.keyword());
        out.push_str(": ");
        let rendered: Vec<String> = self
            .components
            .iter()
            .map(|p| render_poly(p, &self.vars))
            .collect();
        out.push_str(&rendered.join(", "));
        out.push('\n');
        out
    }
}

fn render_monomial(exps: &[u32], vars: &[String]) -> String {
    let mut parts = Vec::new();
    for (v, &e) in vars.iter().zip(exps) {
        match e {
            0 => {}
            1 => parts.push(v.clone()),
            _ => parts.push(format!("{v}^{e}")),
        }
    }
    parts.join("*")
}

/// Renders one coefficient together with its sign handling: returns
/// (is_negative_extracted, magnitude_text). Mixed complex coefficients keep
/// their signs inside parentheses and never extract.
fn render_coeff(c: Complex64) -> (bool, String) {
    if c.im == 0.0 {
        if c.re.is_sign_negative() {
            (true, format_f64(-c.re))
        } else {
            (false, format_f64(c.re))
        }
    } else if c.re == 0.0 {
        let (neg, b) = if c.im.is_sign_negative() {
            (true, -c.im)
        } else {
            (false, c.im)
        };
        let text = if b == 1.0 {
            "i".to_string()
        } else {
            format!("{}i", format_f64(b))
        };
        (neg, text)
    } else {
        let im_abs = c.im.abs();
        let im_text = if im_abs == 1.0 {
            "i".to_string()
        } else {
            format!("{}i", format_f64(im_abs))
        };
        let sign = if c.im.is_sign_negative() { '-' } else { '+' };
        (false, format!("({}{}{})", format_f64(c.re), sign, im_text))
    }
}

fn format_f64(x: f64) -> String {
    // Shortest round-trip decimal form.
    format!("{x}")
}

pub fn render_poly(poly: &Poly, vars: &[String]) -> String {
    if poly.is_zero() {
        return "0".to_string();
    }
    // Graded order, first variables dominant: same order jets store.
    let mut terms: Vec<(MultiIndex, Complex64)> = poly
        .terms()
        .map(|(e, c)| (MultiIndex::new(e.clone()), c))
        .collect();
    terms.sort_by(|a, b| a.0.cmp(&b.0));

    let mut out = String::new();
    for (i, (m, c)) in terms.iter().enumerate() {
        let mono = render_monomial(m.exponents(), vars);
        let (neg, coeff_text) = render_coeff(*c);
        let body = if mono.is_empty() {
            coeff_text
        } else if coeff_text == "1" {
            mono
        } else if coeff_text == "i" {
            format!("i*{mono}")
        } else {
            format!("{coeff_text}*{mono}")
        };
        if i == 0 {
            if neg {
                out.push('-');
            }
            out.push_str(&body);
        } else {
            out.push_str(if neg { " - " } else { " + " });
            out.push_str(&body);
        }
    }
    out
}
