//! Jet documents and tolerance profile files.
//!
//! A jet document is JSON with top-level `n`, `degree` and `components`:
//! one record list per component, each record `{alpha, re, im}` in
//! graded-lex order. The writer is canonical: fixed 17-significant-digit
//! float formatting and coefficient omission below the zero test, so
//! identical inputs produce byte-identical documents.

use serde::Deserialize;
use thiserror::Error;

use isochron_core::{Jet, MapJet, MultiIndex, ToleranceProfile};

use crate::system::{MAX_DEGREE, MAX_VARS};

#[derive(Debug, Error)]
pub enum DocError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid jet document: {0}")]
    Invalid(String),
    #[error("jet document exceeds limits: {0}")]
    LimitExceeded(String),
}

/// Canonical jet document for a map jet.
pub fn write_map_jet(map: &MapJet, tol: &ToleranceProfile) -> String {
    let scale = map.max_abs();
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!("  \"n\": {},\n", map.n()));
    out.push_str(&format!("  \"degree\": {},\n", map.degree()));
    out.push_str("  \"components\": [\n");
    for (ci, comp) in map.components().iter().enumerate() {
        out.push_str("    [\n");
        let records: Vec<String> = comp
            .terms()
            .filter(|(_, c)| !tol.negligible(c.norm(), scale))
            .map(|(m, c)| {
                let alpha: Vec<String> = m.exponents().iter().map(|e| e.to_string()).collect();
                format!(
                    "      {{\"alpha\": [{}], \"re\": {:.16e}, \"im\": {:.16e}}}",
                    alpha.join(", "),
                    c.re,
                    c.im
                )
            })
            .collect();
        out.push_str(&records.join(",\n"));
        if !records.is_empty() {
            out.push('\n');
        }
        out.push_str("    ]");
        out.push_str(if ci + 1 < map.n() { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n");
    out.push_str("}\n");
    out
}

#[derive(Deserialize)]
struct RawRecord {
    alpha: Vec<u32>,
    re: f64,
    im: f64,
}

#[derive(Deserialize)]
struct RawDoc {
    n: usize,
    degree: usize,
    components: Vec<Vec<RawRecord>>,
}

pub fn read_map_jet(text: &str) -> Result<MapJet, DocError> {
    let raw: RawDoc = serde_json::from_str(text)?;
    if raw.n == 0 || raw.n > MAX_VARS {
        return Err(DocError::LimitExceeded(format!(
            "n = {} outside 1..={MAX_VARS}",
            raw.n
        )));
    }
    if raw.degree > MAX_DEGREE {
        return Err(DocError::LimitExceeded(format!(
            "degree = {} above {MAX_DEGREE}",
            raw.degree
        )));
    }
    if raw.components.len() != raw.n {
        return Err(DocError::Invalid(format!(
            "{} components for n = {}",
            raw.components.len(),
            raw.n
        )));
    }
    let mut jets = Vec::with_capacity(raw.n);
    for records in &raw.components {
        let mut jet = Jet::zero(raw.n, raw.degree);
        for rec in records {
            if rec.alpha.len() != raw.n {
                return Err(DocError::Invalid(format!(
                    "alpha {:?} does not have length {}",
                    rec.alpha, raw.n
                )));
            }
            let m = MultiIndex::new(rec.alpha.clone());
            if m.degree() > raw.degree {
                return Err(DocError::Invalid(format!(
                    "alpha {:?} has degree {} above the document degree {}",
                    rec.alpha,
                    m.degree(),
                    raw.degree
                )));
            }
            if !(rec.re.is_finite() && rec.im.is_finite()) {
                return Err(DocError::Invalid(format!(
                    "non-finite coefficient at alpha {:?}",
                    rec.alpha
                )));
            }
            if jet.coeff(&m) != num_complex::Complex64::new(0.0, 0.0) {
                return Err(DocError::Invalid(format!(
                    "duplicate record for alpha {:?}",
                    rec.alpha
                )));
            }
            jet.set_coeff(&m, num_complex::Complex64::new(rec.re, rec.im));
        }
        jets.push(jet);
    }
    MapJet::new(jets).map_err(|e| DocError::Invalid(e.to_string()))
}

pub fn read_tolerance_profile(text: &str) -> Result<ToleranceProfile, DocError> {
    let profile: ToleranceProfile = serde_json::from_str(text)?;
    profile
        .validate()
        .map_err(|e| DocError::Invalid(e.to_string()))?;
    Ok(profile)
}
