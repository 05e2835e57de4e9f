//! Scalar truncated power series ("jets") in n complex variables.
//!
//! Coefficients are stored densely in the shared graded-lex basis order, so
//! every arithmetic operation visits terms in one fixed sequence and
//! floating-point results are reproducible run to run. Terms of total degree
//! above the truncation degree are dropped eagerly and never materialized.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::basis::{self, Basis, MultiIndex};

pub type Coeff = Complex64;

pub const ZERO: Coeff = Complex64::new(0.0, 0.0);
pub const ONE: Coeff = Complex64::new(1.0, 0.0);

/// One scalar truncated power series: all monomials of total degree up to
/// `degree` in `n` variables.
#[derive(Clone)]
pub struct Jet {
    basis: Arc<Basis>,
    coeffs: Vec<Coeff>,
}

impl Jet {
    pub fn zero(n: usize, degree: usize) -> Jet {
        let basis = basis::shared(n, degree);
        let coeffs = vec![ZERO; basis.len()];
        Jet { basis, coeffs }
    }

    pub fn constant(n: usize, degree: usize, c: Coeff) -> Jet {
        let mut jet = Jet::zero(n, degree);
        jet.coeffs[0] = c;
        jet
    }

    /// The monomial `x_var`.
    pub fn variable(n: usize, degree: usize, var: usize) -> Jet {
        assert!(degree >= 1, "degree must be at least 1 to hold a variable");
        let mut jet = Jet::zero(n, degree);
        let idx = jet
            .basis
            .index_of(&MultiIndex::unit(n, var))
            .expect("unit monomial present");
        jet.coeffs[idx] = ONE;
        jet
    }

    /// Builds a jet from explicit terms. Panics if a term exceeds the
    /// truncation degree; use [`Jet::from_terms_truncated`] to drop instead.
    pub fn from_terms<I>(n: usize, degree: usize, terms: I) -> Jet
    where
        I: IntoIterator<Item = (MultiIndex, Coeff)>,
    {
        let mut jet = Jet::zero(n, degree);
        for (m, c) in terms {
            jet.set_coeff(&m, c);
        }
        jet
    }

    /// Builds a jet from explicit terms, silently dropping terms of degree
    /// above the truncation degree.
    pub fn from_terms_truncated<'a, I>(n: usize, degree: usize, terms: I) -> Jet
    where
        I: IntoIterator<Item = (&'a [u32], Coeff)>,
    {
        let mut jet = Jet::zero(n, degree);
        for (exps, c) in terms {
            assert_eq!(exps.len(), n, "exponent tuple length mismatch");
            let m = MultiIndex::new(exps.to_vec());
            if m.degree() <= degree {
                let idx = jet.basis.index_of(&m).expect("monomial within degree");
                jet.coeffs[idx] += c;
            }
        }
        jet
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub(crate) fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn same_shape(&self, other: &Jet) -> bool {
        self.n() == other.n() && self.degree() == other.degree()
    }

    /// Coefficient of the monomial `m`. Accessing a monomial beyond the
    /// truncation degree is a contract violation and panics; it is not
    /// silently zero.
    pub fn coeff(&self, m: &MultiIndex) -> Coeff {
        assert_eq!(m.len(), self.n(), "multi-index length mismatch");
        let idx = self.basis.index_of(m).unwrap_or_else(|| {
            panic!(
                "monomial {:?} of degree {} exceeds truncation degree {}",
                m,
                m.degree(),
                self.degree()
            )
        });
        self.coeffs[idx]
    }

    pub fn set_coeff(&mut self, m: &MultiIndex, c: Coeff) {
        assert_eq!(m.len(), self.n(), "multi-index length mismatch");
        let idx = self.basis.index_of(m).unwrap_or_else(|| {
            panic!(
                "monomial {:?} of degree {} exceeds truncation degree {}",
                m,
                m.degree(),
                self.degree()
            )
        });
        self.coeffs[idx] = c;
    }

    pub(crate) fn coeff_at(&self, idx: usize) -> Coeff {
        self.coeffs[idx]
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Coeff] {
        &mut self.coeffs
    }

    /// Terms in basis order.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, Coeff)> {
        self.basis
            .monomials()
            .iter()
            .zip(self.coeffs.iter().copied())
    }

    /// Terms with nonzero coefficient, in basis order.
    pub fn nonzero_terms(&self) -> impl Iterator<Item = (&MultiIndex, Coeff)> {
        self.terms().filter(|(_, c)| *c != ZERO)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Max coefficient magnitude over monomials of total degree in
    /// `lo..=hi`.
    pub fn max_abs_in_degrees(&self, lo: usize, hi: usize) -> f64 {
        let hi = hi.min(self.degree());
        if lo > hi {
            return 0.0;
        }
        self.coeffs[self.basis.degree_range(lo).start..self.basis.end_of_degree(hi)]
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, factor: Coeff) -> Jet {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= factor;
        }
        out
    }

    /// Truncating product. Terms of the factors are paired in basis order
    /// and pairs whose degree exceeds the truncation are skipped outright.
    pub fn mul(&self, other: &Jet) -> Jet {
        assert!(
            self.same_shape(other),
            "jet shape mismatch: ({}, {}) vs ({}, {})",
            self.n(),
            self.degree(),
            other.n(),
            other.degree()
        );
        let degree = self.degree();
        let mut out = Jet::zero(self.n(), degree);
        for i in 0..self.coeffs.len() {
            let a = self.coeffs[i];
            if a == ZERO {
                continue;
            }
            let di = self.basis.degree_of(i);
            let j_end = self.basis.end_of_degree(degree - di);
            let mi = self.basis.monomial(i);
            for j in 0..j_end {
                let b = other.coeffs[j];
                if b == ZERO {
                    continue;
                }
                let k = self
                    .basis
                    .index_of(&mi.sum(self.basis.monomial(j)))
                    .expect("product degree within bound");
                out.coeffs[k] += a * b;
            }
        }
        out
    }

    /// Partial derivative with respect to `var`.
    pub fn derivative(&self, var: usize) -> Jet {
        assert!(var < self.n(), "variable index out of range");
        let mut out = Jet::zero(self.n(), self.degree());
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == ZERO {
                continue;
            }
            let m = self.basis.monomial(i);
            if let Some(lower) = m.lowered(var) {
                let k = self.basis.index_of(&lower).expect("lower monomial present");
                out.coeffs[k] += c * (m.exp(var) as f64);
            }
        }
        out
    }

    /// Evaluates the truncated polynomial at a point by recursive Horner
    /// factoring, one variable at a time.
    pub fn eval(&self, point: &[Coeff]) -> Coeff {
        assert_eq!(point.len(), self.n(), "evaluation point length mismatch");
        let items: Vec<(&MultiIndex, Coeff)> = self.terms().collect();
        horner(&items, 0, point)
    }

    /// True when every coefficient is exactly zero.
    pub fn is_exactly_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }
}

fn horner(items: &[(&MultiIndex, Coeff)], var: usize, point: &[Coeff]) -> Coeff {
    if var == point.len() {
        let mut acc = ZERO;
        for (_, c) in items {
            acc += c;
        }
        return acc;
    }
    // Group by the exponent of the current variable; BTreeMap keeps the
    // grouping order deterministic.
    let mut groups: BTreeMap<u32, Vec<(&MultiIndex, Coeff)>> = BTreeMap::new();
    for &(m, c) in items {
        groups.entry(m.exp(var)).or_default().push((m, c));
    }
    let x = point[var];
    let mut acc = ZERO;
    let mut prev: Option<u32> = None;
    for (&e, group) in groups.iter().rev() {
        if let Some(p) = prev {
            for _ in e..p {
                acc *= x;
            }
        }
        acc += horner(group, var + 1, point);
        prev = Some(e);
    }
    if let Some(p) = prev {
        for _ in 0..p {
            acc *= x;
        }
    }
    acc
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.same_shape(other) && self.coeffs == other.coeffs
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet(n={}, D={})[", self.n(), self.degree())?;
        let mut first = true;
        for (m, c) in self.nonzero_terms() {
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i)*x^{:?}", c.re, c.im, m)?;
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, "]")
    }
}

impl std::ops::Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        assert!(self.same_shape(rhs), "jet shape mismatch in add");
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
        out
    }
}

impl std::ops::Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        assert!(self.same_shape(rhs), "jet shape mismatch in sub");
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
        out
    }
}

impl std::ops::Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c = -*c;
        }
        out
    }
}

impl std::ops::Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        Jet::mul(self, rhs)
    }
}
