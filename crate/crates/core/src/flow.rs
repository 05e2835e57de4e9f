//! Jets of time-tau maps of holomorphic vector fields.
//!
//! The jet of Phi_tau is built from the Lie series
//! `Phi_t = sum_k t^k/k! (L_F)^k id` with `L_F G = G' . F`. Because the
//! degree-(<= D) jet of the flow depends only on the degree-(<= D) jet of
//! the field, each coefficient is an entire function of t and the series
//! converges for every tau; substepping keeps the term count small, after
//! which Phi_tau is recovered by composing the substep map with itself.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::jet::Coeff;
use crate::map::{inf_norm, max_norm, JetError, MapJet};
use crate::tol::ToleranceProfile;

#[derive(Debug, Error, PartialEq)]
pub enum FlowError {
    #[error("vector field must vanish at the origin (constant coefficients exactly zero)")]
    NotAGerm,
    #[error("flow time must be a finite real number, got {0}")]
    NonFiniteTime(f64),
    #[error(
        "Lie series not converged: term magnitude {last:.3e} not decreasing after {terms} terms (raise substeps)"
    )]
    SeriesNotConverged { terms: usize, last: f64 },
    #[error("flow linear part deviates from the exponential of the field linear part by {error:.3e}")]
    LinearPartMismatch { error: f64 },
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// A polynomial vector field germ: the jet of F with F(0) = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldJet {
    field: MapJet,
}

impl VectorFieldJet {
    pub fn new(field: MapJet) -> Result<VectorFieldJet, FlowError> {
        if !field.is_germ() {
            return Err(FlowError::NotAGerm);
        }
        Ok(VectorFieldJet { field })
    }

    pub fn field(&self) -> &MapJet {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.field.n()
    }

    pub fn degree(&self) -> usize {
        self.field.degree()
    }

    /// The matrix F'(0).
    pub fn linear_part(&self) -> DMatrix<Coeff> {
        self.field.linear_part()
    }
}

/// Substep selection for [`flow_jet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substeps {
    /// ceil(4 |tau| (1 + ||A||_inf)), at least 1.
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub substeps: Substeps,
    /// Cap on Lie-series terms per substep.
    pub max_lie_terms: usize,
    /// A term whose max coefficient magnitude stays below this for two
    /// consecutive k is treated as converged tail.
    pub term_tol: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            substeps: Substeps::Auto,
            max_lie_terms: 60,
            term_tol: 1e-16,
        }
    }
}

/// Jet of the time-tau map plus convergence diagnostics.
#[derive(Debug, Clone)]
pub struct FlowResult {
    pub phi: MapJet,
    pub lie_terms_used: usize,
    pub substeps_used: usize,
    /// Max-norm of phi'(0) - e^{tau A}.
    pub linear_part_error: f64,
}

/// e^{tau a} by scaling and squaring of the Taylor series.
pub fn matrix_exponential(a: &DMatrix<Coeff>, tau: f64) -> DMatrix<Coeff> {
    let n = a.nrows();
    assert!(a.is_square(), "matrix exponential needs a square matrix");
    let b = a.map(|x| x * tau);
    let norm = inf_norm(&b);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scale = 2f64.powi(squarings as i32);
    let m = b.map(|x| x / scale);

    let identity = DMatrix::<Coeff>::identity(n, n);
    let mut sum = identity.clone();
    let mut term = identity;
    for k in 1..=64 {
        term = (&term * &m).map(|x| x / (k as f64));
        sum += &term;
        if inf_norm(&term) < 1e-20 * inf_norm(&sum).max(1.0) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

fn resolve_substeps(opts: &FlowOptions, tau: f64, a_norm: f64) -> usize {
    match opts.substeps {
        Substeps::Fixed(k) => k.max(1),
        Substeps::Auto => (4.0 * tau.abs() * (1.0 + a_norm)).ceil().max(1.0) as usize,
    }
}

/// Computes the jet of Phi_tau for the field `v`.
pub fn flow_jet(
    v: &VectorFieldJet,
    tau: f64,
    opts: &FlowOptions,
    tol: &ToleranceProfile,
) -> Result<FlowResult, FlowError> {
    if !tau.is_finite() {
        return Err(FlowError::NonFiniteTime(tau));
    }
    let n = v.n();
    let degree = v.degree();
    let a = v.linear_part();
    let substeps = resolve_substeps(opts, tau, inf_norm(&a));
    let dt = tau / substeps as f64;

    // Lie series for the substep map Phi_dt.
    let identity = MapJet::identity(n, degree);
    let mut sum = identity.clone();
    let mut lie_term = identity;
    let mut factor = 1.0f64;
    let mut terms_used = 0;
    let mut below = 0u32;
    let mut prev_mag = f64::INFINITY;
    for k in 1..=opts.max_lie_terms {
        lie_term = lie_term.jacobian_apply(v.field())?;
        factor *= dt / k as f64;
        let contribution = lie_term.scale(Complex64::from(factor));
        let mag = contribution.max_abs();
        sum = sum.add(&contribution);
        terms_used = k;
        if mag < opts.term_tol {
            below += 1;
            if below >= 2 {
                break;
            }
        } else {
            below = 0;
        }
        if k == opts.max_lie_terms && mag >= prev_mag {
            return Err(FlowError::SeriesNotConverged {
                terms: k,
                last: mag,
            });
        }
        prev_mag = mag;
    }

    let phi = sum.iterate(substeps)?;

    let expected = matrix_exponential(&a, tau);
    let linear_part_error = max_norm(&(phi.linear_part() - expected));
    if linear_part_error > tol.residual {
        return Err(FlowError::LinearPartMismatch {
            error: linear_part_error,
        });
    }

    Ok(FlowResult {
        phi,
        lie_terms_used: terms_used,
        substeps_used: substeps,
        linear_part_error,
    })
}

/// Residual of the flow property Phi_{s+t} = Phi_s o Phi_t on jets.
#[derive(Debug, Clone, Copy)]
pub struct SemigroupReport {
    pub s: f64,
    pub t: f64,
    pub residual: f64,
}

pub fn semigroup_check(
    v: &VectorFieldJet,
    s: f64,
    t: f64,
    opts: &FlowOptions,
    tol: &ToleranceProfile,
) -> Result<SemigroupReport, FlowError> {
    let combined = flow_jet(v, s + t, opts, tol)?.phi;
    let staged = flow_jet(v, s, opts, tol)?
        .phi
        .compose(&flow_jet(v, t, opts, tol)?.phi)?;
    Ok(SemigroupReport {
        s,
        t,
        residual: combined.sub(&staged).max_abs(),
    })
}
