//! Executable verifiers: iteration of germs with root-of-unity linear part,
//! isochronous centers of fields with scalar rotation linear part, and the
//! fractional-iterate and isolated-fixed-point steps that connect them.

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::flow::{flow_jet, matrix_exponential, FlowError, FlowOptions, VectorFieldJet};
use crate::jet::Coeff;
use crate::map::{max_norm, JetError, MapJet};
use crate::normal_form::{primitive_root_order, PRIMITIVITY_TOL};
use crate::tol::ToleranceProfile;

#[derive(Debug, Error)]
pub enum TheoremError {
    #[error("verifier requires a germ (zero constant term)")]
    NotAGerm,
    #[error("linear part is not a scalar multiple of the identity: {detail}")]
    NonScalarLinearPart { detail: String },
    #[error("lambda = {lambda} is not a primitive root of unity of order {m} (tolerance {tol:.1e})")]
    PrimitivityFailed { lambda: Coeff, m: usize, tol: f64 },
    #[error("hypothesis violated: {detail}")]
    HypothesisViolated { detail: String },
    #[error("order {order} exceeds truncation degree {degree}")]
    OrderExceedsDegree { order: usize, degree: usize },
    #[error("parameter out of range: {detail}")]
    InvalidParameter { detail: String },
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Verdict for `f^m = id + o(|z|^m)` on a germ whose linear part is a
/// primitive m-th root of unity times the identity.
#[derive(Debug, Clone, Serialize)]
pub struct IterationFormulaReport {
    pub m: usize,
    pub lambda: Coeff,
    /// Max magnitude over non-identity coefficients of f^m of degree <= m.
    /// The formula predicts these vanish; this is what is judged.
    pub low_degree_residual: f64,
    /// Max magnitude over coefficients of degree m+1..=D of f^m - id.
    /// Reported only; nonzero values are expected and allowed.
    pub high_degree_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn scalar_linear_part(
    a: &DMatrix<Coeff>,
    tol: &ToleranceProfile,
) -> Result<Coeff, TheoremError> {
    let n = a.nrows();
    let lambda = a[(0, 0)];
    let scale = max_norm(a);
    for i in 0..n {
        for j in 0..n {
            let expected = if i == j { lambda } else { Coeff::new(0.0, 0.0) };
            let dev = (a[(i, j)] - expected).norm();
            if !tol.negligible(dev, scale) {
                return Err(TheoremError::NonScalarLinearPart {
                    detail: format!(
                        "entry ({i}, {j}) = {} deviates from {} by {dev:.3e}",
                        a[(i, j)],
                        expected
                    ),
                });
            }
        }
    }
    Ok(lambda)
}

/// Checks that the m-th iterate of `f` differs from the identity only in
/// degrees above m.
pub fn verify_iteration_formula(
    f: &MapJet,
    m: usize,
    tol: &ToleranceProfile,
) -> Result<IterationFormulaReport, TheoremError> {
    if !f.is_germ() {
        return Err(TheoremError::NotAGerm);
    }
    if m < 1 {
        return Err(TheoremError::InvalidParameter {
            detail: "iteration order m must be at least 1".into(),
        });
    }
    if m > f.degree() {
        return Err(TheoremError::OrderExceedsDegree {
            order: m,
            degree: f.degree(),
        });
    }
    let lambda = scalar_linear_part(&f.linear_part(), tol)?;
    if primitive_root_order(lambda, m, PRIMITIVITY_TOL) != Some(m) {
        return Err(TheoremError::PrimitivityFailed {
            lambda,
            m,
            tol: PRIMITIVITY_TOL,
        });
    }

    let iterate = f.iterate(m)?;
    let diff = iterate.sub(&MapJet::identity(f.n(), f.degree()));
    let low_degree_residual = diff.max_abs_in_degrees(0, m);
    let high_degree_residual = if f.degree() > m {
        diff.max_abs_in_degrees(m + 1, f.degree())
    } else {
        0.0
    };
    Ok(IterationFormulaReport {
        m,
        lambda,
        low_degree_residual,
        high_degree_residual,
        tolerance: tol.residual,
        pass: low_degree_residual < tol.residual,
    })
}

/// Verdict for "the time-(2 pi / |omega|) map is the identity" on jets.
#[derive(Debug, Clone, Serialize)]
pub struct CenterReport {
    pub omega: f64,
    pub period: f64,
    /// Max coefficient magnitude of Phi_period - id over all stored degrees.
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub lie_terms_used: usize,
    pub substeps_used: usize,
    pub linear_part_error: f64,
}

/// Checks the isochronous-center condition for a field whose linear part is
/// `omega i I`: the time-T map with T = 2 pi / |omega| must be the identity
/// germ through the truncation degree.
pub fn verify_isochronous_center(
    v: &VectorFieldJet,
    omega: f64,
    opts: &FlowOptions,
    tol: &ToleranceProfile,
) -> Result<CenterReport, TheoremError> {
    if !(omega.is_finite() && omega != 0.0) {
        return Err(TheoremError::InvalidParameter {
            detail: format!("omega must be a nonzero finite real, got {omega}"),
        });
    }
    let a = v.linear_part();
    let n = v.n();
    let target = Coeff::new(0.0, omega);
    let scale = max_norm(&a).max(omega.abs());
    for i in 0..n {
        for j in 0..n {
            let expected = if i == j { target } else { Coeff::new(0.0, 0.0) };
            let dev = (a[(i, j)] - expected).norm();
            if !tol.negligible(dev, scale) {
                return Err(TheoremError::HypothesisViolated {
                    detail: format!(
                        "linear part entry ({i}, {j}) = {} is not {} (deviation {dev:.3e}); \
                         the field linear part must equal omega*i*I",
                        a[(i, j)],
                        expected
                    ),
                });
            }
        }
    }
    let period = 2.0 * std::f64::consts::PI / omega.abs();
    let flow = flow_jet(v, period, opts, tol)?;
    let residual = flow.phi.distance_to_identity();
    Ok(CenterReport {
        omega,
        period,
        residual,
        tolerance: tol.residual,
        pass: residual < tol.residual,
        lie_terms_used: flow.lie_terms_used,
        substeps_used: flow.substeps_used,
        linear_part_error: flow.linear_part_error,
    })
}

/// Residuals of the identity Phi_{T/m}^m = Phi_T computed along two routes.
#[derive(Debug, Clone, Serialize)]
pub struct FractionalIterateReport {
    pub m: usize,
    pub total_time: f64,
    /// Max coefficient deviation between the m-th iterate of the substep
    /// map and the direct time-T map.
    pub iterate_residual: f64,
    /// Max-norm deviation of the substep map linear part from e^{(T/m) A}.
    pub linear_part_error: f64,
}

pub fn verify_fractional_iterate(
    v: &VectorFieldJet,
    total_time: f64,
    m: usize,
    opts: &FlowOptions,
    tol: &ToleranceProfile,
) -> Result<FractionalIterateReport, TheoremError> {
    if m < 1 {
        return Err(TheoremError::InvalidParameter {
            detail: "iterate count m must be at least 1".into(),
        });
    }
    if !(total_time.is_finite() && total_time > 0.0) {
        return Err(TheoremError::InvalidParameter {
            detail: format!("total time must be positive, got {total_time}"),
        });
    }
    let step = flow_jet(v, total_time / m as f64, opts, tol)?;
    let whole = flow_jet(v, total_time, opts, tol)?;
    let iterated = step.phi.iterate(m)?;
    Ok(FractionalIterateReport {
        m,
        total_time,
        iterate_residual: iterated.sub(&whole.phi).max_abs(),
        linear_part_error: step.linear_part_error,
    })
}

/// Verdict that the origin is an isolated fixed point of the time-(T/k)
/// map: det(Phi_{T/k}'(0) - I) stays away from zero.
#[derive(Debug, Clone, Serialize)]
pub struct IsolatedFixedPointReport {
    pub k: usize,
    pub total_time: f64,
    /// |det(Phi_{T/k}'(0) - I)| from the computed flow jet.
    pub det_magnitude: f64,
    /// (2 sin(pi/k))^n, the value forced by the scalar rotation hypothesis.
    pub expected_magnitude: f64,
    pub floor: f64,
    pub pass: bool,
}

/// Floor for "bounded away from zero" determinant checks.
const DET_FLOOR: f64 = 1e-6;

pub fn check_isolated_fixed_point_criterion(
    v: &VectorFieldJet,
    k: usize,
    total_time: f64,
    opts: &FlowOptions,
    tol: &ToleranceProfile,
) -> Result<IsolatedFixedPointReport, TheoremError> {
    if k < 2 {
        return Err(TheoremError::InvalidParameter {
            detail: format!("k must be at least 2, got {k} (at k = 1 the divisor e^{{2 pi i/k}} - 1 vanishes)"),
        });
    }
    if !(total_time.is_finite() && total_time > 0.0) {
        return Err(TheoremError::InvalidParameter {
            detail: format!("period must be positive, got {total_time}"),
        });
    }
    let omega = 2.0 * std::f64::consts::PI / total_time;
    let a = v.linear_part();
    let n = v.n();
    let target = Coeff::new(0.0, omega);
    let scale = max_norm(&a).max(omega.abs());
    for i in 0..n {
        for j in 0..n {
            let expected = if i == j { target } else { Coeff::new(0.0, 0.0) };
            if !tol.negligible((a[(i, j)] - expected).norm(), scale) {
                return Err(TheoremError::HypothesisViolated {
                    detail: format!(
                        "linear part must equal (2 pi / T) i I; entry ({i}, {j}) = {}",
                        a[(i, j)]
                    ),
                });
            }
        }
    }
    let flow = flow_jet(v, total_time / k as f64, opts, tol)?;
    let lin = flow.phi.linear_part();
    let det = (lin - DMatrix::<Coeff>::identity(n, n)).determinant();
    let expected_magnitude = (2.0 * (std::f64::consts::PI / k as f64).sin()).powi(n as i32);
    Ok(IsolatedFixedPointReport {
        k,
        total_time,
        det_magnitude: det.norm(),
        expected_magnitude,
        floor: DET_FLOOR,
        pass: det.norm() > DET_FLOOR,
    })
}

/// Coefficient-wise comparison of a computed flow jet against a reference
/// map jet.
#[derive(Debug, Clone, Serialize)]
pub struct FlowComparisonReport {
    pub tau: f64,
    pub residual: f64,
    pub worst_component: usize,
    pub worst_monomial: Vec<u32>,
    pub lie_terms_used: usize,
    pub substeps_used: usize,
}

pub fn compare_flow_closed_form(
    v: &VectorFieldJet,
    closed_form: &MapJet,
    tau: f64,
    opts: &FlowOptions,
    tol: &ToleranceProfile,
) -> Result<FlowComparisonReport, TheoremError> {
    if v.n() != closed_form.n() || v.degree() != closed_form.degree() {
        return Err(TheoremError::Jet(JetError::ShapeMismatch {
            left_n: v.n(),
            left_degree: v.degree(),
            right_n: closed_form.n(),
            right_degree: closed_form.degree(),
        }));
    }
    let flow = flow_jet(v, tau, opts, tol)?;
    let diff = flow.phi.sub(closed_form);
    let mut residual = 0.0;
    let mut worst_component = 0;
    let mut worst_monomial = Vec::new();
    for (i, comp) in diff.components().iter().enumerate() {
        for (m, c) in comp.terms() {
            if c.norm() > residual {
                residual = c.norm();
                worst_component = i;
                worst_monomial = m.exponents().to_vec();
            }
        }
    }
    Ok(FlowComparisonReport {
        tau,
        residual,
        worst_component,
        worst_monomial,
        lie_terms_used: flow.lie_terms_used,
        substeps_used: flow.substeps_used,
    })
}

/// e^{tau A} as a map jet, for building linear closed forms.
pub fn linear_flow_jet(a: &DMatrix<Coeff>, tau: f64, degree: usize) -> MapJet {
    MapJet::linear(&matrix_exponential(a, tau), degree)
}
