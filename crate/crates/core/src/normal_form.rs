//! Degree-by-degree Poincare-Dulac normalization of map germs.
//!
//! Given a germ with diagonal linear part, every non-resonant monomial of
//! degree 2..=m is removed by a near-identity coordinate change whose
//! coefficients solve the homological equation
//! `h[j, alpha] = c[j, alpha] / (Lambda^alpha - lambda_j)`.
//! Resonant coefficients of the coordinate change are set to zero, which
//! makes the output unique and testable.


use thiserror::Error;

use crate::basis::MultiIndex;
use crate::jet::{Coeff, ONE, ZERO};
use crate::map::{JetError, MapJet};
use crate::tol::ToleranceProfile;

/// Tolerance for recognizing roots of unity in user-supplied linear parts;
/// looser than `zero_test` because eigenvalues typically arrive through
/// decimal input or `e^{i theta}` evaluation.
pub const PRIMITIVITY_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum NormalFormError {
    #[error("normalization requires a germ (zero constant term)")]
    NotAGerm,
    #[error("linear part is not diagonal: entry ({row}, {col}) has magnitude {magnitude:.3e}")]
    NonDiagonalLinearPart {
        row: usize,
        col: usize,
        magnitude: f64,
    },
    #[error("normalization order {order} exceeds truncation degree {degree}")]
    OrderExceedsDegree { order: usize, degree: usize },
    #[error(
        "near-resonance at component {component}, monomial {monomial:?}: divisor magnitude {divisor:.3e} is below the small-divisor floor"
    )]
    NearResonance {
        component: usize,
        monomial: MultiIndex,
        divisor: f64,
    },
    #[error("conjugacy residual {residual:.3e} exceeds the residual tolerance (numerical breakdown)")]
    ConjugacyResidual { residual: f64 },
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// Eigenvalue data of a diagonal linear part, prepared for resonance tests.
#[derive(Debug, Clone)]
pub struct SpectrumInfo {
    eigenvalues: Vec<Coeff>,
    scalar_mode: bool,
    m: usize,
    primitive_order: Option<usize>,
}

impl SpectrumInfo {
    /// Reads the spectrum off the (required diagonal) linear part of `f`.
    pub fn from_map(
        f: &MapJet,
        m: usize,
        tol: &ToleranceProfile,
    ) -> Result<SpectrumInfo, NormalFormError> {
        let a = f.linear_part();
        let n = f.n();
        let scale = crate::map::max_norm(&a);
        for i in 0..n {
            for j in 0..n {
                if i != j && !tol.negligible(a[(i, j)].norm(), scale) {
                    return Err(NormalFormError::NonDiagonalLinearPart {
                        row: i,
                        col: j,
                        magnitude: a[(i, j)].norm(),
                    });
                }
            }
        }
        let eigenvalues: Vec<Coeff> = (0..n).map(|i| a[(i, i)]).collect();
        Ok(Self::from_eigenvalues(eigenvalues, m, tol))
    }

    /// Builds the spectrum from explicit eigenvalues of a diagonal linear
    /// part.
    pub fn from_eigenvalues(eigenvalues: Vec<Coeff>, m: usize, tol: &ToleranceProfile) -> Self {
        assert!(!eigenvalues.is_empty());
        let lead = eigenvalues[0];
        let scale = eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max);
        let scalar_mode = eigenvalues
            .iter()
            .all(|l| tol.negligible((l - lead).norm(), scale));
        let primitive_order = if scalar_mode {
            primitive_root_order(lead, (4 * m).max(64), PRIMITIVITY_TOL)
        } else {
            None
        };
        SpectrumInfo {
            eigenvalues,
            scalar_mode,
            m,
            primitive_order,
        }
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[Coeff] {
        &self.eigenvalues
    }

    /// True when the linear part is (within tolerance) a scalar multiple of
    /// the identity.
    pub fn scalar_mode(&self) -> bool {
        self.scalar_mode
    }

    pub fn order(&self) -> usize {
        self.m
    }

    /// Smallest p >= 1 with lambda^p close to 1, when the spectrum is
    /// scalar; `None` otherwise or when no such p exists up to the scan cap.
    pub fn primitive_order(&self) -> Option<usize> {
        self.primitive_order
    }

    /// Lambda^alpha = prod_k lambda_k^{alpha_k}, multiplied in variable
    /// order.
    pub fn eigen_power(&self, alpha: &MultiIndex) -> Coeff {
        let mut acc = ONE;
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            for _ in 0..alpha.exp(k) {
                acc *= l;
            }
        }
        acc
    }

    /// Homological divisor Lambda^alpha - lambda_j.
    pub fn divisor(&self, component: usize, alpha: &MultiIndex) -> Coeff {
        self.eigen_power(alpha) - self.eigenvalues[component]
    }

    /// Resonance test for the monomial `alpha` in component `component`:
    /// true iff lambda_j is (within `zero_test`) equal to Lambda^alpha.
    /// In scalar mode this reduces to lambda^(deg(alpha) - 1) = 1, i.e. the
    /// primitive order divides deg(alpha) - 1.
    pub fn resonant(&self, component: usize, alpha: &MultiIndex, tol: &ToleranceProfile) -> bool {
        assert!(alpha.degree() >= 2, "resonance test needs degree >= 2");
        assert!(component < self.n(), "component index out of range");
        let scale = self.eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max);
        tol.negligible(self.divisor(component, alpha).norm(), scale)
    }
}

/// Finds the smallest p in 1..=cap with |lambda^p - 1| < tol.
pub fn primitive_root_order(lambda: Coeff, cap: usize, tol: f64) -> Option<usize> {
    let mut acc = ONE;
    for p in 1..=cap {
        acc *= lambda;
        if (acc - ONE).norm() < tol {
            return Some(p);
        }
    }
    None
}

/// Output of [`normalize`]: `g = h^{-1} o f o h` with only resonant
/// monomials left below the chosen order.
#[derive(Debug, Clone)]
pub struct NormalFormResult {
    /// Normalized germ.
    pub g: MapJet,
    /// Coordinate change, tangent to the identity.
    pub h: MapJet,
    /// Compositional inverse of `h`.
    pub h_inv: MapJet,
    /// Resonant monomials of `g` with non-negligible coefficient, degrees
    /// 2..=order, as (component, monomial) pairs in basis order.
    pub resonant_monomials: Vec<(usize, MultiIndex)>,
    /// Max coefficient magnitude of h o g - f o h through the chosen order.
    pub conjugacy_residual: f64,
}

/// Removes every non-resonant monomial of degree 2..=order from `f` by a
/// sequence of near-identity conjugations, one degree at a time.
pub fn normalize(
    f: &MapJet,
    order: usize,
    tol: &ToleranceProfile,
) -> Result<NormalFormResult, NormalFormError> {
    if !f.is_germ() {
        return Err(NormalFormError::NotAGerm);
    }
    if order > f.degree() {
        return Err(NormalFormError::OrderExceedsDegree {
            order,
            degree: f.degree(),
        });
    }
    let spectrum = SpectrumInfo::from_map(f, order, tol)?;
    let n = f.n();
    let degree = f.degree();

    let mut current = f.clone();
    let mut change = MapJet::identity(n, degree);
    for d in 2..=order {
        let mut step = MapJet::identity(n, degree);
        let mut nontrivial = false;
        for j in 0..n {
            let comp = current.component(j);
            let basis = comp.basis().clone();
            for idx in basis.degree_range(d) {
                let c = comp.coeff_at(idx);
                let alpha = basis.monomial(idx);
                if spectrum.resonant(j, alpha, tol) {
                    continue; // stays in the normal form
                }
                if c == ZERO {
                    continue;
                }
                let divisor = spectrum.divisor(j, alpha);
                if divisor.norm() < tol.small_divisor_floor {
                    return Err(NormalFormError::NearResonance {
                        component: j,
                        monomial: alpha.clone(),
                        divisor: divisor.norm(),
                    });
                }
                step.component_mut(j).set_coeff(alpha, c / divisor);
                nontrivial = true;
            }
        }
        if nontrivial {
            let step_inv = step.inverse(tol)?;
            current = step_inv.compose(&current.compose(&step)?)?;
            change = change.compose(&step)?;
        }
    }

    let g = current;
    let h = change;
    let h_inv = h.inverse(tol)?;

    let g_scale = g.max_abs();
    let mut resonant_monomials = Vec::new();
    for d in 2..=order {
        for j in 0..n {
            let comp = g.component(j);
            let basis = comp.basis().clone();
            for idx in basis.degree_range(d) {
                let alpha = basis.monomial(idx);
                if !tol.negligible(comp.coeff_at(idx).norm(), g_scale)
                    && spectrum.resonant(j, alpha, tol)
                {
                    resonant_monomials.push((j, alpha.clone()));
                }
            }
        }
    }

    let conjugacy_residual = h
        .compose(&g)?
        .sub(&f.compose(&h)?)
        .max_abs_in_degrees(0, order);
    if conjugacy_residual > tol.residual {
        return Err(NormalFormError::ConjugacyResidual {
            residual: conjugacy_residual,
        });
    }

    Ok(NormalFormResult {
        g,
        h,
        h_inv,
        resonant_monomials,
        conjugacy_residual,
    })
}

/// One offending monomial found by [`check_resonant_only`].
#[derive(Debug, Clone)]
pub struct ResonanceViolation {
    pub component: usize,
    pub monomial: MultiIndex,
    pub magnitude: f64,
}

/// Report of [`check_resonant_only`]; an empty violation list is a pass.
#[derive(Debug, Clone)]
pub struct ResonanceReport {
    pub violations: Vec<ResonanceViolation>,
}

impl ResonanceReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every nonlinear monomial of `g` of degree 2..=order whose
/// coefficient is non-negligible and which fails the resonance test.
pub fn check_resonant_only(
    g: &MapJet,
    spectrum: &SpectrumInfo,
    order: usize,
    tol: &ToleranceProfile,
) -> Result<ResonanceReport, NormalFormError> {
    if !g.is_germ() {
        return Err(NormalFormError::NotAGerm);
    }
    let order = order.min(g.degree());
    let scale = g.max_abs();
    let mut violations = Vec::new();
    for d in 2..=order {
        for j in 0..g.n() {
            let comp = g.component(j);
            let basis = comp.basis().clone();
            for idx in basis.degree_range(d) {
                let magnitude = comp.coeff_at(idx).norm();
                let alpha = basis.monomial(idx);
                if !tol.negligible(magnitude, scale) && !spectrum.resonant(j, alpha, tol) {
                    violations.push(ResonanceViolation {
                        component: j,
                        monomial: alpha.clone(),
                        magnitude,
                    });
                }
            }
        }
    }
    Ok(ResonanceReport { violations })
}
