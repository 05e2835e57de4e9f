//! Map jets: n-tuples of scalar jets representing germs of holomorphic maps
//! of n complex variables, with composition, iteration and compositional
//! inversion.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::basis::MultiIndex;
use crate::jet::{Coeff, Jet, ONE, ZERO};
use crate::tol::ToleranceProfile;

#[derive(Debug, Error, PartialEq)]
pub enum JetError {
    #[error("shape mismatch: (n={left_n}, degree={left_degree}) vs (n={right_n}, degree={right_degree})")]
    ShapeMismatch {
        left_n: usize,
        left_degree: usize,
        right_n: usize,
        right_degree: usize,
    },
    #[error("map with {components} components cannot act on {n} variables")]
    ComponentCount { components: usize, n: usize },
    #[error("operation requires a germ (every constant coefficient exactly zero)")]
    NotAGerm,
    #[error("linear part is singular or near-singular (reciprocal condition {rcond:.3e})")]
    SingularLinearPart { rcond: f64 },
}

/// An n-tuple of jets sharing one shape: the jet of a map C^n -> C^n.
#[derive(Clone, PartialEq)]
pub struct MapJet {
    components: Vec<Jet>,
}

impl MapJet {
    pub fn new(components: Vec<Jet>) -> Result<MapJet, JetError> {
        assert!(!components.is_empty(), "a map needs at least one component");
        let n = components[0].n();
        let degree = components[0].degree();
        for c in &components[1..] {
            if c.n() != n || c.degree() != degree {
                return Err(JetError::ShapeMismatch {
                    left_n: n,
                    left_degree: degree,
                    right_n: c.n(),
                    right_degree: c.degree(),
                });
            }
        }
        if components.len() != n {
            return Err(JetError::ComponentCount {
                components: components.len(),
                n,
            });
        }
        Ok(MapJet { components })
    }

    pub fn identity(n: usize, degree: usize) -> MapJet {
        let components = (0..n).map(|k| Jet::variable(n, degree, k)).collect();
        MapJet { components }
    }

    pub fn zero(n: usize, degree: usize) -> MapJet {
        MapJet {
            components: (0..n).map(|_| Jet::zero(n, degree)).collect(),
        }
    }

    /// The jet of the linear map x -> a x.
    pub fn linear(a: &DMatrix<Coeff>, degree: usize) -> MapJet {
        assert!(a.is_square(), "linear part must be square");
        let n = a.nrows();
        let mut components = Vec::with_capacity(n);
        for i in 0..n {
            let mut jet = Jet::zero(n, degree);
            for j in 0..n {
                jet.set_coeff(&MultiIndex::unit(n, j), a[(i, j)]);
            }
            components.push(jet);
        }
        MapJet { components }
    }

    pub fn n(&self) -> usize {
        self.components[0].n()
    }

    pub fn degree(&self) -> usize {
        self.components[0].degree()
    }

    pub fn component(&self, i: usize) -> &Jet {
        &self.components[i]
    }

    pub fn components(&self) -> &[Jet] {
        &self.components
    }

    pub fn component_mut(&mut self, i: usize) -> &mut Jet {
        &mut self.components[i]
    }

    pub fn same_shape(&self, other: &MapJet) -> bool {
        self.n() == other.n() && self.degree() == other.degree()
    }

    fn shape_guard(&self, other: &MapJet) -> Result<(), JetError> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(JetError::ShapeMismatch {
                left_n: self.n(),
                left_degree: self.degree(),
                right_n: other.n(),
                right_degree: other.degree(),
            })
        }
    }

    /// True iff every constant coefficient is exactly zero.
    pub fn is_germ(&self) -> bool {
        self.components
            .iter()
            .all(|c| c.coeff(&MultiIndex::zero(self.n())) == ZERO)
    }

    /// The n x n matrix of degree-1 coefficients: row i holds the
    /// coefficients of component i.
    pub fn linear_part(&self) -> DMatrix<Coeff> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| {
            if self.degree() >= 1 {
                self.components[i].coeff(&MultiIndex::unit(n, j))
            } else {
                ZERO
            }
        })
    }

    pub fn eval(&self, point: &[Coeff]) -> Vec<Coeff> {
        self.components.iter().map(|c| c.eval(point)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .map(Jet::max_abs)
            .fold(0.0, f64::max)
    }

    pub fn max_abs_in_degrees(&self, lo: usize, hi: usize) -> f64 {
        self.components
            .iter()
            .map(|c| c.max_abs_in_degrees(lo, hi))
            .fold(0.0, f64::max)
    }

    /// Componentwise difference; shapes must agree.
    pub fn sub(&self, other: &MapJet) -> MapJet {
        assert!(self.same_shape(other), "map shape mismatch in sub");
        MapJet {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn add(&self, other: &MapJet) -> MapJet {
        assert!(self.same_shape(other), "map shape mismatch in add");
        MapJet {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn scale(&self, factor: Coeff) -> MapJet {
        MapJet {
            components: self.components.iter().map(|c| c.scale(factor)).collect(),
        }
    }

    /// Max-norm distance to the identity over all stored degrees.
    pub fn distance_to_identity(&self) -> f64 {
        self.sub(&MapJet::identity(self.n(), self.degree())).max_abs()
    }

    /// Jet of `self` after `other`, i.e. self o other. The inner map must be
    /// a germ so that the truncation of the result is determined by the
    /// truncations of the factors.
    pub fn compose(&self, inner: &MapJet) -> Result<MapJet, JetError> {
        self.shape_guard(inner)?;
        if !inner.is_germ() {
            return Err(JetError::NotAGerm);
        }
        let n = self.n();
        let degree = self.degree();
        // Powers of each inner component up to the truncation degree. The
        // inner map is a germ, so inner_k^e has valuation e.
        let one = Jet::constant(n, degree, ONE);
        let mut powers: Vec<Vec<Jet>> = Vec::with_capacity(n);
        for k in 0..n {
            let mut row = Vec::with_capacity(degree + 1);
            row.push(one.clone());
            for e in 1..=degree {
                let next = row[e - 1].mul(inner.component(k));
                row.push(next);
            }
            powers.push(row);
        }
        let mut components = Vec::with_capacity(n);
        for comp in &self.components {
            let mut acc = Jet::zero(n, degree);
            for (m, c) in comp.nonzero_terms() {
                let mut term: Option<Jet> = None;
                for k in 0..n {
                    let e = m.exp(k) as usize;
                    if e == 0 {
                        continue;
                    }
                    term = Some(match term {
                        None => powers[k][e].clone(),
                        Some(t) => t.mul(&powers[k][e]),
                    });
                }
                let term = term.unwrap_or_else(|| one.clone());
                acc = &acc + &term.scale(c);
            }
            components.push(acc);
        }
        Ok(MapJet { components })
    }

    /// k-th iterate by repeated composition; k = 0 returns the identity.
    pub fn iterate(&self, k: usize) -> Result<MapJet, JetError> {
        if !self.is_germ() {
            return Err(JetError::NotAGerm);
        }
        if k == 0 {
            return Ok(MapJet::identity(self.n(), self.degree()));
        }
        let mut acc = self.clone();
        for _ in 1..k {
            acc = self.compose(&acc)?;
        }
        Ok(acc)
    }

    /// Compositional inverse of a germ with invertible linear part, solved
    /// degree by degree: with h = A + N (N the nonlinear part), the inverse
    /// is the fixpoint of phi -> A^{-1} (id - N o phi), which gains one
    /// correct degree per pass.
    pub fn inverse(&self, tol: &ToleranceProfile) -> Result<MapJet, JetError> {
        if !self.is_germ() {
            return Err(JetError::NotAGerm);
        }
        let n = self.n();
        let degree = self.degree();
        let a = self.linear_part();
        let a_inv = a
            .clone()
            .try_inverse()
            .ok_or(JetError::SingularLinearPart { rcond: 0.0 })?;
        let rcond = 1.0 / (inf_norm(&a) * inf_norm(&a_inv));
        if !(rcond > tol.rcond_floor) {
            return Err(JetError::SingularLinearPart { rcond });
        }

        let identity = MapJet::identity(n, degree);
        let nonlinear = {
            let mut nl = self.clone();
            for comp in &mut nl.components {
                let end = comp.basis().end_of_degree(1.min(degree));
                for c in &mut comp.coeffs_mut()[..end] {
                    *c = ZERO;
                }
            }
            nl
        };
        let mut phi = apply_linear(&a_inv, &identity);
        if degree >= 2 {
            for _ in 0..degree - 1 {
                let correction = nonlinear.compose(&phi)?;
                phi = apply_linear(&a_inv, &identity.sub(&correction));
            }
        }
        Ok(phi)
    }

    /// Directional derivative G'(x) . F(x), truncated at the shared degree:
    /// component i is sum_j dG_i/dx_j * F_j. The field must be a germ so
    /// the result depends only on the stored degrees of G.
    pub fn jacobian_apply(&self, field: &MapJet) -> Result<MapJet, JetError> {
        self.shape_guard(field)?;
        if !field.is_germ() {
            return Err(JetError::NotAGerm);
        }
        let n = self.n();
        let degree = self.degree();
        let mut components = Vec::with_capacity(n);
        for comp in &self.components {
            let mut acc = Jet::zero(n, degree);
            for j in 0..n {
                acc = &acc + &comp.derivative(j).mul(field.component(j));
            }
            components.push(acc);
        }
        Ok(MapJet { components })
    }
}

impl std::fmt::Debug for MapJet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.components.iter()).finish()
    }
}

/// Matrix max-row-sum norm.
pub fn inf_norm(a: &DMatrix<Complex64>) -> f64 {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Entry-wise max-norm.
pub fn max_norm(a: &DMatrix<Complex64>) -> f64 {
    a.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// The jet of x -> a * f(x) for a constant matrix a.
pub fn apply_linear(a: &DMatrix<Coeff>, f: &MapJet) -> MapJet {
    let n = f.n();
    assert_eq!(a.nrows(), n, "matrix size mismatch");
    let mut components = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = Jet::zero(n, f.degree());
        for j in 0..n {
            acc = &acc + &f.component(j).scale(a[(i, j)]);
        }
        components.push(acc);
    }
    MapJet { components }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn mi(exps: &[u32]) -> MultiIndex {
        MultiIndex::new(exps.to_vec())
    }

    fn c(re: f64, im: f64) -> Coeff {
        Complex64::new(re, im)
    }

    /// f(z) = -z + z^2 as a one-variable map jet.
    fn flip_germ(degree: usize) -> MapJet {
        let jet = Jet::from_terms(
            1,
            degree,
            [(mi(&[1]), c(-1.0, 0.0)), (mi(&[2]), ONE)],
        );
        MapJet::new(vec![jet]).unwrap()
    }

    #[test]
    fn compose_flip_with_itself() {
        // f o f = z - 2z^3 + z^4 by hand expansion.
        let f = flip_germ(4);
        let ff = f.compose(&f).unwrap();
        let comp = ff.component(0);
        assert!((comp.coeff(&mi(&[1])) - ONE).norm() < 1e-15);
        assert!(comp.coeff(&mi(&[2])).norm() < 1e-15);
        assert!((comp.coeff(&mi(&[3])) - c(-2.0, 0.0)).norm() < 1e-15);
        assert!((comp.coeff(&mi(&[4])) - ONE).norm() < 1e-15);
    }

    #[test]
    fn identity_is_neutral() {
        let f = flip_germ(4);
        let id = MapJet::identity(1, 4);
        assert_eq!(f.compose(&id).unwrap(), f);
        assert_eq!(id.compose(&f).unwrap(), f);
    }

    #[test]
    fn linear_maps_compose_to_matrix_product() {
        let a = dmatrix![c(1.0, 1.0), c(0.5, 0.0); c(0.0, -2.0), c(3.0, 0.0)];
        let b = dmatrix![c(2.0, 0.0), c(0.0, 1.0); c(-1.0, 0.0), c(1.0, -1.0)];
        let fa = MapJet::linear(&a, 3);
        let fb = MapJet::linear(&b, 3);
        let composed = fa.compose(&fb).unwrap();
        let prod = &a * &b;
        assert!(max_norm(&(composed.linear_part() - prod)) < 1e-14);
        // No nonlinear leakage.
        assert!(composed.max_abs_in_degrees(2, 3) == 0.0);
    }

    #[test]
    fn compose_requires_inner_germ() {
        let f = flip_germ(3);
        let mut not_germ = MapJet::identity(1, 3);
        not_germ
            .component_mut(0)
            .set_coeff(&mi(&[0]), ONE);
        assert_eq!(f.compose(&not_germ), Err(JetError::NotAGerm));
    }

    #[test]
    fn iterate_matches_iteration_rule() {
        let f = flip_germ(4);
        let f2a = f.iterate(2).unwrap();
        let f2b = f.compose(&f).unwrap();
        assert_eq!(f2a, f2b);
        assert_eq!(f.iterate(0).unwrap(), MapJet::identity(1, 4));
    }

    #[test]
    fn iterate_of_root_of_unity_linear_map() {
        // lambda = i has order 4: the 4th iterate is the identity.
        let lambda = dmatrix![c(0.0, 1.0)];
        let f = MapJet::linear(&lambda, 5);
        let f4 = f.iterate(4).unwrap();
        assert!(f4.distance_to_identity() < 1e-15);
    }

    #[test]
    fn inverse_of_quadratic_shift() {
        // h(x) = x + x^2/2 inverts to x - x^2/2 + x^3/2 at D = 3.
        let h = MapJet::new(vec![Jet::from_terms(
            1,
            3,
            [(mi(&[1]), ONE), (mi(&[2]), c(0.5, 0.0))],
        )])
        .unwrap();
        let tol = ToleranceProfile::default();
        let h_inv = h.inverse(&tol).unwrap();
        let comp = h_inv.component(0);
        assert!((comp.coeff(&mi(&[1])) - ONE).norm() < 1e-14);
        assert!((comp.coeff(&mi(&[2])) - c(-0.5, 0.0)).norm() < 1e-14);
        assert!((comp.coeff(&mi(&[3])) - c(0.5, 0.0)).norm() < 1e-14);
        // Round trip h o h^{-1} = id.
        let round = h.compose(&h_inv).unwrap();
        assert!(round.distance_to_identity() < 1e-12);
    }

    #[test]
    fn inverse_of_identity_and_linear() {
        let tol = ToleranceProfile::default();
        let id = MapJet::identity(2, 4);
        assert!(id.inverse(&tol).unwrap().distance_to_identity() < 1e-15);

        let a = dmatrix![c(2.0, 0.0), c(1.0, 0.0); c(0.0, 1.0), c(1.0, 1.0)];
        let f = MapJet::linear(&a, 4);
        let f_inv = f.inverse(&tol).unwrap();
        let prod = f.compose(&f_inv).unwrap();
        assert!(prod.distance_to_identity() < 1e-13);
    }

    #[test]
    fn inverse_rejects_singular_linear_part() {
        let a = dmatrix![c(1.0, 0.0), c(2.0, 0.0); c(2.0, 0.0), c(4.0, 0.0)];
        let f = MapJet::linear(&a, 3);
        let tol = ToleranceProfile::default();
        assert!(matches!(
            f.inverse(&tol),
            Err(JetError::SingularLinearPart { .. })
        ));
    }

    #[test]
    fn jacobian_apply_basics() {
        // G = id pulls back to the field itself.
        let field = flip_germ(4);
        let id = MapJet::identity(1, 4);
        assert_eq!(id.jacobian_apply(&field).unwrap(), field);

        // G = x^2 with F = x gives x * (x^2)' = 2x^2.
        let g = MapJet::new(vec![Jet::from_terms(1, 4, [(mi(&[2]), ONE)])]).unwrap();
        let f = MapJet::identity(1, 4);
        let out = g.jacobian_apply(&f).unwrap();
        assert_eq!(out.component(0).coeff(&mi(&[2])), c(2.0, 0.0));
        assert_eq!(out.component(0).nonzero_terms().count(), 1);
    }

    #[test]
    fn linear_part_of_composition_is_product() {
        let a = dmatrix![c(1.0, 0.5), c(0.0, 1.0); c(2.0, 0.0), c(1.0, -1.0)];
        let b = dmatrix![c(0.0, 1.0), c(1.0, 0.0); c(1.0, 1.0), c(0.0, -1.0)];
        let mut fa = MapJet::linear(&a, 4);
        let mut fb = MapJet::linear(&b, 4);
        // Salt in nonlinear terms; the linear part law must be unaffected.
        fa.component_mut(0).set_coeff(&mi(&[1, 1]), c(0.3, 0.7));
        fb.component_mut(1).set_coeff(&mi(&[2, 0]), c(-1.1, 0.2));
        let composed = fa.compose(&fb).unwrap();
        assert!(max_norm(&(composed.linear_part() - a * b)) < 1e-13);
    }
}
