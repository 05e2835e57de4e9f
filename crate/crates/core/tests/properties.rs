//! Randomized algebraic invariants of the jet engine and its consumers.
//!
//! The reference computations here (convolution, naive evaluation, symbolic
//! differentiation) are deliberately written against plain term maps so they
//! share no code path with the implementations they check.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use isochron_core::basis;
use isochron_core::flow::{flow_jet, semigroup_check, FlowOptions, VectorFieldJet};
use isochron_core::jet::ONE;
use isochron_core::normal_form::{check_resonant_only, normalize, SpectrumInfo};
use isochron_core::sim::{integrate, EvaluableField};
use isochron_core::{Coeff, Jet, MapJet, MultiIndex, ToleranceProfile};

fn c(re: f64, im: f64) -> Coeff {
    Complex64::new(re, im)
}

/// Plain term-map representation used by every oracle below.
type TermMap = HashMap<Vec<u32>, Coeff>;

fn jet_to_terms(jet: &Jet) -> Vec<(Vec<u32>, Coeff)> {
    jet.terms()
        .map(|(m, c)| (m.exponents().to_vec(), c))
        .collect()
}

/// Brute-force truncating product: double loop over all monomial pairs.
fn naive_mul(a: &Jet, b: &Jet) -> TermMap {
    let mut out = TermMap::new();
    for (ea, ca) in jet_to_terms(a) {
        for (eb, cb) in jet_to_terms(b) {
            let sum: Vec<u32> = ea.iter().zip(&eb).map(|(x, y)| x + y).collect();
            if sum.iter().sum::<u32>() as usize <= a.degree() {
                *out.entry(sum).or_insert(c(0.0, 0.0)) += ca * cb;
            }
        }
    }
    out
}

/// Naive monomial-by-monomial evaluation.
fn naive_eval(jet: &Jet, point: &[Coeff]) -> Coeff {
    let mut sum = c(0.0, 0.0);
    for (exps, coeff) in jet_to_terms(jet) {
        let mut term = coeff;
        for (k, &e) in exps.iter().enumerate() {
            term *= point[k].powu(e);
        }
        sum += term;
    }
    sum
}

fn arb_coeff() -> impl Strategy<Value = Coeff> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| c(re, im))
}

/// Dense random jet with unit-disc coefficients.
fn arb_jet(n: usize, degree: usize) -> impl Strategy<Value = Jet> {
    let len = basis::shared(n, degree).len();
    proptest::collection::vec(arb_coeff(), len).prop_map(move |coeffs| {
        let b = basis::shared(n, degree);
        Jet::from_terms(
            n,
            degree,
            b.monomials().iter().cloned().zip(coeffs),
        )
    })
}

/// Random germ: zero constant term, random linear and higher coefficients,
/// nonlinear part scaled down to keep iterates tame.
fn arb_germ(n: usize, degree: usize, nonlinear_scale: f64) -> impl Strategy<Value = MapJet> {
    proptest::collection::vec(arb_jet(n, degree), n).prop_map(move |mut comps| {
        for comp in &mut comps {
            comp.set_coeff(&MultiIndex::zero(n), c(0.0, 0.0));
            let b = basis::shared(n, degree);
            for m in &b.monomials()[b.end_of_degree(1)..] {
                let v = comp.coeff(m);
                comp.set_coeff(m, v * nonlinear_scale);
            }
        }
        MapJet::new(comps).unwrap()
    })
}

/// Germ with prescribed scalar linear part lambda * I.
fn scalar_germ(rng: &mut ChaCha8Rng, n: usize, degree: usize, lambda: Coeff) -> MapJet {
    let b = basis::shared(n, degree);
    let mut comps = Vec::with_capacity(n);
    for i in 0..n {
        let mut jet = Jet::zero(n, degree);
        jet.set_coeff(&MultiIndex::unit(n, i), lambda);
        for m in &b.monomials()[b.end_of_degree(1)..] {
            jet.set_coeff(m, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
        comps.push(jet);
    }
    MapJet::new(comps).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mul_matches_bruteforce_convolution(a in arb_jet(2, 4), b in arb_jet(2, 4)) {
        let fast = a.mul(&b);
        let slow = naive_mul(&a, &b);
        let scale = (a.max_abs() * b.max_abs()).max(1.0);
        for (m, got) in fast.terms() {
            let want = slow.get(m.exponents()).copied().unwrap_or(c(0.0, 0.0));
            prop_assert!((got - want).norm() < 1e-12 * scale);
        }
    }

    #[test]
    fn mul_commutes(a in arb_jet(3, 6), b in arb_jet(3, 6)) {
        let ab = a.mul(&b);
        let ba = b.mul(&a);
        let scale = (a.max_abs() * b.max_abs()).max(1.0);
        prop_assert!((&ab - &ba).max_abs() < 1e-12 * scale);
    }

    #[test]
    fn mul_associates(a in arb_jet(2, 8), b in arb_jet(2, 8), d in arb_jet(2, 8)) {
        let left = a.mul(&b).mul(&d);
        let right = a.mul(&b.mul(&d));
        let scale = (a.max_abs() * b.max_abs() * d.max_abs()).max(1.0);
        prop_assert!((&left - &right).max_abs() < 1e-12 * scale);
    }

    #[test]
    fn eval_matches_naive_sum(a in arb_jet(2, 5), re in -0.5..0.5f64, im in -0.5..0.5f64) {
        let point = [c(re, im), c(im, -re)];
        let fast = a.eval(&point);
        let slow = naive_eval(&a, &point);
        prop_assert!((fast - slow).norm() < 1e-12 * a.max_abs().max(1.0));
    }

    #[test]
    fn jacobian_apply_matches_symbolic_differentiation(
        g in arb_germ(2, 3, 1.0),
        f in arb_germ(2, 3, 1.0),
    ) {
        let got = g.jacobian_apply(&f).unwrap();
        // Oracle: differentiate each monomial of G symbolically, multiply by
        // the matching F component with the naive convolution, truncate.
        for i in 0..2 {
            let mut expected = TermMap::new();
            for (exps, coeff) in jet_to_terms(g.component(i)) {
                for j in 0..2usize {
                    if exps[j] == 0 {
                        continue;
                    }
                    let mut lowered = exps.clone();
                    lowered[j] -= 1;
                    let dcoeff = coeff * exps[j] as f64;
                    for (fe, fc) in jet_to_terms(f.component(j)) {
                        let sum: Vec<u32> =
                            lowered.iter().zip(&fe).map(|(x, y)| x + y).collect();
                        if sum.iter().sum::<u32>() as usize <= g.degree() {
                            *expected.entry(sum).or_insert(c(0.0, 0.0)) += dcoeff * fc;
                        }
                    }
                }
            }
            let scale = (g.max_abs() * f.max_abs() * g.degree() as f64).max(1.0);
            for (m, actual) in got.component(i).terms() {
                let want = expected.get(m.exponents()).copied().unwrap_or(c(0.0, 0.0));
                prop_assert!((actual - want).norm() < 1e-12 * scale);
            }
        }
    }

    #[test]
    fn compose_associates_on_germs(
        f in arb_germ(2, 5, 0.5),
        g in arb_germ(2, 5, 0.5),
        h in arb_germ(2, 5, 0.5),
    ) {
        let left = f.compose(&g).unwrap().compose(&h).unwrap();
        let right = f.compose(&g.compose(&h).unwrap()).unwrap();
        let scale = left.max_abs().max(right.max_abs()).max(1.0);
        prop_assert!(left.sub(&right).max_abs() < 1e-11 * scale);
    }

    #[test]
    fn linear_part_is_multiplicative(f in arb_germ(2, 4, 1.0), g in arb_germ(2, 4, 1.0)) {
        let composed = f.compose(&g).unwrap();
        let prod = f.linear_part() * g.linear_part();
        let diff = composed.linear_part() - prod;
        let err = diff.iter().map(|x| x.norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-13 * f.max_abs().max(1.0) * g.max_abs().max(1.0));
    }

    #[test]
    fn iterate_satisfies_exponent_addition(
        f in arb_germ(2, 6, 0.4),
        a in 0usize..4,
        b in 0usize..4,
    ) {
        let whole = f.iterate(a + b).unwrap();
        let split = f.iterate(a).unwrap().compose(&f.iterate(b).unwrap()).unwrap();
        let scale = whole.max_abs().max(split.max_abs()).max(1.0);
        prop_assert!(whole.sub(&split).max_abs() < 1e-10 * scale);
    }

    #[test]
    fn fourth_iterate_equals_square_of_square(f in arb_germ(1, 6, 0.5)) {
        let direct = f.iterate(4).unwrap();
        let sq = f.iterate(2).unwrap();
        let doubled = sq.compose(&sq).unwrap();
        let scale = direct.max_abs().max(1.0);
        prop_assert!(direct.sub(&doubled).max_abs() < 1e-10 * scale);
    }

    #[test]
    fn inverse_round_trips(f in arb_germ(2, 5, 0.3)) {
        let tol = ToleranceProfile::default();
        // Shift the linear part toward the identity so it stays invertible.
        let mut h = MapJet::identity(2, 5);
        let half = f.scale(c(0.5, 0.0));
        h = h.add(&half);
        let h_inv = match h.inverse(&tol) {
            Ok(inv) => inv,
            Err(_) => return Ok(()), // randomly near-singular linear part
        };
        let round = h.compose(&h_inv).unwrap();
        let scale = h.max_abs().max(1.0);
        prop_assert!(round.distance_to_identity() < 1e-10 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flow_linear_part_matches_matrix_exponential(
        f in arb_germ(2, 6, 0.6),
        tau in 0.0..1.0f64,
    ) {
        // Rescale the linear part to spectral radius <= 2 pi (via the
        // inf-norm bound).
        let a = f.linear_part();
        let norm = isochron_core::map::inf_norm(&a);
        let target = if norm > 0.0 { 2.0 * std::f64::consts::PI / norm } else { 1.0 };
        let scaled = f.scale(c(target.min(1.0), 0.0));
        let v = VectorFieldJet::new(scaled).unwrap();
        let flow = flow_jet(&v, tau, &FlowOptions::default(), &ToleranceProfile::default())
            .unwrap();
        prop_assert!(flow.linear_part_error < 1e-9, "error {}", flow.linear_part_error);
    }

    #[test]
    fn flow_satisfies_semigroup_law(
        f in arb_germ(2, 6, 0.5),
        s in 0.0..1.0f64,
        t in 0.0..1.0f64,
    ) {
        let v = VectorFieldJet::new(f.scale(c(0.8, 0.0))).unwrap();
        let report = semigroup_check(&v, s, t, &FlowOptions::default(), &ToleranceProfile::default())
            .unwrap();
        prop_assert!(report.residual < 1e-9, "residual {}", report.residual);
    }
}

#[test]
fn normalization_conjugacy_on_random_germs() {
    let tol = ToleranceProfile::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    for n in 1..=3usize {
        for m in 2..=6usize {
            if n == 3 && m > 4 {
                continue; // keep the suite fast; the envelope is covered below
            }
            let degree = m + 2;
            for _ in 0..4 {
                // Diagonal linear part with eigenvalues spread on an annulus
                // to stay clear of resonances most of the time.
                let b = basis::shared(n, degree);
                let mut comps = Vec::with_capacity(n);
                for i in 0..n {
                    let modulus = (0.6 + 0.8 * rng.gen::<f64>()).ln().exp();
                    let lambda = Complex64::from_polar(modulus, rng.gen_range(0.0..6.28));
                    let mut jet = Jet::zero(n, degree);
                    jet.set_coeff(&MultiIndex::unit(n, i), lambda);
                    for mono in &b.monomials()[b.end_of_degree(1)..] {
                        jet.set_coeff(
                            mono,
                            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                        );
                    }
                    comps.push(jet);
                }
                let f = MapJet::new(comps).unwrap();
                let result = match normalize(&f, m, &tol) {
                    Ok(r) => r,
                    Err(_) => continue, // randomly near-resonant spectrum
                };
                assert!(
                    result.conjugacy_residual < tol.residual,
                    "n={n} m={m}: residual {}",
                    result.conjugacy_residual
                );
                let spectrum = SpectrumInfo::from_map(&f, m, &tol).unwrap();
                let report = check_resonant_only(&result.g, &spectrum, m, &tol).unwrap();
                assert!(report.pass(), "n={n} m={m}: {:?}", report.violations);
                checked += 1;
            }
        }
    }
    assert!(checked > 30, "too many samples discarded: {checked}");
}

#[test]
fn normalization_conjugacy_full_envelope() {
    // One slow sample at the largest advertised size: n = 3, m = 6, D = 8.
    let tol = ToleranceProfile::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 3;
    let degree = 8;
    let b = basis::shared(n, degree);
    let mut comps = Vec::with_capacity(n);
    for i in 0..n {
        let lambda = Complex64::from_polar(1.3 + 0.2 * i as f64, 0.7 + 1.9 * i as f64);
        let mut jet = Jet::zero(n, degree);
        jet.set_coeff(&MultiIndex::unit(n, i), lambda);
        for mono in &b.monomials()[b.end_of_degree(1)..] {
            jet.set_coeff(mono, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
        comps.push(jet);
    }
    let f = MapJet::new(comps).unwrap();
    let result = normalize(&f, 6, &tol).unwrap();
    assert!(result.conjugacy_residual < tol.residual);
}

#[test]
fn scalar_primitive_root_normalization_erases_low_degrees() {
    // The engine of the iteration formula: for lambda a primitive m-th root
    // of unity and scalar linear part, nothing of degree <= m survives.
    let tol = ToleranceProfile::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for m in 2..=6usize {
        for n in 1..=2usize {
            let lambda = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / m as f64);
            let f = scalar_germ(&mut rng, n, m + 2, lambda);
            let result = normalize(&f, m, &tol).unwrap();
            let leftover = result.g.sub(&MapJet::linear(&result.g.linear_part(), m + 2));
            assert!(
                leftover.max_abs_in_degrees(2, m) < 1e-9,
                "m={m} n={n}: residual {}",
                leftover.max_abs_in_degrees(2, m)
            );
        }
    }
}

#[test]
fn jet_flow_agrees_with_numeric_integration() {
    // Two independent pipelines: Lie-series jet of Phi_tau evaluated at a
    // small point against direct numeric integration from that point.
    let tol = ToleranceProfile::default();
    let opts = FlowOptions::default();
    let tau_list = [0.25, 0.5, 1.0];

    // z' = 2 pi i z + z^2.
    let jet = Jet::from_terms(
        1,
        8,
        [
            (MultiIndex::new(vec![1]), c(0.0, std::f64::consts::TAU)),
            (MultiIndex::new(vec![2]), ONE),
        ],
    );
    let map = MapJet::new(vec![jet]).unwrap();
    let v = VectorFieldJet::new(map.clone()).unwrap();
    let field = EvaluableField::from_map_jet(&map, 1.0).unwrap();
    let z0 = [c(0.05, 0.0)];
    for &tau in &tau_list {
        let phi = flow_jet(&v, tau, &opts, &tol).unwrap().phi;
        let jet_end = phi.eval(&z0);
        let num_end = integrate(&field, &z0, tau, 1e-12).unwrap().end_state().to_vec();
        let err = (jet_end[0] - num_end[0]).norm();
        assert!(err < 1e-6, "tau = {tau}: pipelines differ by {err:.3e}");
    }

    // (x, y)' = (ix, -iy + x y^2).
    let fx = Jet::from_terms(2, 8, [(MultiIndex::new(vec![1, 0]), c(0.0, 1.0))]);
    let fy = Jet::from_terms(
        2,
        8,
        [
            (MultiIndex::new(vec![0, 1]), c(0.0, -1.0)),
            (MultiIndex::new(vec![1, 2]), ONE),
        ],
    );
    let map2 = MapJet::new(vec![fx, fy]).unwrap();
    let v2 = VectorFieldJet::new(map2.clone()).unwrap();
    let field2 = EvaluableField::from_map_jet(&map2, 1.0).unwrap();
    let w0 = [c(0.03, 0.02), c(-0.02, 0.025)];
    for &tau in &tau_list {
        let phi = flow_jet(&v2, tau, &opts, &tol).unwrap().phi;
        let jet_end = phi.eval(&w0);
        let num_end = integrate(&field2, &w0, tau, 1e-12).unwrap().end_state().to_vec();
        let err: f64 = jet_end
            .iter()
            .zip(&num_end)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "tau = {tau}: pipelines differ by {err:.3e}");
    }
}

#[test]
fn center_fields_flow_to_identity_at_period_one() {
    // Random quadratic-and-higher perturbations of 2 pi i z: the time-1 map
    // must be the identity through the truncation degree.
    let tol = ToleranceProfile::default();
    let opts = FlowOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    for n in 1..=2usize {
        for _ in 0..5 {
            let degree = 8;
            let b = basis::shared(n, degree);
            let mut comps = Vec::with_capacity(n);
            for i in 0..n {
                let mut jet = Jet::zero(n, degree);
                jet.set_coeff(&MultiIndex::unit(n, i), c(0.0, std::f64::consts::TAU));
                for mono in &b.monomials()[b.end_of_degree(1)..] {
                    jet.set_coeff(mono, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                }
                comps.push(jet);
            }
            let v = VectorFieldJet::new(MapJet::new(comps).unwrap()).unwrap();
            let flow = flow_jet(&v, 1.0, &opts, &tol).unwrap();
            let residual = flow.phi.distance_to_identity();
            assert!(residual < 1e-7, "n={n}: Phi_1 residual {residual:.3e}");

            // Proof route: the m-th iterate of the time-1/m map agrees.
            for m in 2..=6usize {
                let step = flow_jet(&v, 1.0 / m as f64, &opts, &tol).unwrap();
                let iterated = step.phi.iterate(m).unwrap();
                let err = iterated.sub(&flow.phi).max_abs();
                assert!(err < 1e-9, "n={n} m={m}: route disagreement {err:.3e}");
            }
        }
    }
}

#[test]
fn iteration_formula_on_random_scalar_germs() {
    use isochron_core::theorems::verify_iteration_formula;
    let tol = ToleranceProfile::default();
    let mut rng = ChaCha8Rng::seed_from_u64(31337);
    for m in 2..=6usize {
        for n in 1..=2usize {
            // Primitive root with random admissible numerator.
            let coprime: Vec<usize> = (1..m).filter(|l| gcd(*l, m) == 1).collect();
            let l = coprime[rng.gen_range(0..coprime.len())];
            let lambda =
                Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * l as f64 / m as f64);
            let f = scalar_germ(&mut rng, n, 8, lambda);
            let report = verify_iteration_formula(&f, m, &tol).unwrap();
            assert!(
                report.low_degree_residual < 1e-7,
                "m={m} n={n} l={l}: residual {:.3e}",
                report.low_degree_residual
            );
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[test]
fn matrix_exponential_agrees_with_eigen_decomposition_on_diagonals() {
    use isochron_core::flow::matrix_exponential;
    let entries = [c(0.0, 2.0), c(-0.5, 1.0), c(0.3, -0.4)];
    let a = DMatrix::<Coeff>::from_fn(3, 3, |i, j| if i == j { entries[i] } else { c(0.0, 0.0) });
    let e = matrix_exponential(&a, 0.7);
    for i in 0..3 {
        let expected = (entries[i] * 0.7).exp();
        assert!((e[(i, i)] - expected).norm() < 1e-13);
    }
}
