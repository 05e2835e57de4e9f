//! Independent numeric orbit checks.
//!
//! The holomorphic system is realified (z_k = u_k + i v_k, state vector
//! (u_1, v_1, ..., u_n, v_n)) and integrated with an adaptive embedded
//! Dormand-Prince 5(4) pair with dense output. Nothing here touches the jet
//! engine: field evaluation, stepping and period detection are a separate
//! computation path on purpose.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::jet::Coeff;
use crate::map::MapJet;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("initial point with norm {norm:.3e} is outside the domain radius {radius:.3e}")]
    OutsideDomain { norm: f64, radius: f64 },
    #[error("trajectory left twice the domain radius at t = {t:.6} (norm {norm:.3e})")]
    DomainExit { t: f64, norm: f64 },
    #[error("step size underflow at t = {t:.6} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget exhausted at t = {t:.6}")]
    TooManySteps { t: f64 },
    #[error("integrator tolerance {tol:.3e} outside [1e-14, 1e-6]")]
    InvalidTolerance { tol: f64 },
    #[error("invalid input: {detail}")]
    InvalidInput { detail: String },
}

/// A polynomial vector field in evaluator form: plain term lists per
/// component, evaluated by repeated multiplication.
#[derive(Debug, Clone)]
pub struct EvaluableField {
    n: usize,
    components: Vec<Vec<(Vec<u32>, Coeff)>>,
    domain_radius: f64,
}

impl EvaluableField {
    pub fn from_terms(
        n: usize,
        components: Vec<Vec<(Vec<u32>, Coeff)>>,
        domain_radius: f64,
    ) -> Result<EvaluableField, SimError> {
        if n == 0 || components.len() != n {
            return Err(SimError::InvalidInput {
                detail: format!("{} components for {} variables", components.len(), n),
            });
        }
        if !(domain_radius > 0.0 && domain_radius.is_finite()) {
            return Err(SimError::InvalidInput {
                detail: format!("domain radius must be positive, got {domain_radius}"),
            });
        }
        let mut sorted = Vec::with_capacity(n);
        for terms in components {
            let mut cleaned = Vec::with_capacity(terms.len());
            for (exps, c) in terms {
                if exps.len() != n {
                    return Err(SimError::InvalidInput {
                        detail: format!("exponent tuple {exps:?} does not have length {n}"),
                    });
                }
                if !(c.re.is_finite() && c.im.is_finite()) {
                    return Err(SimError::InvalidInput {
                        detail: "non-finite coefficient".into(),
                    });
                }
                if exps.iter().all(|&e| e == 0) && c != Complex64::new(0.0, 0.0) {
                    return Err(SimError::InvalidInput {
                        detail: "field must vanish at the origin (nonzero constant term)".into(),
                    });
                }
                if c != Complex64::new(0.0, 0.0) {
                    cleaned.push((exps, c));
                }
            }
            // Fixed term order keeps summation deterministic.
            cleaned.sort_by(|a, b| {
                let da: u32 = a.0.iter().sum();
                let db: u32 = b.0.iter().sum();
                da.cmp(&db).then_with(|| b.0.cmp(&a.0))
            });
            sorted.push(cleaned);
        }
        Ok(EvaluableField {
            n,
            components: sorted,
            domain_radius,
        })
    }

    /// Reuses the coefficients of a map jet as an evaluable polynomial.
    pub fn from_map_jet(map: &MapJet, domain_radius: f64) -> Result<EvaluableField, SimError> {
        let components = map
            .components()
            .iter()
            .map(|comp| {
                comp.nonzero_terms()
                    .map(|(m, c)| (m.exponents().to_vec(), c))
                    .collect()
            })
            .collect();
        EvaluableField::from_terms(map.n(), components, domain_radius)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    pub fn eval(&self, z: &[Coeff]) -> Vec<Coeff> {
        debug_assert_eq!(z.len(), self.n);
        self.components
            .iter()
            .map(|terms| {
                let mut sum = Complex64::new(0.0, 0.0);
                for (exps, c) in terms {
                    let mut acc = *c;
                    for (k, &e) in exps.iter().enumerate() {
                        for _ in 0..e {
                            acc *= z[k];
                        }
                    }
                    sum += acc;
                }
                sum
            })
            .collect()
    }

    /// Realified right-hand side: y = (u_1, v_1, ..., u_n, v_n).
    fn deriv(&self, y: &[f64], out: &mut [f64]) {
        let z: Vec<Coeff> = (0..self.n)
            .map(|k| Complex64::new(y[2 * k], y[2 * k + 1]))
            .collect();
        let w = self.eval(&z);
        for k in 0..self.n {
            out[2 * k] = w[k].re;
            out[2 * k + 1] = w[k].im;
        }
    }
}

fn realify(z: &[Coeff]) -> Vec<f64> {
    let mut y = Vec::with_capacity(2 * z.len());
    for c in z {
        y.push(c.re);
        y.push(c.im);
    }
    y
}

fn complexify(y: &[f64]) -> Vec<Coeff> {
    y.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

fn euclid_norm(y: &[f64]) -> f64 {
    y.iter().map(|x| x * x).sum::<f64>().sqrt()
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
// Error coefficients b5 - b4.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense output coefficients.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const MAX_STEPS: usize = 4_000_000;

/// One accepted step's quartic interpolant.
#[derive(Debug, Clone)]
struct DenseSegment {
    t0: f64,
    h: f64,
    rcont: [Vec<f64>; 5],
}

impl DenseSegment {
    fn sample(&self, t: f64, out: &mut [f64]) {
        let theta = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let theta1 = 1.0 - theta;
        for i in 0..out.len() {
            out[i] = self.rcont[0][i]
                + theta
                    * (self.rcont[1][i]
                        + theta1
                            * (self.rcont[2][i]
                                + theta * (self.rcont[3][i] + theta1 * self.rcont[4][i])));
        }
    }
}

/// Time-stamped states from one integration, with dense output in between.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Vec<Coeff>>,
    segments: Vec<DenseSegment>,
    tol: f64,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<Coeff>] {
        &self.states
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    pub fn end_state(&self) -> &[Coeff] {
        self.states.last().expect("trajectory is never empty")
    }

    /// Dense-output state at any time inside the integration window.
    pub fn state_at(&self, t: f64) -> Vec<Coeff> {
        if self.segments.is_empty() {
            return self.states[0].clone();
        }
        let idx = match self
            .segments
            .binary_search_by(|s| s.t0.partial_cmp(&t).expect("finite times"))
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let seg = &self.segments[idx];
        let mut y = vec![0.0; seg.rcont[0].len()];
        seg.sample(t, &mut y);
        complexify(&y)
    }
}

/// Initial step heuristic for the 5(4) pair.
fn initial_step(field: &EvaluableField, y0: &[f64], f0: &[f64], t_end: f64, tol: f64) -> f64 {
    let dim = y0.len();
    let sc: Vec<f64> = y0.iter().map(|&y| tol + tol * y.abs()).collect();
    let rms = |v: &[f64]| -> f64 {
        (v.iter()
            .zip(&sc)
            .map(|(x, s)| (x / s) * (x / s))
            .sum::<f64>()
            / dim as f64)
            .sqrt()
    };
    let d0 = rms(y0);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    }
    .min(t_end);
    // Explicit Euler probe to estimate the second derivative.
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; dim];
    field.deriv(&y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    h1.min(100.0 * h0).min(t_end)
}

/// Integrates z' = F(z) from z0 over [0, t_end] with absolute and relative
/// local error control at `tol`.
pub fn integrate(
    field: &EvaluableField,
    z0: &[Coeff],
    t_end: f64,
    tol: f64,
) -> Result<Trajectory, SimError> {
    if !(1e-14..=1e-6).contains(&tol) {
        return Err(SimError::InvalidTolerance { tol });
    }
    if z0.len() != field.n() {
        return Err(SimError::InvalidInput {
            detail: format!("initial point has {} entries for n = {}", z0.len(), field.n()),
        });
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(SimError::InvalidInput {
            detail: format!("integration time must be finite and nonnegative, got {t_end}"),
        });
    }
    let y0 = realify(z0);
    let norm0 = euclid_norm(&y0);
    if norm0 >= field.domain_radius() {
        return Err(SimError::OutsideDomain {
            norm: norm0,
            radius: field.domain_radius(),
        });
    }

    let dim = y0.len();
    let mut times = vec![0.0];
    let mut states = vec![z0.to_vec()];
    let mut segments = Vec::new();
    if t_end == 0.0 {
        return Ok(Trajectory {
            times,
            states,
            segments,
            tol,
        });
    }

    let escape = 2.0 * field.domain_radius();
    let mut t = 0.0;
    let mut y = y0;
    let mut k1 = vec![0.0; dim];
    field.deriv(&y, &mut k1);
    let mut h = initial_step(field, &y, &k1, t_end, tol);
    let mut rejected = false;

    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut k5 = vec![0.0; dim];
    let mut k6 = vec![0.0; dim];
    let mut k7 = vec![0.0; dim];
    let mut stage = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];

    for _step in 0..MAX_STEPS {
        if t >= t_end {
            return Ok(Trajectory {
                times,
                states,
                segments,
                tol,
            });
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(SimError::StepUnderflow { t, h });
        }
        if t + h > t_end {
            h = t_end - t;
        }

        for i in 0..dim {
            stage[i] = y[i] + h * A21 * k1[i];
        }
        field.deriv(&stage, &mut k2);
        for i in 0..dim {
            stage[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        field.deriv(&stage, &mut k3);
        for i in 0..dim {
            stage[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        field.deriv(&stage, &mut k4);
        for i in 0..dim {
            stage[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        field.deriv(&stage, &mut k5);
        for i in 0..dim {
            stage[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        field.deriv(&stage, &mut k6);
        for i in 0..dim {
            y_new[i] =
                y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        field.deriv(&y_new, &mut k7);
        let _ = (C2, C3, C4, C5); // autonomous field: stage times unused

        let mut err_sq = 0.0;
        for i in 0..dim {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol + tol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / dim as f64).sqrt();

        if err <= 1.0 {
            // Accept: record the step and its interpolant.
            let mut rcont = [
                vec![0.0; dim],
                vec![0.0; dim],
                vec![0.0; dim],
                vec![0.0; dim],
                vec![0.0; dim],
            ];
            for i in 0..dim {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - h * k7[i] - bspl;
                rcont[4][i] = h
                    * (D1 * k1[i]
                        + D3 * k3[i]
                        + D4 * k4[i]
                        + D5 * k5[i]
                        + D6 * k6[i]
                        + D7 * k7[i]);
            }
            segments.push(DenseSegment { t0: t, h, rcont });

            t += h;
            y.copy_from_slice(&y_new);
            k1.copy_from_slice(&k7); // FSAL
            times.push(t);
            states.push(complexify(&y));

            let norm = euclid_norm(&y);
            if norm > escape {
                return Err(SimError::DomainExit { t, norm });
            }

            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, if rejected { 1.0 } else { 5.0 })
            };
            h *= fac;
            rejected = false;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            rejected = true;
        }
    }
    Err(SimError::TooManySteps { t })
}

/// Result of a first-return search.
#[derive(Debug, Clone, Serialize)]
pub struct PeriodReport {
    pub initial: Vec<Coeff>,
    /// First refined return time with distance below the return tolerance,
    /// if any; always greater than `t_min`.
    pub measured_period: Option<f64>,
    /// Distance to the initial point at the measured period, or at the best
    /// candidate when no return qualified.
    pub return_distance: f64,
    /// Time of the reported distance.
    pub best_time: f64,
    pub t_min: f64,
}

fn distance_sq(y: &[Coeff], z0: &[Coeff]) -> f64 {
    y.iter()
        .zip(z0)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
}

/// d/dt |z(t) - z0|^2 = 2 Re <z(t) - z0, F(z(t))>, exact via the field.
fn distance_sq_rate(field: &EvaluableField, z: &[Coeff], z0: &[Coeff]) -> f64 {
    let w = field.eval(z);
    2.0 * z
        .iter()
        .zip(z0)
        .zip(&w)
        .map(|((a, b), f)| ((a - b).conj() * f).re)
        .sum::<f64>()
}

/// Scans the trajectory for the first close return to the initial point
/// after `t_min`, refining candidate minima of the squared distance with
/// bisection on its exact time derivative.
pub fn measure_period(
    field: &EvaluableField,
    z0: &[Coeff],
    t_min: f64,
    t_max: f64,
    return_tol: f64,
    integrator_tol: f64,
) -> Result<PeriodReport, SimError> {
    if !(t_min > 0.0 && t_max > t_min) {
        return Err(SimError::InvalidInput {
            detail: format!("need 0 < t_min < t_max, got ({t_min}, {t_max})"),
        });
    }
    let trajectory = integrate(field, z0, t_max, integrator_tol)?;

    let n_scan = 4096usize.max((256.0 * (t_max - t_min)).ceil() as usize);
    let dt = (t_max - t_min) / n_scan as f64;
    let g: Vec<f64> = (0..=n_scan)
        .map(|i| {
            let t = t_min + i as f64 * dt;
            distance_sq(&trajectory.state_at(t), z0)
        })
        .collect();

    let refine = |a: f64, b: f64| -> f64 {
        // Bisection on the distance-squared rate; falls back to golden
        // section on the distance itself if the rate does not bracket.
        let rate = |t: f64| distance_sq_rate(field, &trajectory.state_at(t), z0);
        let (mut lo, mut hi) = (a, b);
        if rate(lo) <= 0.0 && rate(hi) >= 0.0 {
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if rate(mid) <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        } else {
            let phi = (5f64.sqrt() - 1.0) / 2.0;
            let value = |t: f64| distance_sq(&trajectory.state_at(t), z0);
            let (mut x1, mut x2) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
            let (mut f1, mut f2) = (value(x1), value(x2));
            for _ in 0..100 {
                if f1 < f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - phi * (hi - lo);
                    f1 = value(x1);
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + phi * (hi - lo);
                    f2 = value(x2);
                }
            }
            0.5 * (lo + hi)
        }
    };

    let mut best_time = t_min;
    let mut best_distance = f64::INFINITY;
    let mut measured: Option<(f64, f64)> = None;
    for i in 1..n_scan {
        if g[i] <= g[i - 1] && g[i] <= g[i + 1] {
            let a = t_min + (i - 1) as f64 * dt;
            let b = t_min + (i + 1) as f64 * dt;
            let t_star = refine(a, b);
            if t_star <= t_min {
                continue;
            }
            let dist = distance_sq(&trajectory.state_at(t_star), z0).sqrt();
            if dist < best_distance {
                best_distance = dist;
                best_time = t_star;
            }
            if dist < return_tol {
                measured = Some((t_star, dist));
                break;
            }
        }
    }
    if best_distance.is_infinite() {
        // Monotone distance: report the better endpoint of the scan.
        let (t_edge, g_edge) = if g[0] <= g[n_scan] {
            (t_min, g[0])
        } else {
            (t_max, g[n_scan])
        };
        best_time = t_edge;
        best_distance = g_edge.sqrt();
    }

    Ok(match measured {
        Some((t_star, dist)) => PeriodReport {
            initial: z0.to_vec(),
            measured_period: Some(t_star),
            return_distance: dist,
            best_time: t_star,
            t_min,
        },
        None => PeriodReport {
            initial: z0.to_vec(),
            measured_period: None,
            return_distance: best_distance,
            best_time,
            t_min,
        },
    })
}

/// Options for [`isochrony_scan`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub period_tol: f64,
    pub return_tol: f64,
    pub integrator_tol: f64,
    /// t_min = t_min_factor * expected period.
    pub t_min_factor: f64,
    /// t_max = t_max_factor * expected period.
    pub t_max_factor: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            period_tol: 1e-6,
            return_tol: 1e-8,
            integrator_tol: 1e-12,
            t_min_factor: 0.01,
            t_max_factor: 3.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleOutcome {
    pub radius: f64,
    pub point: Vec<Coeff>,
    pub measured_period: Option<f64>,
    pub return_distance: f64,
    pub error: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub expected_period: f64,
    pub period_tol: f64,
    pub samples: Vec<SampleOutcome>,
    pub pass: bool,
}

const SQRT_PRIMES: [f64; 12] = [
    1.4142135623730951, // sqrt 2
    1.7320508075688772, // sqrt 3
    2.23606797749979,   // sqrt 5
    2.6457513110645907, // sqrt 7
    3.3166247903554,    // sqrt 11
    3.605551275463989,  // sqrt 13
    4.123105625617661,  // sqrt 17
    4.358898943540674,  // sqrt 19
    4.795831523312719,  // sqrt 23
    5.385164807134504,  // sqrt 29
    5.5677643628300215, // sqrt 31
    6.082762530298219,  // sqrt 37
];

fn frac(x: f64) -> f64 {
    x - x.floor()
}

/// Deterministic quasi-uniform point on the sphere of the given radius in
/// C^n: irrational-rotation angle sequences for phases and amplitudes.
fn sphere_point(n: usize, radius: f64, sample: usize) -> Vec<Coeff> {
    let s = (sample + 1) as f64;
    let phases: Vec<f64> = (0..n)
        .map(|k| 2.0 * std::f64::consts::PI * frac(SQRT_PRIMES[k % SQRT_PRIMES.len()] * s))
        .collect();
    let mut amps: Vec<f64> = (0..n)
        .map(|k| 0.25 + frac(SQRT_PRIMES[(n + k) % SQRT_PRIMES.len()] * s))
        .collect();
    let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
    for a in &mut amps {
        *a *= radius / norm;
    }
    (0..n)
        .map(|k| Complex64::from_polar(amps[k], phases[k]))
        .collect()
}

/// Measures the first-return period at deterministic sample points on
/// spheres of the given radii and checks every period against the expected
/// one. Sample integrations run in parallel; the report order is by sample
/// index.
pub fn isochrony_scan(
    field: &EvaluableField,
    radii: &[f64],
    samples_per_radius: usize,
    expected_period: f64,
    opts: &ScanOptions,
) -> Result<ScanReport, SimError> {
    if !(expected_period > 0.0 && expected_period.is_finite()) {
        return Err(SimError::InvalidInput {
            detail: format!("expected period must be positive, got {expected_period}"),
        });
    }
    for &r in radii {
        if !(r > 0.0 && r < field.domain_radius()) {
            return Err(SimError::InvalidInput {
                detail: format!(
                    "radius {r} outside (0, domain radius {})",
                    field.domain_radius()
                ),
            });
        }
    }
    let t_min = opts.t_min_factor * expected_period;
    let t_max = opts.t_max_factor * expected_period;

    let points: Vec<(f64, Vec<Coeff>)> = radii
        .iter()
        .enumerate()
        .flat_map(|(ri, &r)| {
            (0..samples_per_radius)
                .map(move |s| (r, ri * samples_per_radius + s))
                .collect::<Vec<_>>()
        })
        .map(|(r, s)| (r, sphere_point(field.n(), r, s)))
        .collect();

    let samples: Vec<SampleOutcome> = points
        .par_iter()
        .map(|(radius, point)| {
            match measure_period(field, point, t_min, t_max, opts.return_tol, opts.integrator_tol)
            {
                Ok(report) => {
                    let pass = report
                        .measured_period
                        .map(|p| (p - expected_period).abs() <= opts.period_tol)
                        .unwrap_or(false);
                    SampleOutcome {
                        radius: *radius,
                        point: point.clone(),
                        measured_period: report.measured_period,
                        return_distance: report.return_distance,
                        error: None,
                        pass,
                    }
                }
                Err(err) => SampleOutcome {
                    radius: *radius,
                    point: point.clone(),
                    measured_period: None,
                    return_distance: f64::NAN,
                    error: Some(err.to_string()),
                    pass: false,
                },
            }
        })
        .collect();

    let pass = samples.iter().all(|s| s.pass);
    Ok(ScanReport {
        expected_period,
        period_tol: opts.period_tol,
        samples,
        pass,
    })
}
