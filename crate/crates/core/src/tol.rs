//! Numeric thresholds shared across the crate.
//!
//! Exact statements about germs ("this coefficient vanishes", "these maps
//! are conjugate") turn into tolerance tests in floating point; the profile
//! collects every such knob in one place.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceProfile {
    /// Relative magnitude below which a coefficient counts as zero.
    pub zero_test: f64,
    /// Bound on conjugacy / identity residuals.
    pub residual: f64,
    /// Non-resonant homological divisors below this magnitude are refused
    /// instead of amplified.
    pub small_divisor_floor: f64,
    /// Reciprocal condition number below which a linear part counts as
    /// singular.
    pub rcond_floor: f64,
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        Self {
            zero_test: 1e-9,
            residual: 1e-9,
            small_divisor_floor: 1e-8,
            rcond_floor: 1e-12,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("tolerance entry {name} = {value} out of range: must be positive and < 1")]
pub struct InvalidTolerance {
    pub name: &'static str,
    pub value: f64,
}

impl ToleranceProfile {
    pub fn validate(&self) -> Result<(), InvalidTolerance> {
        for (name, value) in [
            ("zero_test", self.zero_test),
            ("residual", self.residual),
            ("small_divisor_floor", self.small_divisor_floor),
            ("rcond_floor", self.rcond_floor),
        ] {
            if !(value > 0.0 && value < 1.0) {
                return Err(InvalidTolerance { name, value });
            }
        }
        Ok(())
    }

    /// True when `x` counts as zero relative to a coefficient scale.
    pub fn negligible(&self, x: f64, scale: f64) -> bool {
        x.abs() < self.zero_test * scale.max(1.0)
    }
}
