use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Dimensional parameters of the oscillator system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    pub m: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub sigma: f64,
}

impl PhysicalParams {
    pub fn new(m: f64, k: f64, sigma: f64) -> Result<Self> {
        let p = Self { m, k, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(invalid("m", format!("must be positive, got {}", self.m)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(invalid("sigma", format!("must be positive, got {}", self.sigma)));
        }
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return Err(invalid("K", format!("must be nonnegative, got {}", self.k)));
        }
        Ok(())
    }
}

/// Reference scales of the dimensionless kinetic equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledParams {
    pub w0: f64,
    pub t0: f64,
    pub alpha: f64,
    pub epsilon: f64,
}

pub fn nondimensionalize(p: &PhysicalParams, epsilon: f64) -> Result<ScaledParams> {
    p.validate()?;
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(invalid("epsilon", format!("must lie in (0, 1], got {epsilon}")));
    }
    Ok(ScaledParams {
        w0: (p.sigma / p.m).sqrt(),
        t0: (p.m / p.sigma).sqrt(),
        alpha: (p.sigma * p.m).sqrt(),
        epsilon,
    })
}
