use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::grid::VelocityGrid;
use super::params::PhysicalParams;
use crate::error::{Error, Result};

pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Maximum tolerated mass deficit before a grid is declared too narrow.
pub const COVERAGE_TOL: f64 = 1e-6;

/// Dimensional Maxwellian (1/2π)·sqrt(m/(2πσ))·exp(−(m/2σ)(w−ν)²).
pub fn maxwellian_dimensional(w: f64, nu: f64, p: &PhysicalParams) -> Result<f64> {
    p.validate()?;
    let a = p.m / (2.0 * p.sigma);
    Ok((p.m / (2.0 * PI * p.sigma)).sqrt() / (2.0 * PI) * (-a * (w - nu).powi(2)).exp())
}

/// Unit-variance Gaussian M_V(w).
#[inline]
pub fn von_mises_gaussian(w: f64, v: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * (w - v) * (w - v)).exp()
}

/// Samples M_V on the grid.
pub fn sample_gaussian(v: f64, grid: &VelocityGrid) -> Vec<f64> {
    (0..grid.n_w).map(|j| von_mises_gaussian(grid.node(j), v)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMoments {
    pub mass: f64,
    pub centered_first: f64,
    pub flux: f64,
    pub variance: f64,
}

fn raw_moments(v: f64, grid: &VelocityGrid) -> GaussianMoments {
    let dw = grid.dw();
    let (mut m0, mut m1, mut mw, mut m2) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..grid.n_w {
        let w = grid.node(j);
        let m = von_mises_gaussian(w, v);
        let x = w - v;
        m0 += m;
        m1 += x * m;
        mw += w * m;
        m2 += x * x * m;
    }
    GaussianMoments {
        mass: m0 * dw,
        centered_first: m1 * dw,
        flux: mw * dw,
        variance: m2 * dw,
    }
}

/// Grid quadrature of M_V and its first two moments.
pub fn gaussian_moments(v: f64, grid: &VelocityGrid) -> Result<GaussianMoments> {
    let m = raw_moments(v, grid);
    let deficit = (1.0 - m.mass).abs();
    if deficit > COVERAGE_TOL {
        return Err(Error::GridCoverage { mass: m.mass, deficit });
    }
    Ok(m)
}
