use serde::{Deserialize, Serialize};

use super::field::KineticField;
use super::grid::{FrequencyQuadrature, PhaseGrid, VelocityGrid};
use super::maxwellian::{gaussian_moments, von_mises_gaussian};
use crate::error::{Error, Result};

/// Per-frequency densities together with the derived coupling fields.
/// Arrays indexed by frequency carry the layout [q][i].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumProfile {
    pub p_nu: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub y: Vec<f64>,
    pub k: f64,
}

impl EquilibriumProfile {
    pub fn new(p_nu: Vec<f64>, phase: &PhaseGrid, freq: &FrequencyQuadrature, k: f64) -> Result<Self> {
        let nt = phase.n_theta;
        if p_nu.len() != nt * freq.len() {
            return Err(Error::GridMismatch(format!(
                "P_nu has {} entries, expected {}",
                p_nu.len(),
                nt * freq.len()
            )));
        }
        let mut p = vec![0.0; nt];
        let mut py = vec![0.0; nt];
        for (q, (nu, w)) in freq.nodes.iter().zip(&freq.weights).enumerate() {
            for i in 0..nt {
                p[i] += w * p_nu[q * nt + i];
                py[i] += w * nu * p_nu[q * nt + i];
            }
        }
        let y = p.iter().zip(&py).map(|(p, py)| if *p > 0.0 { py / p } else { 0.0 }).collect();
        let mut v = vec![0.0; p_nu.len()];
        for (q, nu) in freq.nodes.iter().enumerate() {
            for i in 0..nt {
                v[q * nt + i] = nu + k * p[i];
            }
        }
        Ok(Self { p_nu, v, p, y, k })
    }

    /// P_ν(θ) given as a function of (ν, θ).
    pub fn from_fn(phase: &PhaseGrid, freq: &FrequencyQuadrature, k: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let th = phase.nodes();
        let p_nu = freq.nodes.iter().flat_map(|nu| th.iter().map(move |t| (*nu, *t))).map(|(nu, t)| f(nu, t)).collect();
        Self::new(p_nu, phase, freq, k)
    }

    pub fn uniform(phase: &PhaseGrid, freq: &FrequencyQuadrature, k: f64) -> Self {
        Self::from_fn(phase, freq, k, |_, _| 1.0 / (2.0 * std::f64::consts::PI)).expect("consistent sizes")
    }

    pub fn v_range(&self) -> (f64, f64) {
        let lo = self.v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

/// f[q][i][j] = P_ν[q][i] · M_{V[q][i]}(w_j).
pub fn equilibrium_build(
    profile: &EquilibriumProfile,
    phase: &PhaseGrid,
    velocity: &VelocityGrid,
    freq: &FrequencyQuadrature,
) -> Result<KineticField> {
    if profile.p_nu.len() != phase.n_theta * freq.len() {
        return Err(Error::GridMismatch("profile does not match grids".into()));
    }
    let (lo, hi) = profile.v_range();
    gaussian_moments(lo, velocity)?;
    gaussian_moments(hi, velocity)?;
    let w = velocity.nodes();
    let nw = velocity.n_w;
    let mut f = KineticField::zeros(*phase, *velocity, freq.clone());
    for (c, col) in f.data.chunks_mut(nw).enumerate() {
        let (pn, v) = (profile.p_nu[c], profile.v[c]);
        for (x, w) in col.iter_mut().zip(&w) {
            *x = pn * von_mises_gaussian(*w, v);
        }
    }
    Ok(f)
}
