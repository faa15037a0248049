use std::f64::consts::PI;

use super::field::KineticField;
use super::grid::PhaseGrid;
use crate::error::{Error, Result};

/// Kernel normalization: the window integral of sin over (0, π) equals this value.
pub const KERNEL_NORM: f64 = 2.0;

/// Φ[i] = Σ_q ω_q Σ_j f Δw.
pub fn mean_flux_phi(f: &KineticField) -> Vec<f64> {
    let nt = f.n_theta();
    let rho = f.density();
    let mut phi = vec![0.0; nt];
    for (q, w) in f.freq.weights.iter().enumerate() {
        for i in 0..nt {
            phi[i] += w * rho[q * nt + i];
        }
    }
    phi
}

#[inline]
pub fn effective_velocity(nu: f64, phi: f64, k: f64) -> f64 {
    nu + k * phi
}

/// Weights of the one-sided window: offsets k = 1.. with kΔθ < επ.
pub fn window_weights(phase: &PhaseGrid, epsilon: f64) -> Result<Vec<f64>> {
    let dth = phase.dtheta();
    let window = epsilon * PI;
    if window < 2.0 * dth {
        return Err(Error::WindowUnresolvable { window, required: 2.0 * dth });
    }
    let mut w = Vec::new();
    let mut k = 1usize;
    while (k as f64) * dth < window && k < phase.n_theta {
        w.push(((k as f64) * dth / epsilon).sin() * dth / (KERNEL_NORM * epsilon));
        k += 1;
    }
    Ok(w)
}

/// Nonlocal coupling applied to a per-θ density.
pub fn nonlocal_j_eps_density(rho: &[f64], phase: &PhaseGrid, epsilon: f64) -> Result<Vec<f64>> {
    let w = window_weights(phase, epsilon)?;
    let n = phase.n_theta;
    Ok((0..n)
        .map(|i| w.iter().enumerate().map(|(k, c)| c * rho[(i + k + 1) % n]).sum())
        .collect())
}

/// J^ε[i] = Σ_{(θ*−θ_i) mod 2π ∈ (0, επ)} sin((θ*−θ_i)/ε) ρ(θ*) Δθ / (2ε).
pub fn nonlocal_j_eps(f: &KineticField, epsilon: f64) -> Result<Vec<f64>> {
    nonlocal_j_eps_density(&mean_flux_phi(f), &f.phase, epsilon)
}
