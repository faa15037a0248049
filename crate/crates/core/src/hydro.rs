//! Finite-volume solver for the per-frequency continuity system ∂_t P_ν + ∂_θ(V P_ν) = 0,
//! V = ν + K P, with residual monitors for the momentum balances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{FrequencyQuadrature, PhaseGrid};

pub const VACUUM: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroState {
    /// Laid out [q][i].
    pub p_nu: Vec<f64>,
    pub t: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub phase: PhaseGrid,
    pub freq: FrequencyQuadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingFields {
    pub p: Vec<f64>,
    pub y: Vec<f64>,
    /// Laid out [q][i].
    pub v: Vec<f64>,
    pub vacuum: Vec<bool>,
}

impl HydroState {
    pub fn new(p_nu: Vec<f64>, phase: PhaseGrid, freq: FrequencyQuadrature, k: f64) -> Result<Self> {
        if p_nu.len() != phase.n_theta * freq.len() {
            return Err(Error::GridMismatch("P_nu size does not match grids".into()));
        }
        if p_nu.iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid("P_nu", "densities must be nonnegative"));
        }
        if !(k >= 0.0) {
            return Err(invalid("K", "must be nonnegative"));
        }
        Ok(Self { p_nu, t: 0.0, k, phase, freq })
    }

    pub fn from_fn(phase: PhaseGrid, freq: FrequencyQuadrature, k: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let th = phase.nodes();
        let p_nu = freq.nodes.iter().flat_map(|nu| th.iter().map(|t| f(*nu, *t)).collect::<Vec<_>>()).collect();
        Self::new(p_nu, phase, freq, k)
    }

    pub fn slice(&self, q: usize) -> &[f64] {
        let n = self.phase.n_theta;
        &self.p_nu[q * n..(q + 1) * n]
    }

    pub fn mass_per_nu(&self) -> Vec<f64> {
        let dth = self.phase.dtheta();
        self.p_nu.chunks(self.phase.n_theta).map(|c| c.iter().sum::<f64>() * dth).collect()
    }

    pub fn max_speed(&self) -> f64 {
        coupling_fields(self).v.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn coupling_fields(s: &HydroState) -> CouplingFields {
    let nt = s.phase.n_theta;
    let mut p = vec![0.0; nt];
    let mut py = vec![0.0; nt];
    for (q, (nu, w)) in s.freq.nodes.iter().zip(&s.freq.weights).enumerate() {
        for (i, pn) in s.slice(q).iter().enumerate() {
            p[i] += w * pn;
            py[i] += w * nu * pn;
        }
    }
    let vacuum: Vec<bool> = p.iter().map(|p| *p < VACUUM).collect();
    let y = p.iter().zip(&py).zip(&vacuum).map(|((p, py), vac)| if *vac { 0.0 } else { py / p }).collect();
    let v = s.freq.nodes.iter().flat_map(|nu| p.iter().map(move |p| nu + s.k * p)).collect();
    CouplingFields { p, y, v, vacuum }
}

/// Local Lax–Friedrichs interface fluxes for every ν, laid out [q][i] with entry i at i+1/2.
pub fn llf_fluxes(s: &HydroState) -> Vec<f64> {
    let nt = s.phase.n_theta;
    let v = coupling_fields(s).v;
    s.p_nu
        .par_chunks(nt)
        .zip(v.par_chunks(nt))
        .flat_map_iter(|(pn, vq)| {
            (0..nt).map(move |i| {
                let r = (i + 1) % nt;
                let a = vq[i].abs().max(vq[r].abs());
                0.5 * (vq[i] * pn[i] + vq[r] * pn[r]) - 0.5 * a * (pn[r] - pn[i])
            })
        })
        .collect()
}

/// One explicit conservative step with the coupling frozen at the start of the step.
pub fn step_fv(s: &mut HydroState, dt: f64, cfl: f64) -> Result<()> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(invalid("cfl", "must lie in (0, 1]"));
    }
    let limit = cfl * s.phase.dtheta() / s.max_speed().max(f64::MIN_POSITIVE);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit });
    }
    let nt = s.phase.n_theta;
    let r = dt / s.phase.dtheta();
    let flux = llf_fluxes(s);
    s.p_nu.par_chunks_mut(nt).zip(flux.par_chunks(nt)).for_each(|(pn, f)| {
        for i in 0..nt {
            pn[i] -= r * (f[i] - f[(i + nt - 1) % nt]);
        }
    });
    s.t += dt;
    Ok(())
}

/// Advances to `t_end` recomputing dt = cfl·Δθ/max|V| each step. Returns the step count.
pub fn advance(s: &mut HydroState, t_end: f64, cfl: f64) -> Result<usize> {
    let mut n = 0;
    while s.t < t_end - 1e-14 * t_end.abs().max(1.0) {
        let dt = (cfl * s.phase.dtheta() / s.max_speed().max(1e-300)).min(t_end - s.t);
        step_fv(s, dt, cfl)?;
        n += 1;
    }
    s.t = t_end;
    Ok(n)
}

/// Cell averages of a fine solution onto a grid coarser by `factor`.
pub fn restrict(fine: &HydroState, factor: usize) -> Result<HydroState> {
    let nf = fine.phase.n_theta;
    if factor == 0 || nf % factor != 0 {
        return Err(invalid("factor", "must divide the fine cell count"));
    }
    let nc = nf / factor;
    let p_nu = fine
        .p_nu
        .chunks(nf)
        .flat_map(|c| c.chunks(factor).map(|b| b.iter().sum::<f64>() / factor as f64).collect::<Vec<_>>())
        .collect();
    let mut s = HydroState::new(p_nu, PhaseGrid::new(nc)?, fine.freq.clone(), fine.k)?;
    s.t = fine.t;
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub r: Vec<f64>,
    pub sup: f64,
    pub l1: f64,
    pub excluded: usize,
    /// sup_θ P·Y − inf_θ P·Y at the earlier time level.
    pub py_variation: f64,
}

fn centered(v: &[f64], dth: f64) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|i| (v[(i + 1) % n] - v[(i + n - 1) % n]) / (2.0 * dth)).collect()
}

fn check_pair(a: &HydroState, b: &HydroState, dt: f64) -> Result<()> {
    if a.phase != b.phase || a.freq != b.freq || a.k != b.k {
        return Err(Error::GridMismatch("states live on different grids".into()));
    }
    if !(dt > 0.0) {
        return Err(invalid("dt", "must be positive"));
    }
    Ok(())
}

fn summarize(r: Vec<f64>, excluded: usize, dth: f64, p: &[f64], y: &[f64]) -> Residual {
    let sup = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let l1 = r.iter().map(|v| v.abs()).sum::<f64>() * dth;
    let py: Vec<f64> = p.iter().zip(y).map(|(p, y)| p * y).collect();
    let hi = py.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = py.iter().copied().fold(f64::INFINITY, f64::min);
    Residual { r, sup, l1, excluded, py_variation: hi - lo }
}

/// P ∂_t V + P(Y+KP) ∂_θ V + ∂_θ P with V = ν + KP; forward difference in t,
/// centred differences in θ at the earlier level. Vacuum cells are set to zero and counted.
pub fn residual_hl2(prev: &HydroState, next: &HydroState, dt: f64) -> Result<Residual> {
    check_pair(prev, next, dt)?;
    let (a, b) = (coupling_fields(prev), coupling_fields(next));
    let dth = prev.phase.dtheta();
    let k = prev.k;
    let dp = centered(&a.p, dth);
    let mut excluded = 0;
    let r = (0..a.p.len())
        .map(|i| {
            if a.vacuum[i] {
                excluded += 1;
                return 0.0;
            }
            let p = a.p[i];
            let dtv = k * (b.p[i] - p) / dt;
            p * dtv + p * (a.y[i] + k * p) * k * dp[i] + dp[i]
        })
        .collect();
    Ok(summarize(r, excluded, dth, &a.p, &a.y))
}

/// ½∂_t(PY + KP²) + ½∂_θ(KYP² + (2/3)K²P³ + 2P).
pub fn residual_momentum(prev: &HydroState, next: &HydroState, dt: f64) -> Result<Residual> {
    check_pair(prev, next, dt)?;
    let (a, b) = (coupling_fields(prev), coupling_fields(next));
    let dth = prev.phase.dtheta();
    let k = prev.k;
    let dens = |c: &CouplingFields| -> Vec<f64> { c.p.iter().zip(&c.y).map(|(p, y)| p * y + k * p * p).collect() };
    let (m0, m1) = (dens(&a), dens(&b));
    let flux: Vec<f64> = a
        .p
        .iter()
        .zip(&a.y)
        .map(|(p, y)| k * y * p * p + 2.0 / 3.0 * k * k * p * p * p + 2.0 * p)
        .collect();
    let df = centered(&flux, dth);
    let r = (0..a.p.len()).map(|i| 0.5 * (m1[i] - m0[i]) / dt + 0.5 * df[i]).collect();
    Ok(summarize(r, 0, dth, &a.p, &a.y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn smooth(nt: usize, k: f64) -> HydroState {
        let fq = FrequencyQuadrature::gaussian(0.1, 0.5, 4).unwrap();
        HydroState::from_fn(PhaseGrid::new(nt).unwrap(), fq, k, |nu, t| (1.0 + 0.5 * (t - 0.3 * nu).cos()) / (2.0 * PI)).unwrap()
    }

    #[test]
    fn coupling_examples() {
        let fq = FrequencyQuadrature::gaussian(0.0, 1.0, 5).unwrap();
        let s = HydroState::from_fn(PhaseGrid::new(8).unwrap(), fq.clone(), 2.0, |_, t| 1.0 + 0.2 * t.sin()).unwrap();
        let c = coupling_fields(&s);
        assert!(c.y.iter().all(|y| y.abs() < 1e-15));
        let s = HydroState::from_fn(PhaseGrid::new(8).unwrap(), FrequencyQuadrature::point(0.7), 0.0, |_, t| 1.0 + t.sin()).unwrap();
        assert!(coupling_fields(&s).y.iter().all(|y| (y - 0.7).abs() < 1e-15));
        let s = HydroState::from_fn(PhaseGrid::new(8).unwrap(), fq.clone(), 1.5, |_, _| 1.0 / (2.0 * PI)).unwrap();
        let c = coupling_fields(&s);
        for q in 0..5 {
            for i in 0..8 {
                assert!((c.v[q * 8 + i] - fq.nodes[q] - 1.5 / (2.0 * PI)).abs() < 1e-15);
            }
        }
        let s = HydroState::from_fn(PhaseGrid::new(4).unwrap(), fq, 1.0, |_, t| if t < 1.0 { 0.0 } else { 1.0 }).unwrap();
        let c = coupling_fields(&s);
        assert!(c.vacuum[0] && c.y[0] == 0.0);
    }

    #[test]
    fn uniform_stationary_and_mass_conserved() {
        let mut s = smooth(64, 1.0);
        let m0 = s.mass_per_nu();
        for _ in 0..50 {
            let dt = 0.9 * s.phase.dtheta() / s.max_speed();
            step_fv(&mut s, dt, 0.9).unwrap();
            for (a, b) in m0.iter().zip(s.mass_per_nu()) {
                assert!((a - b).abs() <= 1e-13);
            }
            assert!(s.p_nu.iter().all(|v| *v >= 0.0));
        }
        let mut u = HydroState::from_fn(PhaseGrid::new(32).unwrap(), FrequencyQuadrature::gaussian(0.0, 1.0, 3).unwrap(), 1.0, |_, _| 1.0 / (2.0 * PI)).unwrap();
        let u0 = u.p_nu.clone();
        advance(&mut u, 1.0, 0.5).unwrap();
        assert!(u0.iter().zip(&u.p_nu).all(|(a, b)| (a - b).abs() < 1e-13));
    }

    #[test]
    fn cfl_violation_rejected() {
        let mut s = smooth(16, 0.0);
        let dt = 2.0 * s.phase.dtheta() / s.max_speed();
        assert!(matches!(step_fv(&mut s, dt, 1.0), Err(Error::Cfl { .. })));
    }

    #[test]
    fn summed_update_is_conservative_for_total_density() {
        let s = smooth(32, 1.3);
        let nt = 32;
        let f = llf_fluxes(&s);
        let g: Vec<f64> = (0..nt).map(|i| (0..4).map(|q| s.freq.weights[q] * f[q * nt + i]).sum()).collect();
        let dt = 0.5 * s.phase.dtheta() / s.max_speed();
        let mut n = s.clone();
        step_fv(&mut n, dt, 0.5).unwrap();
        let (p0, p1) = (coupling_fields(&s).p, coupling_fields(&n).p);
        let r = dt / s.phase.dtheta();
        for i in 0..nt {
            let expect = p0[i] - r * (g[i] - g[(i + nt - 1) % nt]);
            assert!((p1[i] - expect).abs() < 1e-12);
        }
        // the centred part of the summed flux is P(Y+KP)
        let c = coupling_fields(&s);
        for i in 0..nt {
            let flux: f64 = (0..4).map(|q| s.freq.weights[q] * c.v[q * nt + i] * s.p_nu[q * nt + i]).sum();
            assert!((flux - c.p[i] * (c.y[i] + s.k * c.p[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_residuals_vanish() {
        let a = HydroState::from_fn(PhaseGrid::new(16).unwrap(), FrequencyQuadrature::point(0.5), 1.0, |_, _| 0.2).unwrap();
        let mut b = a.clone();
        advance(&mut b, 0.1, 0.5).unwrap();
        assert!(residual_hl2(&a, &b, 0.1).unwrap().sup < 1e-13);
        assert!(residual_momentum(&a, &b, 0.1).unwrap().sup < 1e-13);
    }

    #[test]
    fn decoupled_residual_is_density_gradient() {
        let nt = 128;
        let a = HydroState::from_fn(PhaseGrid::new(nt).unwrap(), FrequencyQuadrature::point(0.0), 0.0, |_, t| 1.0 + 0.5 * t.sin()).unwrap();
        let b = a.clone();
        let r = residual_hl2(&a, &b, 0.01).unwrap();
        let m = residual_momentum(&a, &b, 0.01).unwrap();
        let th = a.phase.nodes();
        let err = |r: &Residual| th.iter().zip(&r.r).fold(0.0f64, |e, (t, v)| e.max((v - 0.5 * t.cos()).abs()));
        let h = a.phase.dtheta();
        assert!(err(&r) < 0.1 * h * h && err(&m) < 0.1 * h * h);
        assert!(r.py_variation == 0.0);
    }
}
