//! Splitting solver for εα(∂_t f + w ∂_θ f) = Q(f).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::collision::{implicit_relax, ImplicitWorkspace};
use crate::model::coupling::nonlocal_j_eps_density;
use crate::model::{mean_flux_phi, CollisionForm, KineticField, ScaledParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMode {
    /// V = ν + KΦ.
    #[default]
    Local,
    /// V = ν + K J^ε.
    Nonlocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportScheme {
    /// First-order upwind; monotone.
    #[default]
    Upwind,
    /// Second-order Lax–Wendroff; not monotone.
    LaxWendroff,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KineticConfig {
    pub cfl: f64,
    pub coupling_mode: CouplingMode,
    pub collision: CollisionForm,
    pub transport: TransportScheme,
}

impl Default for KineticConfig {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            coupling_mode: CouplingMode::Local,
            collision: CollisionForm::Factored,
            transport: TransportScheme::Upwind,
        }
    }
}

impl KineticConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(invalid("cfl", format!("must lie in (0, 1], got {}", self.cfl)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticState {
    pub field: KineticField,
    pub t: f64,
    pub scaled: ScaledParams,
    /// Dimensionless coupling strength.
    pub k: f64,
}

impl KineticState {
    pub fn new(field: KineticField, scaled: ScaledParams, k: f64) -> Result<Self> {
        if field.min_value() < 0.0 {
            return Err(invalid("field", "initial density must be nonnegative"));
        }
        if !(k >= 0.0) {
            return Err(invalid("K", "must be nonnegative"));
        }
        Ok(Self { field, t: 0.0, scaled, k })
    }

    /// Largest admissible step for the given Courant number.
    pub fn max_dt(&self, cfl: f64) -> f64 {
        cfl * self.field.phase.dtheta() / self.field.velocity.max_abs()
    }

    /// Coupling field Φ or J^ε on the phase grid.
    pub fn coupling(&self, mode: CouplingMode) -> Result<Vec<f64>> {
        let phi = mean_flux_phi(&self.field);
        match mode {
            CouplingMode::Local => Ok(phi),
            CouplingMode::Nonlocal => nonlocal_j_eps_density(&phi, &self.field.phase, self.scaled.epsilon),
        }
    }

    /// V[q][i] = ν_q + K·coupling[i].
    pub fn velocity_field(&self, mode: CouplingMode) -> Result<Vec<f64>> {
        let c = self.coupling(mode)?;
        Ok(self
            .field
            .freq
            .nodes
            .iter()
            .flat_map(|nu| c.iter().map(move |ci| nu + self.k * ci))
            .collect())
    }
}

fn transport_block(block: &mut [f64], nt: usize, courant: &[f64], scheme: TransportScheme, flux: &mut Vec<f64>) {
    let nw = courant.len();
    flux.resize(nt * nw, 0.0);
    for i in 0..nt {
        let ip = (i + 1) % nt;
        for j in 0..nw {
            let c = courant[j];
            let (g, gr) = (block[i * nw + j], block[ip * nw + j]);
            flux[i * nw + j] = match scheme {
                TransportScheme::Upwind => {
                    if c >= 0.0 {
                        c * g
                    } else {
                        c * gr
                    }
                }
                TransportScheme::LaxWendroff => 0.5 * c * (g + gr) - 0.5 * c * c * (gr - g),
            };
        }
    }
    for i in 0..nt {
        let im = (i + nt - 1) % nt;
        for j in 0..nw {
            block[i * nw + j] -= flux[i * nw + j] - flux[im * nw + j];
        }
    }
}

/// Conservative θ-advection at speed w_j over a time dt.
pub fn transport_substep(s: &mut KineticState, dt: f64, cfg: &KineticConfig) -> Result<()> {
    cfg.validate()?;
    let limit = s.max_dt(cfg.cfl);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit });
    }
    let nt = s.field.n_theta();
    let dth = s.field.phase.dtheta();
    let courant: Vec<f64> = s.field.velocity.nodes().iter().map(|w| w * dt / dth).collect();
    let block = nt * s.field.n_w();
    s.field
        .data
        .par_chunks_mut(block)
        .for_each_init(Vec::new, |flux, b| transport_block(b, nt, &courant, cfg.transport, flux));
    Ok(())
}

/// Backward-Euler relaxation of every (ν, θ) column towards M_V with rate 1/(εα).
/// `v` is laid out as [q][i].
pub fn collision_substep_with(s: &mut KineticState, dt: f64, v: &[f64], form: CollisionForm) -> Result<()> {
    let lambda = dt / (s.scaled.epsilon * s.scaled.alpha);
    let grid = s.field.velocity;
    let nw = grid.n_w;
    s.field
        .data
        .par_chunks_mut(nw)
        .zip(v.par_iter())
        .try_for_each_init(ImplicitWorkspace::default, |ws, (col, vq)| {
            implicit_relax(form, col, *vq, &grid, lambda, ws)
        })
}

pub fn collision_substep(s: &mut KineticState, dt: f64, cfg: &KineticConfig) -> Result<()> {
    let v = s.velocity_field(cfg.coupling_mode)?;
    collision_substep_with(s, dt, &v, cfg.collision)
}

/// Strang step: transport(dt/2), collision(dt) with refreshed coupling, transport(dt/2).
pub fn step(s: &mut KineticState, dt: f64, cfg: &KineticConfig) -> Result<()> {
    let limit = s.max_dt(cfg.cfl);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit });
    }
    transport_substep(s, 0.5 * dt, cfg)?;
    collision_substep(s, dt, cfg)?;
    transport_substep(s, 0.5 * dt, cfg)?;
    s.t += dt;
    Ok(())
}

/// Advances to `t_end` with uniform steps no larger than the CFL limit. Returns the step count.
pub fn advance(s: &mut KineticState, t_end: f64, cfg: &KineticConfig) -> Result<usize> {
    let span = t_end - s.t;
    if span <= 0.0 {
        return Ok(0);
    }
    let n = (span / s.max_dt(cfg.cfl)).ceil().max(1.0) as usize;
    let dt = span / n as f64;
    for _ in 0..n {
        step(s, dt, cfg)?;
    }
    s.t = t_end;
    Ok(n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticMoments {
    /// Σ_j f Δw, laid out [q][i].
    pub p_eps: Vec<f64>,
    /// Σ_j w_j f Δw, laid out [q][i].
    pub flux_eps: Vec<f64>,
}

pub fn moments(s: &KineticState) -> KineticMoments {
    let g = &s.field.velocity;
    let (dw, w) = (g.dw(), g.nodes());
    let (p_eps, flux_eps) = s
        .field
        .data
        .par_chunks(g.n_w)
        .map(|c| {
            let m0: f64 = c.iter().sum();
            let m1: f64 = c.iter().zip(&w).map(|(f, w)| f * w).sum();
            (m0 * dw, m1 * dw)
        })
        .unzip();
    KineticMoments { p_eps, flux_eps }
}

/// Sample excess kurtosis of the ν-averaged w-marginal.
pub fn w_excess_kurtosis(s: &KineticState) -> f64 {
    let f = &s.field;
    let w = f.velocity.nodes();
    let mut marg = vec![0.0; f.n_w()];
    for q in 0..f.n_nu() {
        for i in 0..f.n_theta() {
            for (m, v) in marg.iter_mut().zip(f.column(q, i)) {
                *m += f.freq.weights[q] * v;
            }
        }
    }
    let m0: f64 = marg.iter().sum();
    let mu: f64 = marg.iter().zip(&w).map(|(m, w)| m * w).sum::<f64>() / m0;
    let c = |k: i32| marg.iter().zip(&w).map(|(m, w)| m * (w - mu).powi(k)).sum::<f64>() / m0;
    c(4) / c(2).powi(2) - 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{equilibrium_build, EquilibriumProfile, FrequencyQuadrature, PhaseGrid, VelocityGrid};
    use std::f64::consts::PI;

    fn scaled(eps: f64) -> ScaledParams {
        ScaledParams { w0: 1.0, t0: 1.0, alpha: 1.0, epsilon: eps }
    }

    fn uniform_eq(k: f64) -> KineticState {
        let ph = PhaseGrid::new(16).unwrap();
        let fq = FrequencyQuadrature::gaussian(0.0, 0.5, 4).unwrap();
        let prof = EquilibriumProfile::uniform(&ph, &fq, k);
        let (lo, hi) = prof.v_range();
        let vg = VelocityGrid::covering(lo, hi, 8.5, 48).unwrap();
        KineticState::new(equilibrium_build(&prof, &ph, &vg, &fq).unwrap(), scaled(0.1), k).unwrap()
    }

    #[test]
    fn uniform_field_unchanged_by_transport() {
        let mut s = uniform_eq(1.0);
        let before = s.field.data.clone();
        let cfg = KineticConfig { cfl: 0.9, ..Default::default() };
        let dt = s.max_dt(cfg.cfl);
        transport_substep(&mut s, dt, &cfg).unwrap();
        for (a, b) in before.iter().zip(&s.field.data) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_cfl_shift() {
        let ph = PhaseGrid::new(8).unwrap();
        let vg = VelocityGrid::new(-2.0, 2.0, 3).unwrap();
        let fq = FrequencyQuadrature::point(0.0);
        let f = KineticField::from_fn(ph, vg, fq, |_, i, j| if i == 2 && j == 2 { 1.0 } else { 0.0 });
        let mut s = KineticState::new(f, scaled(1.0), 0.0).unwrap();
        let dt = ph.dtheta() / 2.0;
        for scheme in [TransportScheme::Upwind, TransportScheme::LaxWendroff] {
            let mut t = s.clone();
            let cfg = KineticConfig { cfl: 1.0, transport: scheme, ..Default::default() };
            transport_substep(&mut t, dt, &cfg).unwrap();
            assert!((t.field.get(0, 3, 2) - 1.0).abs() < 1e-15);
            assert!((t.field.get(0, 2, 2)).abs() < 1e-15);
        }
        let cfg = KineticConfig { cfl: 1.0, ..Default::default() };
        assert!(matches!(transport_substep(&mut s, 1.01 * dt, &cfg), Err(Error::Cfl { .. })));
    }

    #[test]
    fn transport_conserves_mass() {
        let ph = PhaseGrid::new(32).unwrap();
        let vg = VelocityGrid::new(-3.0, 3.0, 21).unwrap();
        let fq = FrequencyQuadrature::point(0.0);
        let f = KineticField::from_fn(ph, vg, fq, |_, i, j| 1.0 + ((i * 7 + j * 3) % 5) as f64);
        let mut s = KineticState::new(f, scaled(1.0), 0.0).unwrap();
        let m0 = s.field.mass_per_nu()[0];
        let dt = s.max_dt(0.8);
        for scheme in [TransportScheme::Upwind, TransportScheme::LaxWendroff] {
            transport_substep(&mut s, dt, &KineticConfig { transport: scheme, cfl: 0.8, ..Default::default() }).unwrap();
            assert!(((s.field.mass_per_nu()[0] - m0) / m0).abs() < 1e-14);
        }
    }

    #[test]
    fn equilibrium_is_stationary() {
        let mut s = uniform_eq(2.0);
        let f0 = s.field.data.clone();
        let cfg = KineticConfig::default();
        let dt = s.max_dt(cfg.cfl);
        for _ in 0..100 {
            step(&mut s, dt, &cfg).unwrap();
        }
        let err = f0.iter().zip(&s.field.data).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn collision_conserves_column_mass() {
        let ph = PhaseGrid::new(4).unwrap();
        let vg = VelocityGrid::centered(0.0, 9.0, 40).unwrap();
        let fq = FrequencyQuadrature::new(vec![-0.5, 0.5], vec![1.0, 1.0]).unwrap();
        let f = KineticField::from_fn(ph, vg, fq, |q, i, j| ((q + i + j) % 3) as f64 + 0.1);
        let mut s = KineticState::new(f, scaled(0.01), 1.0).unwrap();
        let before = s.field.density();
        collision_substep(&mut s, 0.1, &KineticConfig::default()).unwrap();
        for (a, b) in before.iter().zip(s.field.density()) {
            assert!((a - b).abs() < 1e-12 * a);
        }
        assert!(s.field.min_value() >= 0.0);
    }

    #[test]
    fn stiff_collision_reaches_maxwellian() {
        let ph = PhaseGrid::new(4).unwrap();
        let vg = VelocityGrid::centered(0.0, 9.0, 91).unwrap();
        let fq = FrequencyQuadrature::point(0.3);
        let f = KineticField::from_fn(ph, vg, fq, |_, _, j| if (30..40).contains(&j) { 1.0 } else { 0.0 });
        let mut errs = Vec::new();
        for eps in [1e-2, 1e-3] {
            let mut s = KineticState::new(f.clone(), scaled(eps), 0.0).unwrap();
            collision_substep(&mut s, 0.01, &KineticConfig::default()).unwrap();
            let p = s.field.density()[0];
            let dw = vg.dw();
            let l1: f64 = (0..91)
                .map(|j| (s.field.get(0, 0, j) - p * crate::model::von_mises_gaussian(vg.node(j), 0.3)).abs() * dw)
                .sum();
            errs.push(l1);
        }
        assert!(errs[1] < errs[0] / 5.0, "{errs:?}");
    }

    #[test]
    fn moments_of_equilibrium() {
        let s = uniform_eq(1.0);
        let m = moments(&s);
        let v = s.velocity_field(CouplingMode::Local).unwrap();
        for c in 0..m.p_eps.len() {
            assert!((m.p_eps[c] - 1.0 / (2.0 * PI)).abs() < 1e-8);
            assert!((m.flux_eps[c] - v[c] * m.p_eps[c]).abs() < 1e-8);
        }
        let mut z = s.clone();
        z.field.scale(0.0);
        assert!(moments(&z).p_eps.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn excess_kurtosis_of_gaussian_is_zero() {
        let s = uniform_eq(0.0);
        let g = FrequencyQuadrature::gaussian(0.0, 0.5, 4).unwrap();
        assert_eq!(s.field.freq, g);
        assert!(w_excess_kurtosis(&s).abs() < 1e-6);
    }
}
