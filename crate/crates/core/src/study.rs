//! Refinement and limit studies shared by the experiment runner and the test suites.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gci::{find_zero_d, gci_pairing, project_constraint, solve_gci};
use crate::hardy::{hardy_ratio_split, muckenhoupt_bl, HardyRatio, HardyReport};
use crate::hydro::{self, HydroState};
use crate::kinetic::{self, CouplingMode, KineticConfig, KineticState, TransportScheme};
use crate::model::{
    collision_q_direct, collision_q_factored, equilibrium_build, nondimensionalize, sample_gaussian, von_mises_gaussian,
    CollisionForm, EquilibriumProfile, FrequencyQuadrature, KineticField, PhaseGrid, PhysicalParams, VelocityGrid,
};
use crate::particles::{self, InitialSpec, NoiseStream, ParticleEnsemble};
use crate::stats::{loglog_slope, sup_diff, sup_norm};

/// Default refinement ladder for w-space studies.
pub const W_LADDER: [usize; 4] = [64, 128, 256, 512];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub n: Vec<usize>,
    pub h: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
}

impl Refinement {
    fn new(n: Vec<usize>, h: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let slope = loglog_slope(&h, &values)?;
        Ok(Self { n, h, values, slope })
    }
}

/// Smooth test profile: a sum of three Gaussian bumps with a fixed seed.
pub fn smooth_profile(grid: &VelocityGrid, v: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps: Vec<(f64, f64, f64)> =
        (0..3).map(|_| (rng.gen_range(0.2..1.0), v + rng.gen_range(-2.0..2.0), rng.gen_range(0.6..1.4))).collect();
    grid.nodes()
        .iter()
        .map(|w| bumps.iter().map(|(c, mu, s)| c * (-(w - mu).powi(2) / (2.0 * s * s)).exp()).sum())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionStudy {
    pub discrepancy: Refinement,
    pub equilibrium_residual: Refinement,
}

/// ‖Q_direct − Q_factored‖_∞ on a smooth profile and ‖Q_direct(M_V)‖_∞ over a ladder of n_w on V ± 8.
pub fn collision_refinement(v: f64, ladder: &[usize], seed: u64) -> Result<CollisionStudy> {
    let mut h = Vec::new();
    let (mut d, mut e) = (Vec::new(), Vec::new());
    for &n in ladder {
        let g = VelocityGrid::centered(v, 8.0, n)?;
        let f = smooth_profile(&g, v, seed);
        d.push(sup_diff(&collision_q_direct(&f, v, &g), &collision_q_factored(&f, v, &g)?));
        e.push(sup_norm(&collision_q_direct(&sample_gaussian(v, &g), v, &g)));
        h.push(g.dw());
    }
    Ok(CollisionStudy {
        discrepancy: Refinement::new(ladder.to_vec(), h.clone(), d)?,
        equilibrium_residual: Refinement::new(ladder.to_vec(), h, e)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GciStudy {
    pub sup_error: Refinement,
    pub constraint_residual: Vec<f64>,
    pub interior_half_width: f64,
}

/// Interior sup error of χ against w − V over a ladder of n_w on V ± 8.
pub fn gci_refinement(v: f64, ladder: &[usize], interior_half_width: f64) -> Result<GciStudy> {
    let mut h = Vec::new();
    let (mut e, mut c) = (Vec::new(), Vec::new());
    for &n in ladder {
        let g = VelocityGrid::centered(v, 8.0, n)?;
        let s = solve_gci(v, &g)?;
        e.push(s.sup_error(interior_half_width));
        c.push(s.constraint_residual);
        h.push(g.dw());
    }
    Ok(GciStudy { sup_error: Refinement::new(ladder.to_vec(), h, e)?, constraint_residual: c, interior_half_width })
}

/// Randomized constraint-satisfying (w, ν) field with n_ν Gauss–Hermite frequency nodes.
pub fn random_constrained_field(grid: &VelocityGrid, v: f64, n_nu: usize, seed: u64) -> Result<KineticField> {
    let fq = FrequencyQuadrature::gaussian(0.0, 1.0, n_nu)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<Vec<(f64, f64, f64)>> = (0..n_nu)
        .map(|_| (0..3).map(|_| (rng.gen_range(-1.0..1.0), v + rng.gen_range(-2.0..2.0), rng.gen_range(0.5..1.5))).collect())
        .collect();
    let mut f = KineticField::from_fn(PhaseGrid::new(1)?, *grid, fq, |q, _, j| {
        let w = grid.node(j);
        params[q].iter().map(|(c, mu, s)| c * (-(w - mu).powi(2) / (2.0 * s * s)).exp()).sum()
    });
    project_constraint(&mut f, v);
    Ok(f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceCase {
    pub seed: u64,
    pub beta: f64,
    pub n: Vec<usize>,
    /// Pairing of the factored Q with the numerical χ.
    pub pairing: Vec<f64>,
    /// Rounding scale Σ|Q(f) ψ| g Δw · n_w · ε for each level.
    pub rounding_floor: Vec<f64>,
    /// Pairing of the direct-form Q with the numerical χ.
    pub pairing_direct: Vec<f64>,
    pub constraint: Vec<f64>,
}

pub fn gci_invariance_case(v: f64, ladder: &[usize], n_nu: usize, seed: u64) -> Result<InvarianceCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let beta = rng.gen_range(-2.0..2.0);
    let phi: Vec<f64> = (0..n_nu).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut case = InvarianceCase {
        seed,
        beta,
        n: ladder.to_vec(),
        pairing: vec![],
        rounding_floor: vec![],
        pairing_direct: vec![],
        constraint: vec![],
    };
    for &n in ladder {
        let g = VelocityGrid::centered(v, 8.0, n)?;
        let f = random_constrained_field(&g, v, n_nu, seed)?;
        let chi = solve_gci(v, &g)?;
        let p = gci_pairing(beta, &phi, &chi, &f, CollisionForm::Factored)?;
        let pd = gci_pairing(beta, &phi, &chi, &f, CollisionForm::Direct)?;
        let mut mag = 0.0;
        for q in 0..n_nu {
            let qf = collision_q_factored(f.column(q, 0), v, &g)?;
            mag += f.freq.weights[q] * qf.iter().zip(&chi.chi).map(|(a, c)| (a * (beta * c + phi[q])).abs()).sum::<f64>();
        }
        case.pairing.push(p.pairing);
        case.rounding_floor.push(mag * g.dw() * n as f64 * f64::EPSILON);
        case.pairing_direct.push(pd.pairing);
        case.constraint.push(p.constraint);
    }
    Ok(case)
}

/// Parameters of the kinetic-to-hydrodynamic limit study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpsSweepSetup {
    pub physical: PhysicalParams,
    pub epsilons: Vec<f64>,
    pub n_theta: usize,
    pub n_w: usize,
    pub n_nu: usize,
    pub nu_mean: f64,
    pub nu_std: f64,
    pub t_end: f64,
    pub amplitude: f64,
    pub phase_shift: f64,
    pub w_margin: f64,
    pub kinetic: KineticConfig,
    pub hydro_cfl: f64,
    /// The hydrodynamic reference is computed on n_theta × refine cells.
    pub hydro_refine: usize,
}

impl Default for EpsSweepSetup {
    fn default() -> Self {
        Self {
            physical: PhysicalParams { m: 0.25, k: 1.0, sigma: 1.0 },
            epsilons: vec![0.2, 0.1, 0.05, 0.025],
            n_theta: 64,
            n_w: 64,
            n_nu: 8,
            nu_mean: 0.0,
            nu_std: 0.25,
            t_end: 0.5,
            amplitude: 0.5,
            phase_shift: 0.3,
            w_margin: 8.5,
            kinetic: KineticConfig {
                cfl: 0.25,
                coupling_mode: CouplingMode::Local,
                collision: CollisionForm::Factored,
                transport: TransportScheme::LaxWendroff,
            },
            hydro_cfl: 0.5,
            hydro_refine: 32,
        }
    }
}

impl EpsSweepSetup {
    pub fn initial_density(&self, nu: f64, theta: f64) -> f64 {
        (1.0 + self.amplitude * (theta - self.phase_shift * nu).cos()) / (2.0 * PI)
    }

    pub fn frequency(&self) -> Result<FrequencyQuadrature> {
        FrequencyQuadrature::gaussian(self.nu_mean, self.nu_std, self.n_nu)
    }

    pub fn hydro_initial(&self, n_theta: usize) -> Result<HydroState> {
        HydroState::from_fn(PhaseGrid::new(n_theta)?, self.frequency()?, self.physical.k, |nu, t| self.initial_density(nu, t))
    }

    /// Fine-grid LLF solution restricted to the kinetic phase grid.
    pub fn hydro_reference(&self) -> Result<HydroState> {
        let mut s = self.hydro_initial(self.n_theta * self.hydro_refine)?;
        hydro::advance(&mut s, self.t_end, self.hydro_cfl)?;
        hydro::restrict(&s, self.hydro_refine)
    }

    pub fn kinetic_initial(&self, epsilon: f64) -> Result<KineticState> {
        let ph = PhaseGrid::new(self.n_theta)?;
        let fq = self.frequency()?;
        let prof = EquilibriumProfile::from_fn(&ph, &fq, self.physical.k, |nu, t| self.initial_density(nu, t))?;
        let (lo, hi) = prof.v_range();
        let vg = VelocityGrid::covering(lo, hi, self.w_margin, self.n_w)?;
        let f = equilibrium_build(&prof, &ph, &vg, &fq)?;
        KineticState::new(f, nondimensionalize(&self.physical, epsilon)?, self.physical.k)
    }

    pub fn kinetic_final(&self, epsilon: f64) -> Result<KineticState> {
        let mut s = self.kinetic_initial(epsilon)?;
        kinetic::advance(&mut s, self.t_end, &self.kinetic)?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsSweepResult {
    pub epsilons: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
    pub mass_drift: Vec<f64>,
    pub min_value: Vec<f64>,
    /// max |P_64 − P_ref| of the coarse hydro solver, for scale.
    pub hydro_coarse_error: f64,
}

pub fn eps_sweep(setup: &EpsSweepSetup) -> Result<EpsSweepResult> {
    let reference = setup.hydro_reference()?;
    let mut coarse = setup.hydro_initial(setup.n_theta)?;
    hydro::advance(&mut coarse, setup.t_end, setup.hydro_cfl)?;
    let hydro_coarse_error = sup_diff(&coarse.p_nu, &reference.p_nu);
    let runs: Vec<Result<(f64, f64, f64)>> = setup
        .epsilons
        .par_iter()
        .map(|&eps| {
            let s0 = setup.kinetic_initial(eps)?;
            let m0 = s0.field.mass_per_nu();
            let mut s = s0;
            kinetic::advance(&mut s, setup.t_end, &setup.kinetic)?;
            let m = kinetic::moments(&s);
            let drift = m0.iter().zip(s.field.mass_per_nu()).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            Ok((sup_diff(&m.p_eps, &reference.p_nu), drift, s.field.min_value()))
        })
        .collect();
    let mut out = EpsSweepResult {
        epsilons: setup.epsilons.clone(),
        errors: vec![],
        slope: f64::NAN,
        mass_drift: vec![],
        min_value: vec![],
        hydro_coarse_error,
    };
    for r in runs {
        let (e, d, m) = r?;
        out.errors.push(e);
        out.mass_drift.push(d);
        out.min_value.push(m);
    }
    out.slope = loglog_slope(&out.epsilons, &out.errors)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroStudy {
    pub advection_l1: Refinement,
    pub max_mass_drift_per_step: f64,
    pub uniform_deviation: f64,
    /// cmoment residual on K = 0 data with ν = ±√2, where the continuum residual vanishes.
    pub momentum_residual: Refinement,
    /// cmoment residual of a coupled K = 1 run; its limit is the nonzero continuum defect.
    pub coupled_momentum_sup: Vec<f64>,
    pub coupled_momentum_l1: Vec<f64>,
    pub coupled_hl2_sup: Vec<f64>,
    pub coupled_py_variation: Vec<f64>,
}

fn advect_profile(nu: f64, t: f64) -> f64 {
    (1.0 + 0.5 * (t - 0.2 * nu).sin()) / (2.0 * PI)
}

/// Cell average of the advected profile over [a, b].
fn advect_average(nu: f64, a: f64, b: f64, shift: f64) -> f64 {
    let (a, b) = (a - shift, b - shift);
    let c = 0.5 * ((a - 0.2 * nu).cos() - (b - 0.2 * nu).cos()) / (b - a);
    (1.0 + c) / (2.0 * PI)
}

/// K = 0 advection convergence, conservation, stationarity and momentum residual refinement.
pub fn hydro_refinement(ladder: &[usize], t_end: f64, cfl: f64) -> Result<HydroStudy> {
    let fq = FrequencyQuadrature::gaussian(0.5, 0.5, 4)?;
    let mut l1 = Vec::new();
    let mut h = Vec::new();
    let mut drift = 0.0f64;
    for &n in ladder {
        let ph = PhaseGrid::new(n)?;
        let dth = ph.dtheta();
        let p0: Vec<f64> = fq
            .nodes
            .iter()
            .flat_map(|nu| (0..n).map(move |i| advect_average(*nu, i as f64 * dth, (i + 1) as f64 * dth, 0.0)))
            .collect();
        let mut s = HydroState::new(p0, ph, fq.clone(), 0.0)?;
        let mut m_prev = s.mass_per_nu();
        while s.t < t_end - 1e-14 {
            let dt = (cfl * dth / s.max_speed()).min(t_end - s.t);
            hydro::step_fv(&mut s, dt, cfl)?;
            let m = s.mass_per_nu();
            drift = drift.max(m.iter().zip(&m_prev).fold(0.0f64, |a, (x, y)| a.max((x - y).abs())));
            m_prev = m;
        }
        let mut err = 0.0;
        for (q, nu) in fq.nodes.iter().enumerate() {
            for i in 0..n {
                let exact = advect_average(*nu, i as f64 * dth, (i + 1) as f64 * dth, nu * t_end);
                err += fq.weights[q] * (s.p_nu[q * n + i] - exact).abs() * dth;
            }
        }
        l1.push(err);
        h.push(dth);
    }
    let mut u = HydroState::from_fn(PhaseGrid::new(64)?, fq.clone(), 1.0, |_, _| 1.0 / (2.0 * PI))?;
    let u0 = u.p_nu.clone();
    hydro::advance(&mut u, t_end, cfl)?;
    let uniform_deviation = sup_diff(&u0, &u.p_nu);

    let balanced = FrequencyQuadrature::new(vec![-2f64.sqrt(), 2f64.sqrt()], vec![0.5, 0.5])?;
    let mut bal = Vec::new();
    let (mut rs, mut rl, mut r2, mut pv) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for &n in ladder {
        let mut s = HydroState::from_fn(PhaseGrid::new(n)?, balanced.clone(), 0.0, |nu, t| advect_profile(nu, t))?;
        bal.push(one_step_residual(&mut s, cfl)?.0.sup);
        let mut s = HydroState::from_fn(PhaseGrid::new(n)?, fq.clone(), 1.0, |nu, t| advect_profile(nu, t))?;
        let (r, hl2) = one_step_residual(&mut s, cfl)?;
        rs.push(r.sup);
        rl.push(r.l1);
        pv.push(r.py_variation);
        r2.push(hl2.sup);
    }
    let h: Vec<f64> = ladder.iter().map(|n| 2.0 * PI / *n as f64).collect();
    Ok(HydroStudy {
        advection_l1: Refinement::new(ladder.to_vec(), h.clone(), l1)?,
        max_mass_drift_per_step: drift,
        uniform_deviation,
        momentum_residual: Refinement::new(ladder.to_vec(), h, bal)?,
        coupled_momentum_sup: rs,
        coupled_momentum_l1: rl,
        coupled_hl2_sup: r2,
        coupled_py_variation: pv,
    })
}

/// Advance to t = 0.25, take one more step and evaluate the momentum residuals over it.
fn one_step_residual(s: &mut HydroState, cfl: f64) -> Result<(hydro::Residual, hydro::Residual)> {
    hydro::advance(s, 0.25, cfl)?;
    let prev = s.clone();
    let dt = cfl * s.phase.dtheta() / s.max_speed();
    hydro::step_fv(s, dt, cfl)?;
    Ok((hydro::residual_momentum(&prev, s, dt)?, hydro::residual_hl2(&prev, s, dt)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationStudy {
    pub l1: f64,
    pub marginal: Vec<f64>,
    pub reference: Vec<f64>,
    pub grid: VelocityGrid,
    pub order: Vec<particles::OrderRecord>,
}

/// Homogeneous K = 0 ensemble relaxed from w = 0; w-marginal compared with M_ν.
pub fn particle_relaxation(n: usize, nu: f64, t_end: f64, dt: f64, seed: u64, record_every: usize) -> Result<RelaxationStudy> {
    let p = PhysicalParams::new(1.0, 0.0, 1.0)?;
    let spec = InitialSpec::new("uniform-phase", "delta-w(0)", &format!("point({nu})"))?;
    let mut e: ParticleEnsemble = particles::sample_initial(&spec, n, seed)?;
    let ns = NoiseStream::new(seed);
    let steps = (t_end / dt).round() as usize;
    let mut order = vec![particles::order_record(&e)];
    for k in 0..steps {
        particles::step(&mut e, dt, &p, &ns)?;
        if record_every > 0 && (k + 1) % record_every == 0 {
            order.push(particles::order_record(&e));
        }
    }
    let grid = VelocityGrid::centered(nu, 6.0, 61)?;
    let marginal = particles::w_marginal(&e, &grid);
    let reference = sample_gaussian(nu, &grid);
    let l1 = marginal.iter().zip(&reference).map(|(a, b)| (a - b).abs()).sum::<f64>() * grid.dw();
    Ok(RelaxationStudy { l1, marginal, reference, grid, order })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyCase {
    pub d: f64,
    pub ratio: HardyRatio,
    pub report: HardyReport,
}

/// Randomized anchored test functions u = φ/M_V with φ a mean-zero sum of three Gaussian bumps
/// (widths below 1 so that u stays in the weighted spaces); the anchor is the zero of φ nearest V.
pub fn hardy_ratio_suite(v: f64, count: usize, seed: u64, n_w: usize) -> Result<Vec<HardyCase>> {
    let g = VelocityGrid::centered(v, 8.0, n_w)?;
    let w = g.nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let bumps: Vec<(f64, f64, f64)> =
            (0..3).map(|_| (rng.gen_range(-1.0..1.0), v + rng.gen_range(-1.5..1.5), rng.gen_range(0.4..0.9))).collect();
        let bump = |x: f64, (c, m, s): (f64, f64, f64)| c * (-(x - m).powi(2) / (2.0 * s * s)).exp();
        let raw: Vec<f64> = w.iter().map(|x| bumps.iter().map(|b| bump(*x, *b)).sum()).collect();
        // the mean is removed along the first bump so φ keeps its decay
        let (_, m0, s0) = bumps[0];
        let shape: Vec<f64> = w.iter().map(|x| bump(*x, (1.0, m0, s0))).collect();
        let mean = raw.iter().sum::<f64>() / shape.iter().sum::<f64>();
        let phi: Vec<f64> = raw.iter().zip(&shape).map(|(r, s)| r - mean * s).collect();
        let d = find_zero_d(&phi, v, &g)?;
        let u: Vec<f64> = phi.iter().zip(&w).map(|(p, x)| p / von_mises_gaussian(*x, v)).collect();
        let ratio = hardy_ratio_split(&u, v, d, &g)?;
        out.push(HardyCase { d, ratio, report: muckenhoupt_bl(d, v)? });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxRecord {
    pub t: f64,
    /// Σ_q ω_q Σ_{i,j} |f − ρ M_V| Δθ Δw.
    pub distance: f64,
    pub mean_flux: f64,
}

fn local_equilibrium_distance(s: &KineticState, mode: CouplingMode) -> Result<(f64, f64)> {
    let f = &s.field;
    let v = s.velocity_field(mode)?;
    let rho = f.density();
    let (dth, dw) = (f.phase.dtheta(), f.velocity.dw());
    let mut dist = 0.0;
    for q in 0..f.n_nu() {
        let mut acc = 0.0;
        for i in 0..f.n_theta() {
            let k = q * f.n_theta() + i;
            acc += f.column(q, i).iter().enumerate().map(|(j, x)| (x - rho[k] * von_mises_gaussian(f.velocity.node(j), v[k])).abs()).sum::<f64>();
        }
        dist += f.freq.weights[q] * acc * dth * dw;
    }
    let phi = crate::model::mean_flux_phi(f);
    Ok((dist, phi.iter().sum::<f64>() / phi.len() as f64))
}

/// Spatially homogeneous relaxation from a narrow Gaussian in w toward the local equilibrium.
pub fn equilibrium_relax(
    physical: &PhysicalParams,
    epsilon: f64,
    freq: FrequencyQuadrature,
    n_w: usize,
    t_end: f64,
    cfg: &KineticConfig,
) -> Result<Vec<RelaxRecord>> {
    let ph = PhaseGrid::new(4)?;
    let vg = VelocityGrid::covering(freq.min_node() - 2.0, freq.max_node() + 2.0 + physical.k, 8.0, n_w)?;
    let f = KineticField::from_fn(ph, vg, freq, |_, _, j| {
        let w = vg.node(j);
        (-(w * w) / (2.0 * 0.25)).exp() / (2.0 * PI * 0.25).sqrt() / (2.0 * PI)
    });
    let mut s = KineticState::new(f, nondimensionalize(physical, epsilon)?, physical.k)?;
    let dt = s.max_dt(cfg.cfl).min(t_end / 50.0);
    let mut rec = Vec::new();
    let (d, m) = local_equilibrium_distance(&s, cfg.coupling_mode)?;
    rec.push(RelaxRecord { t: 0.0, distance: d, mean_flux: m });
    while s.t < t_end - 1e-12 {
        let h = dt.min(t_end - s.t);
        kinetic::step(&mut s, h, cfg)?;
        let (d, m) = local_equilibrium_distance(&s, cfg.coupling_mode)?;
        rec.push(RelaxRecord { t: s.t, distance: d, mean_flux: m });
    }
    Ok(rec)
}
