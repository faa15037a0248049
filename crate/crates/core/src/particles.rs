//! N-oscillator Euler–Maruyama integrator and ensemble statistics.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{FrequencyQuadrature, KineticField, PhaseGrid, PhysicalParams, VelocityGrid};

const TWO_PI: f64 = 2.0 * PI;
const INIT_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
/// Words reserved per oscillator per step in the noise stream.
const WORDS_PER_STEP: u128 = 1 << 16;

#[inline]
pub fn wrap_phase(theta: f64) -> f64 {
    let t = theta.rem_euclid(TWO_PI);
    if t >= TWO_PI {
        0.0
    } else {
        t
    }
}

/// Angle difference mapped to (−π, π].
#[inline]
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TWO_PI);
    if d > PI {
        d - TWO_PI
    } else {
        d
    }
}

/// Family descriptors. String forms: `uniform-phase`, `gaussian-phase(mu,s)`,
/// `delta-w(w)`, `gaussian-w(mu,s)`, `equilibrium-w` (w = ν + N(0,1) in the
/// dimensionless scaling), `point(nu)`, `normal(mu,s)`, `uniform(a,b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    UniformPhase,
    GaussianPhase { mu: f64, s: f64 },
    DeltaW { w: f64 },
    GaussianW { mu: f64, s: f64 },
    EquilibriumW,
    Point { nu: f64 },
    Normal { mu: f64, s: f64 },
    Uniform { a: f64, b: f64 },
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(k) if s.ends_with(')') => (&s[..k], &s[k + 1..s.len() - 1]),
            _ => (s, ""),
        };
        let nums: Vec<f64> = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| a.trim().parse::<f64>().map_err(|_| Error::UnknownFamily(s.to_string())))
                .collect::<Result<_>>()?
        };
        let arity = |n: usize| if nums.len() == n { Ok(()) } else { Err(Error::UnknownFamily(s.to_string())) };
        let f = match name.trim() {
            "uniform-phase" => {
                arity(0)?;
                Family::UniformPhase
            }
            "gaussian-phase" => {
                arity(2)?;
                Family::GaussianPhase { mu: nums[0], s: nums[1] }
            }
            "delta-w" => {
                arity(1)?;
                Family::DeltaW { w: nums[0] }
            }
            "gaussian-w" => {
                arity(2)?;
                Family::GaussianW { mu: nums[0], s: nums[1] }
            }
            "equilibrium-w" => {
                arity(0)?;
                Family::EquilibriumW
            }
            "point" => {
                arity(1)?;
                Family::Point { nu: nums[0] }
            }
            "normal" => {
                arity(2)?;
                Family::Normal { mu: nums[0], s: nums[1] }
            }
            "uniform" => {
                arity(2)?;
                Family::Uniform { a: nums[0], b: nums[1] }
            }
            _ => return Err(Error::UnknownFamily(s.to_string())),
        };
        match f {
            Family::GaussianPhase { s, .. } | Family::GaussianW { s, .. } | Family::Normal { s, .. } if !(s >= 0.0) => {
                Err(invalid("family", format!("negative spread in `{s}`")))
            }
            Family::Uniform { a, b } if !(b > a) => Err(invalid("family", "uniform(a,b) needs a < b")),
            f => Ok(f),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::UniformPhase => write!(f, "uniform-phase"),
            Family::GaussianPhase { mu, s } => write!(f, "gaussian-phase({mu},{s})"),
            Family::DeltaW { w } => write!(f, "delta-w({w})"),
            Family::GaussianW { mu, s } => write!(f, "gaussian-w({mu},{s})"),
            Family::EquilibriumW => write!(f, "equilibrium-w"),
            Family::Point { nu } => write!(f, "point({nu})"),
            Family::Normal { mu, s } => write!(f, "normal({mu},{s})"),
            Family::Uniform { a, b } => write!(f, "uniform({a},{b})"),
        }
    }
}

impl Serialize for Family {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Family {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Initial distribution of (θ, w, ν).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub phase: Family,
    pub velocity: Family,
    pub frequency: Family,
}

impl InitialSpec {
    pub fn new(phase: &str, velocity: &str, frequency: &str) -> Result<Self> {
        let spec = Self { phase: phase.parse()?, velocity: velocity.parse()?, frequency: frequency.parse()? };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.phase, Family::UniformPhase | Family::GaussianPhase { .. }) {
            return Err(Error::UnknownFamily(format!("{} is not a phase family", self.phase)));
        }
        if !matches!(self.velocity, Family::DeltaW { .. } | Family::GaussianW { .. } | Family::EquilibriumW) {
            return Err(Error::UnknownFamily(format!("{} is not a velocity family", self.velocity)));
        }
        if !matches!(self.frequency, Family::Point { .. } | Family::Normal { .. } | Family::Uniform { .. }) {
            return Err(Error::UnknownFamily(format!("{} is not a frequency family", self.frequency)));
        }
        Ok(())
    }
}

fn draw(f: Family, rng: &mut ChaCha8Rng) -> f64 {
    match f {
        Family::UniformPhase => rng.gen::<f64>() * TWO_PI,
        Family::GaussianPhase { mu, s } | Family::GaussianW { mu, s } | Family::Normal { mu, s } => {
            Normal::new(mu, s).expect("validated spread").sample(rng)
        }
        Family::DeltaW { w } => w,
        Family::Point { nu } => nu,
        Family::Uniform { a, b } => rng.gen_range(a..b),
        Family::EquilibriumW => StandardNormal.sample(rng),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleEnsemble {
    pub theta: Vec<f64>,
    pub w: Vec<f64>,
    pub nu: Vec<f64>,
    pub t: f64,
    pub steps: u64,
}

impl ParticleEnsemble {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }
}

/// Counter-based noise: oscillator i at step n draws from ChaCha stream i at a fixed offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseStream {
    pub seed: u64,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn rng(&self, oscillator: usize, step: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(oscillator as u64);
        r.set_word_pos(step as u128 * WORDS_PER_STEP);
        r
    }

    /// Standard normal increment scaled to variance dt.
    pub fn increment(&self, oscillator: usize, step: u64, dt: f64) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.rng(oscillator, step));
        z * dt.sqrt()
    }
}

pub fn sample_initial(spec: &InitialSpec, n: usize, seed: u64) -> Result<ParticleEnsemble> {
    spec.validate()?;
    if n == 0 {
        return Err(invalid("N", "need at least one oscillator"));
    }
    let draws: Vec<(f64, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ INIT_SALT);
            rng.set_stream(i as u64);
            let theta = wrap_phase(draw(spec.phase, &mut rng));
            let nu = draw(spec.frequency, &mut rng);
            let mut w = draw(spec.velocity, &mut rng);
            if spec.velocity == Family::EquilibriumW {
                w += nu;
            }
            (theta, w, nu)
        })
        .collect();
    Ok(ParticleEnsemble {
        theta: draws.iter().map(|d| d.0).collect(),
        w: draws.iter().map(|d| d.1).collect(),
        nu: draws.iter().map(|d| d.2).collect(),
        t: 0.0,
        steps: 0,
    })
}

/// (Σ sin θ, Σ cos θ) accumulated sequentially so results do not depend on thread count.
fn phase_sums(theta: &[f64]) -> (f64, f64) {
    theta.iter().fold((0.0, 0.0), |(s, c), t| (s + t.sin(), c + t.cos()))
}

/// force_i = (K/N) Σ_j sin(θ_j − θ_i) through the two global sums.
pub fn pairwise_sync_force(e: &ParticleEnsemble, k: f64) -> Vec<f64> {
    let n = e.len() as f64;
    let (s, c) = phase_sums(&e.theta);
    e.theta.par_iter().map(|t| k / n * (s * t.cos() - c * t.sin())).collect()
}

/// R e^{iψ} = (1/N) Σ e^{iθ_j}.
pub fn empirical_order_stats(e: &ParticleEnsemble) -> (f64, f64) {
    let n = e.len() as f64;
    let (s, c) = phase_sums(&e.theta);
    let (s, c) = (s / n, c / n);
    let r = (s * s + c * c).sqrt().min(1.0);
    (r, wrap_phase(s.atan2(c)))
}

/// One Euler–Maruyama step of size dt. The deterministic limit σ = 0 is allowed.
pub fn step(e: &mut ParticleEnsemble, dt: f64, p: &PhysicalParams, ns: &NoiseStream) -> Result<()> {
    if !(p.m > 0.0) || !(p.sigma >= 0.0) || !(p.k >= 0.0) {
        return Err(invalid("params", "need m > 0, sigma ≥ 0, K ≥ 0"));
    }
    if !(dt > 0.0) {
        return Err(invalid("dt", "must be positive"));
    }
    if dt > p.m / 10.0 {
        return Err(Error::Stiffness { dt, limit: p.m / 10.0 });
    }
    let force = pairwise_sync_force(e, p.k);
    let amp = (2.0 * p.sigma).sqrt() / p.m;
    let inv_m = 1.0 / p.m;
    let n = e.steps;
    let noisy = p.sigma > 0.0;
    e.theta
        .par_iter_mut()
        .zip(e.w.par_iter_mut())
        .zip(e.nu.par_iter())
        .zip(force.par_iter())
        .enumerate()
        .for_each(|(i, (((th, w), nu), f))| {
            let w0 = *w;
            *th = wrap_phase(*th + w0 * dt);
            let mut wn = w0 + inv_m * (-w0 + nu + f) * dt;
            if noisy {
                wn += amp * ns.increment(i, n, dt);
            }
            *w = wn;
        });
    e.steps += 1;
    e.t += dt;
    Ok(())
}

/// Histogram estimate of the kinetic density. Each ν-slice with at least one
/// oscillator is normalized to unit mass; empty slices stay zero and are flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalField {
    pub field: KineticField,
    pub present: Vec<bool>,
    pub counts: Vec<usize>,
    pub dropped: usize,
}

pub fn empirical_kinetic(
    e: &ParticleEnsemble,
    phase: &PhaseGrid,
    velocity: &VelocityGrid,
    freq: &FrequencyQuadrature,
) -> EmpiricalField {
    let mut field = KineticField::zeros(*phase, *velocity, freq.clone());
    let (nq, nt, nw) = (freq.len(), phase.n_theta, velocity.n_w);
    let (dth, dw) = (phase.dtheta(), velocity.dw());
    let mut counts = vec![0usize; nq];
    let mut dropped = 0;
    let mut cells = Vec::with_capacity(e.len());
    for k in 0..e.len() {
        let q = freq.nearest(e.nu[k]);
        let i = ((e.theta[k] / dth).floor() as usize).min(nt - 1);
        let jf = ((e.w[k] - velocity.w_min) / dw).round();
        if !(0.0..nw as f64).contains(&jf) {
            dropped += 1;
            continue;
        }
        counts[q] += 1;
        cells.push(field.idx(q, i, jf as usize));
    }
    for c in cells {
        field.data[c] += 1.0;
    }
    for q in 0..nq {
        if counts[q] == 0 {
            continue;
        }
        let s = 1.0 / (counts[q] as f64 * dth * dw);
        for v in &mut field.data[q * nt * nw..(q + 1) * nt * nw] {
            *v *= s;
        }
    }
    let present = counts.iter().map(|c| *c > 0).collect();
    EmpiricalField { field, present, counts, dropped }
}

/// Normalized w-histogram on the node-centred bins of `velocity`.
pub fn w_marginal(e: &ParticleEnsemble, velocity: &VelocityGrid) -> Vec<f64> {
    let dw = velocity.dw();
    let mut h = vec![0.0; velocity.n_w];
    for w in &e.w {
        let j = ((w - velocity.w_min) / dw).round();
        if (0.0..velocity.n_w as f64).contains(&j) {
            h[j as usize] += 1.0;
        }
    }
    let s = 1.0 / (e.len() as f64 * dw);
    h.iter_mut().for_each(|v| *v *= s);
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderRecord {
    pub t: f64,
    pub r: f64,
    pub psi: f64,
    pub mean_w: f64,
    pub var_w: f64,
}

pub fn order_record(e: &ParticleEnsemble) -> OrderRecord {
    let (r, psi) = empirical_order_stats(e);
    let (mean_w, var_w) = crate::stats::mean_var(&e.w);
    OrderRecord { t: e.t, r, psi, mean_w, var_w }
}
