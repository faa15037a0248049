//! Run descriptors. TOML with unknown keys rejected; everything is validated before any compute.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use kuramoto_core::kinetic::{CouplingMode, KineticConfig, TransportScheme};
use kuramoto_core::model::{CollisionForm, PhysicalParams};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RunError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    EpsSweep,
    ParticleVsKinetic,
    HydroValidate,
    GciValidate,
    HardyValidate,
    EquilibriumRelax,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::EpsSweep,
        Experiment::ParticleVsKinetic,
        Experiment::HydroValidate,
        Experiment::GciValidate,
        Experiment::HardyValidate,
        Experiment::EquilibriumRelax,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::EpsSweep => "eps_sweep",
            Experiment::ParticleVsKinetic => "particle_vs_kinetic",
            Experiment::HydroValidate => "hydro_validate",
            Experiment::GciValidate => "gci_validate",
            Experiment::HardyValidate => "hardy_validate",
            Experiment::EquilibriumRelax => "equilibrium_relax",
        }
    }

    pub fn summary(&self) -> &'static str {
        match self {
            Experiment::EpsSweep => "kinetic vs hydrodynamic moment error over a list of epsilon",
            Experiment::ParticleVsKinetic => "relaxed particle w-marginal vs the Gaussian equilibrium",
            Experiment::HydroValidate => "finite-volume convergence, conservation and momentum residuals",
            Experiment::GciValidate => "GCI solution refinement, collision equivalence and pairing suite",
            Experiment::HardyValidate => "Muckenhoupt constants, Hardy ratio suite and tail series",
            Experiment::EquilibriumRelax => "homogeneous kinetic relaxation toward local equilibrium",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = RunError;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| RunError::Config(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_physical")]
    pub physical: PhysicalParams,
    #[serde(default)]
    pub scaled: Scaled,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub kinetic: KineticBlock,
    #[serde(default)]
    pub particles: Particles,
    #[serde(default)]
    pub gci: Gci,
    #[serde(default)]
    pub hardy: Hardy,
    #[serde(default)]
    pub relax: Relax,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_physical() -> PhysicalParams {
    PhysicalParams { m: 0.25, k: 1.0, sigma: 1.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scaled {
    pub epsilons: Vec<f64>,
}

impl Default for Scaled {
    fn default() -> Self {
        Self { epsilons: vec![0.2, 0.1, 0.05, 0.025] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grids {
    pub n_theta: usize,
    pub n_w: usize,
    pub n_nu: usize,
    pub nu_mean: f64,
    pub nu_std: f64,
    /// Velocity resolutions for refinement studies.
    pub w_ladder: Vec<usize>,
    /// Phase resolutions for refinement studies.
    pub theta_ladder: Vec<usize>,
    pub hydro_refine: usize,
    pub hydro_cfl: f64,
    pub t_end: f64,
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            n_theta: 64,
            n_w: 64,
            n_nu: 8,
            nu_mean: 0.0,
            nu_std: 0.25,
            w_ladder: vec![64, 128, 256, 512],
            theta_ladder: vec![64, 128, 256, 512],
            hydro_refine: 32,
            hydro_cfl: 0.5,
            t_end: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KineticBlock {
    pub cfl: f64,
    pub coupling: CouplingMode,
    pub collision: CollisionForm,
    pub transport: TransportScheme,
}

impl Default for KineticBlock {
    fn default() -> Self {
        Self {
            cfl: 0.25,
            coupling: CouplingMode::Local,
            collision: CollisionForm::Factored,
            transport: TransportScheme::LaxWendroff,
        }
    }
}

impl KineticBlock {
    pub fn to_config(&self) -> KineticConfig {
        KineticConfig { cfl: self.cfl, coupling_mode: self.coupling, collision: self.collision, transport: self.transport }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Particles {
    pub n: usize,
    pub nu: f64,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
}

impl Default for Particles {
    fn default() -> Self {
        Self { n: 100_000, nu: 0.5, dt: 0.01, t_end: 10.0, record_every: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Gci {
    pub v: f64,
    pub n_nu: usize,
    /// Resolution at which the absolute thresholds are applied.
    pub n_w_check: usize,
}

impl Default for Gci {
    fn default() -> Self {
        Self { v: 0.4, n_nu: 8, n_w_check: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Relax {
    pub epsilon: f64,
    pub t_end: f64,
    pub n_w: usize,
}

impl Default for Relax {
    fn default() -> Self {
        Self { epsilon: 1.0, t_end: 8.0, n_w: 128 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hardy {
    pub v: f64,
    pub d: f64,
    pub suite_size: usize,
    pub suite_n_w: usize,
    pub series_a_min: f64,
    pub series_a_max: f64,
    pub series_points: usize,
}

impl Default for Hardy {
    fn default() -> Self {
        Self { v: 0.0, d: 0.0, suite_size: 20, suite_n_w: 3201, series_a_min: 1.5, series_a_max: 6.0, series_points: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub eps_slope: [f64; 2],
    pub second_order_slope: [f64; 2],
    pub advection_slope: [f64; 2],
    pub gci_sup_error: f64,
    pub gci_interior_half_width: f64,
    pub constraint: f64,
    pub pairing: f64,
    pub pairing_fields: usize,
    pub mass_drift: f64,
    pub stationarity: f64,
    pub hardy_slack: f64,
    pub large_r_product: f64,
    pub relax_l1: f64,
    pub force: f64,
    pub equilibrium_distance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_slope: [0.7, 1.3],
            second_order_slope: [1.7, 2.3],
            advection_slope: [0.8, 1.2],
            gci_sup_error: 1e-3,
            gci_interior_half_width: 4.0,
            constraint: 1e-10,
            pairing: 1e-4,
            pairing_fields: 10,
            mass_drift: 1e-13,
            stationarity: 1e-13,
            hardy_slack: 1.05,
            large_r_product: 0.05,
            relax_l1: 0.03,
            force: 1e-12,
            equilibrium_distance: 1e-3,
        }
    }
}

fn check(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(RunError::Config(what.to_string()))
    }
}

fn range_ok(r: [f64; 2]) -> bool {
    r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.physical.validate().map_err(|e| RunError::Config(e.to_string()))?;
        let s = &self.scaled;
        check(!s.epsilons.is_empty(), "scaled.epsilons must be nonempty")?;
        check(s.epsilons.iter().all(|e| *e > 0.0 && *e <= 1.0), "scaled.epsilons must lie in (0, 1]")?;
        if self.experiment == Experiment::EpsSweep {
            check(s.epsilons.len() >= 2, "eps_sweep needs at least two epsilons")?;
        }
        let g = &self.grids;
        check(g.n_theta >= 4, "grids.n_theta must be at least 4")?;
        check(g.n_w >= 8, "grids.n_w must be at least 8")?;
        check(g.n_nu >= 1, "grids.n_nu must be at least 1")?;
        check(g.nu_std > 0.0 && g.nu_mean.is_finite(), "grids.nu_std must be positive")?;
        check(g.w_ladder.len() >= 2 && g.w_ladder.iter().all(|n| *n >= 16), "grids.w_ladder needs two or more sizes ≥ 16")?;
        check(g.theta_ladder.len() >= 2 && g.theta_ladder.iter().all(|n| *n >= 8), "grids.theta_ladder needs two or more sizes ≥ 8")?;
        check(g.w_ladder.windows(2).all(|p| p[1] > p[0]), "grids.w_ladder must increase")?;
        check(g.theta_ladder.windows(2).all(|p| p[1] > p[0]), "grids.theta_ladder must increase")?;
        check(g.hydro_refine >= 1, "grids.hydro_refine must be at least 1")?;
        check(g.hydro_cfl > 0.0 && g.hydro_cfl <= 1.0, "grids.hydro_cfl must lie in (0, 1]")?;
        check(g.t_end > 0.0 && g.t_end.is_finite(), "grids.t_end must be positive")?;
        self.kinetic.to_config().validate().map_err(|e| RunError::Config(e.to_string()))?;
        let p = &self.particles;
        check(p.n >= 1, "particles.n must be positive")?;
        check(p.dt > 0.0 && p.t_end > 0.0, "particles.dt and particles.t_end must be positive")?;
        check(p.nu.is_finite(), "particles.nu must be finite")?;
        let c = &self.gci;
        check(c.v.is_finite() && c.n_nu >= 1, "gci.v must be finite and gci.n_nu positive")?;
        check(g.w_ladder.contains(&c.n_w_check), "gci.n_w_check must be one of grids.w_ladder")?;
        let r = &self.relax;
        check(r.epsilon > 0.0 && r.epsilon <= 1.0, "relax.epsilon must lie in (0, 1]")?;
        check(r.t_end > 0.0 && r.t_end.is_finite() && r.n_w >= 16, "relax.t_end must be positive and relax.n_w ≥ 16")?;
        let h = &self.hardy;
        check(h.v.is_finite() && h.d.is_finite(), "hardy.v and hardy.d must be finite")?;
        check(h.suite_size >= 1 && h.suite_n_w >= 64, "hardy.suite_size ≥ 1 and hardy.suite_n_w ≥ 64")?;
        check(h.series_a_min > 0.75 && h.series_a_min <= h.series_a_max, "hardy series range must satisfy 0.75 < a_min ≤ a_max")?;
        check(h.series_points >= 1, "hardy.series_points must be positive")?;
        let t = &self.tolerances;
        check(
            range_ok(t.eps_slope) && range_ok(t.second_order_slope) && range_ok(t.advection_slope),
            "tolerance ranges must be finite with lo ≤ hi",
        )?;
        let positive = [
            t.gci_sup_error,
            t.gci_interior_half_width,
            t.constraint,
            t.pairing,
            t.mass_drift,
            t.stationarity,
            t.hardy_slack,
            t.large_r_product,
            t.relax_l1,
            t.force,
            t.equilibrium_distance,
        ];
        check(positive.iter().all(|x| *x > 0.0 && x.is_finite()), "tolerances must be positive")?;
        check(t.pairing_fields >= 1, "tolerances.pairing_fields must be positive")?;
        Ok(())
    }
}
