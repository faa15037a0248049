//! Parameters, grids and the w-space operators shared by every solver.

pub mod collision;
pub mod coupling;
pub mod duality;
pub mod equilibrium;
pub mod field;
pub mod grid;
pub mod maxwellian;
pub mod params;

pub use collision::{collision_q, collision_q_direct, collision_q_factored, CollisionForm};
pub use coupling::{effective_velocity, mean_flux_phi, nonlocal_j_eps, KERNEL_NORM};
pub use duality::{duality_green_check, DualityCheck};
pub use equilibrium::{equilibrium_build, EquilibriumProfile};
pub use field::KineticField;
pub use grid::{FrequencyQuadrature, PhaseGrid, VelocityGrid};
pub use maxwellian::{gaussian_moments, maxwellian_dimensional, sample_gaussian, von_mises_gaussian, GaussianMoments};
pub use params::{nondimensionalize, PhysicalParams, ScaledParams};
