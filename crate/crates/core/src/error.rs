use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("velocity grid does not cover the Maxwellian: captured mass {mass:.10} (deficit {deficit:.3e})")]
    GridCoverage { mass: f64, deficit: f64 },

    #[error("nonlocal window unresolvable: eps*pi = {window:.4e} < 2*dtheta = {required:.4e}")]
    WindowUnresolvable { window: f64, required: f64 },

    #[error("CFL violation: dt = {dt:.4e} exceeds limit {limit:.4e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("stiffness guard: dt = {dt:.4e} exceeds m/10 = {limit:.4e}")]
    Stiffness { dt: f64, limit: f64 },

    #[error("unknown distribution family `{0}`")]
    UnknownFamily(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("Gaussian weight overflow at |w - V| = {0:.3}")]
    WeightOverflow(f64),

    #[error("linear solve failed: zero pivot in row {row}")]
    SingularSystem { row: usize },

    #[error("constraint violated: residual {residual:.3e} > tolerance {tolerance:.3e}")]
    Constraint { residual: f64, tolerance: f64 },

    #[error("no sign change found; input mean {mean:.3e}")]
    NoSignChange { mean: f64 },

    #[error("asymptotic series has no decreasing term for a = {0} (need a^2 > 1/2); use quadrature")]
    AsymptoticDomain(f64),

    #[error("quadrature did not converge: error estimate {estimate:.3e} > target {target:.3e}")]
    Quadrature { estimate: f64, target: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
