use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid needs at least {min} nodes, got {m}")]
    GridTooSmall { m: usize, min: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("angle unwrap is ambiguous at node {index}: increment {jump:.3} rad exceeds {limit:.3} rad")]
    UnwrapAmbiguous { index: usize, jump: f64, limit: f64 },

    #[error("field modulus {min_modulus:.3e} fell below the floor {floor:.1e}")]
    ZeroModulus { min_modulus: f64, floor: f64 },

    #[error("characteristic Jacobian {min_jacobian:.3e} fell below the floor {floor:.1e} at t = {t}")]
    JacobianCollapse { min_jacobian: f64, floor: f64, t: f64 },

    #[error("initial modulus {min_modulus:.3e} is below the floor {floor:.1e}")]
    ModulusVanishes { min_modulus: f64, floor: f64 },

    #[error("relaxation did not reach tolerance {tol:.1e} by t = {t_max} (residual {residual:.3e})")]
    NoConvergence { tol: f64, t_max: f64, residual: f64 },

    #[error("cyclic tridiagonal system is singular (pivot {pivot:.3e})")]
    SolverSingular { pivot: f64 },

    #[error("numerical instability at t = {t}: {reason}")]
    NumericalInstability { t: f64, reason: String },

    #[error("time step {dt:.3e} exceeds the explicit stability bound {bound:.3e}")]
    StabilityViolated { dt: f64, bound: f64 },

    #[error("trajectory sampling too sparse: recording interval {interval:.3e} > {limit:.3e}")]
    InsufficientSampling { interval: f64, limit: f64 },

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("evenness drifted by {drift:.3e} at t = {t} (limit {limit:.1e})")]
    SymmetryViolated { drift: f64, t: f64, limit: f64 },

    #[error("comparison window ends at tau = {requested} but the limit solution blew up at tau = {lifespan}")]
    WindowTooShort { requested: f64, lifespan: f64 },
}
