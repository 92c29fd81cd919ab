use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("group mismatch: {0}")]
    GroupMismatch(String),

    #[error("antipodal pair: g·h⁻¹ has an eigenvalue within {tolerance:e} of -1")]
    Antipodal { tolerance: f64 },

    #[error("orbit inconsistent with map at index {index} (defect {defect:e})")]
    OrbitInconsistent { index: usize, defect: f64 },

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("orbit hits a partition boundary at step {step} (x = {x})")]
    BoundaryOrbit { step: usize, x: f64 },

    #[error("invariant density unavailable for map `{0}`; run estimate_density first")]
    DensityUnavailable(String),

    #[error("derivative vanishes inside cylinder at x = {0}")]
    CriticalCylinder(f64),

    #[error("empty cylinder for branch word {0:?}")]
    EmptyCylinder(Vec<usize>),

    #[error("orbit escaped the phase interval at step {step} (x = {x})")]
    OrbitEscaped { step: usize, x: f64 },

    #[error("point {x} is not in the image of branch {branch}")]
    NotInBranchImage { branch: usize, x: f64 },

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("base not eventually covered: tail mass {tail_mass:.4} exceeds {limit:.2}; increase max return time")]
    TailTooHeavy { tail_mass: f64, limit: f64 },

    #[error("return-time sum is infinite (tail exponent {exponent:.3}); the pulled-back measure is only sigma-finite")]
    InfiniteKac { exponent: f64 },

    #[error("invalid tower point: {0}")]
    InvalidTowerPoint(String),

    #[error("PH violated or singular orbit: successive differences are not geometric ({0})")]
    NonGeometric(String),

    #[error("branch word mismatch: {0}")]
    BranchWordMismatch(String),

    #[error("hypothesis violated: effective exponent {alpha_tilde:.6} >= 1")]
    HypothesisViolated { alpha_tilde: f64 },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("experiment aborted: {0}")]
    Experiment(String),

    #[error("config error: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
