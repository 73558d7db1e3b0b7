use thiserror::Error;

/// Unified error type for the numerical toolkit.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field is in the wrong space: expected {expected}, got {got}")]
    SpaceMismatch { expected: &'static str, got: &'static str },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("weight is singular at the origin: eps_reg = 0 but a grid point sits at x = 0")]
    SingularOrigin,

    #[error("invalid Lorentz exponent: {0}")]
    InvalidExponent(String),

    #[error("empty series: {0}")]
    EmptySeries(String),

    #[error("zero field where a nonzero field is required")]
    ZeroField,

    #[error("no sign change bracketed: {0}")]
    NoBracket(String),

    #[error("rescaling not resolvable on this grid: {0}")]
    ResolutionLoss(String),

    #[error("iteration failed to converge: {0}")]
    NoConvergence(String),

    #[error("iteration collapsed to the zero solution")]
    DivergedToZero,

    #[error("ground state has not converged: {0}")]
    NotConverged(String),

    #[error("wrong gauge: {0}")]
    WrongGauge(String),

    #[error("cutoff radius out of range: {0}")]
    RadiusOutOfRange(String),

    #[error("not enough snapshots: {0}")]
    InsufficientSnapshots(String),

    #[error("time span too short: {0}")]
    SpanTooShort(String),

    #[error("wraparound detected at t = {0}: boundary shell mass exceeds threshold")]
    WraparoundDetected(f64),

    #[error("invalid run configuration: {0}")]
    ConfigInvalid(String),

    #[error("time horizon too short: {0}")]
    HorizonTooShort(String),

    #[error("trajectory carries no field snapshots")]
    NoSnapshots,

    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
