use thiserror::Error;

/// Errors raised by model validation, the solvers and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coefficient {symbol} must be strictly positive (got {value})")]
    NonPositiveCoefficient { symbol: String, value: f64 },

    #[error("prey intraspecific competition a11 is zero; chains with a11 = 0 are not supported")]
    ZeroIntracompetition,

    #[error("chain must have at least one species")]
    EmptyChain,

    #[error("{what}: expected length {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("noise covariance is not symmetric (entry ({row},{col}) differs by {diff:e})")]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error("noise covariance is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    #[error("noise factor does not reproduce sigma (max deviation {deviation:e})")]
    FactorMismatch { deviation: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("numerical breakdown in forward sweep at row {row}")]
    NumericalBreakdown { row: usize },

    #[error("boundary equilibrium for sub-chain {j} is infeasible (kappa_tilde = {kappa_tilde})")]
    InfeasibleBoundary { j: usize, kappa_tilde: f64 },

    #[error("log-state of species {species} blew up at t = {time}")]
    BlowUp { species: usize, time: f64 },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("trajectory has no samples after burn-in")]
    EmptyTrajectory,

    #[error("malformed box on axis {axis}: lo {lo} must be < hi {hi}")]
    MalformedBox { axis: usize, lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
