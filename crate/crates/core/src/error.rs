use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space dimensions: {0}")]
    InvalidDims(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-unique steady state (residual {residual:.3e})")]
    NonUniqueSteadyState { residual: f64 },

    #[error("steady-state solve did not converge (residual {residual:.3e})")]
    NotConverged { residual: f64 },

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("step size underflow at t = {t:.6e}")]
    StepSizeUnderflow { t: f64 },

    #[error("solver failed at detuning {detuning} MHz (grid index {index}): {source}")]
    AtDetuning {
        detuning: f64,
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("fit window contains {found} samples, need at least {needed}")]
    TooFewSamples { found: usize, needed: usize },

    #[error("fit window contains {0} local maxima, expected one")]
    MultiPeakWindow(usize),

    #[error("no central transparency peak: transmission at zero detuning is a local minimum")]
    NoCentralPeak,

    #[error("temperature must be positive, got {0} K")]
    NonPositiveTemperature(f64),

    #[error("ground state: temperature unresolvable for nbar = {0}")]
    GroundState(f64),

    #[error("linewidth {value} MHz outside calibrated span [{lo}, {hi}] MHz")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("calibration rejected: {0}")]
    Calibration(String),
}
