use thiserror::Error;

pub type Result<T, E = SpinError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SpinError {
    #[error("sample is empty")]
    EmptySample,

    #[error("non-finite value {value} at position {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("sample has {n} draws, at least {min} are required")]
    TooFewDraws { n: usize, min: usize },

    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    InvalidAlpha(f64),

    #[error("interval would cover fewer than 2 draws (n = {n}, alpha = {alpha})")]
    WindowCountTooSmall { n: usize, alpha: f64 },

    #[error("window [{start}, {end}] is outside the order statistics 1..={n}")]
    WindowOutOfBounds { start: usize, end: usize, n: usize },

    #[error("window around index {center} has only {len} points, at least 3 are required")]
    WindowTooSmall { center: usize, len: usize },

    #[error("sample has zero variance")]
    ZeroVariance,

    #[error("bound {bound} lies inside the data range [{min}, {max}]")]
    BoundInsideData { bound: f64, min: f64, max: f64 },

    #[error("kernel weights are invalid: {0}")]
    InvalidKernel(String),

    #[error("interval endpoints are reversed: lower {lower} > upper {upper}")]
    ReversedInterval { lower: f64, upper: f64 },

    #[error("constraint set is infeasible: {0}")]
    Infeasible(String),

    #[error("quadratic program did not converge within {0} iterations")]
    NotConverged(usize),

    #[error("solver result failed verification (KKT residual {kkt:e}, violation {violation:e})")]
    InaccurateSolution { kkt: f64, violation: f64 },

    #[error("{failed} of {total} bootstrap replicates failed; last error: {last}")]
    BootstrapFailed {
        failed: usize,
        total: usize,
        last: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{failed} of {total} replications failed (limit is 1%)")]
    TooManyFailures { failed: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
