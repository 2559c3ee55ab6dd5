use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature needs an odd number of at least 3 uniform samples, got {0}")]
    EvenPointCount(usize),

    #[error("eigenmode index {requested} exceeds the supported maximum of {cap}")]
    ModeCap { requested: usize, cap: usize },

    #[error("modal forcing references mode k={k} but the basis only holds {available} modes")]
    ModeOutOfRange { k: usize, available: usize },

    #[error("root finding for mode {k} did not converge (residual {residual:e})")]
    RootNotConverged { k: usize, residual: f64 },

    #[error("singular matrix encountered at pivot column {column}")]
    SingularMatrix { column: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("degenerate segment {index} in nodal configuration")]
    DegenerateSegment { index: usize },

    #[error("Newton iteration failed at t={time}: {reason}")]
    NewtonFailed { time: f64, reason: String },

    #[error("time window [{start}, {end}] is not covered by the trajectory [{first}, {last}]")]
    WindowOutOfRange {
        start: f64,
        end: f64,
        first: f64,
        last: f64,
    },

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
