use thiserror::Error;

/// Errors reported by the solver and diagnostic layers.
#[derive(Error, Debug)]
pub enum Error {
    /// Grid construction rejected the requested dimensions.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Physical parameters violate an admissibility constraint. The message
    /// names the constraint that failed.
    #[error("inadmissible parameters: {0}")]
    InadmissibleParams(String),

    /// A profile or dilation does not fit on the grid it was requested on.
    #[error("under-resolved field: {0}")]
    UnderResolved(String),

    /// Two fields that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A function argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Time integration produced a non-finite value.
    #[error("blow-up detected at step {step} (t = {time}): non-finite {field}")]
    BlowUp {
        step: usize,
        time: f64,
        field: &'static str,
    },

    /// An iterative eigensolve stopped before reaching its tolerance.
    #[error("Rayleigh iteration did not converge after {sweeps} sweeps (residual {residual:.3e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    /// File or serialization failure while importing or exporting fields.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed data encountered while importing fields.
    #[error("import error: {0}")]
    Import(String),
}
