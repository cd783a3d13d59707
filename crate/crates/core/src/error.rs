use thiserror::Error;

/// Errors raised by the simulation, cumulant, bound and fitting layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("capacity exceeded for {what}: {got} qubits (allowed {min}..={max})")]
    Capacity {
        what: &'static str,
        got: usize,
        min: usize,
        max: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite entries in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("realization carries {got} multipliers but the schedule has {expected} sub-blocks")]
    MultiplierCount { expected: usize, got: usize },

    #[error("observable term {index} is not invertible (min singular value {min_sv:e} < {threshold:e})")]
    Decomposition {
        index: usize,
        min_sv: f64,
        threshold: f64,
    },

    #[error("cumulant truncation warning: imaginary residue {imag:e} exceeds 1e-6 of real part {real:e}")]
    Truncation { real: f64, imag: f64 },

    #[error("optimizer failed: best objective {best} below acceptance threshold {threshold}")]
    OptimizationFailure { best: f64, threshold: f64 },

    #[error("noise model mismatch: {0}")]
    ModelMismatch(String),

    #[error("fit window error: {0}")]
    Window(String),

    #[error("insufficient data: need at least {need} points, got {got}")]
    InsufficientData { need: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
