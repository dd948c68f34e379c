use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for {n} qubits")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid ion pair ({0}, {1})")]
    InvalidPair(usize, usize),

    #[error("duplicate index {0}")]
    DuplicateIndex(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("spectator {0} clashes with a target ion")]
    IndexClash(usize),

    #[error("pulse does not close the target displacements: max |alpha| = {residual:.3e}")]
    NonClosedPulse { residual: f64 },

    #[error("angle {0} outside the allowed range")]
    AngleOutOfRange(f64),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("FM optimization failed after {starts} starts: best max |alpha| = {best_residual:.3e}")]
    OptimizationFailure { best_residual: f64, starts: usize },

    #[error("Fock truncation: top-level population {population:.3e} exceeds {limit:.1e}")]
    Truncation { population: f64, limit: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
