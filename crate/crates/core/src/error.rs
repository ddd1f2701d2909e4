use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by the simulator and the phase optimizer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The reflection subproblem solver stopped at the iteration cap before
    /// the KKT residual dropped below tolerance. The best iterate found so
    /// far is attached so callers can degrade gracefully.
    #[error("subproblem stopped after {iterations} iterations with KKT residual {residual:.3e}")]
    SubproblemNonConvergence {
        iterations: usize,
        residual: f64,
        best: Vec<Complex64>,
    },

    #[error("exhaustive search over 2^{bits} phase configurations exceeds the cap of 2^{cap_bits}")]
    SearchSpaceTooLarge { bits: u32, cap_bits: u32 },

    #[error("csv parse error at line {line}: {reason}")]
    CsvParse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by bad user input (config, CLI arguments,
    /// malformed data files) as opposed to runtime failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig { .. }
                | Error::InvalidInput(_)
                | Error::DimensionMismatch(_)
                | Error::CsvParse { .. }
        )
    }
}
