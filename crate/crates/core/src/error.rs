use thiserror::Error;

use crate::circuit::Circuit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported spin j = {0}; only j = 1/2 and j = 1 are available")]
    UnsupportedSpin(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("{context}: matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { context: String, deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("qubit index {qubit} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("phase is indeterminate at a critical point (|G| = {modulus:e})")]
    CriticalPoint { modulus: f64 },

    #[error("holonomy did not converge: phase changed by {change:e} between {steps} and {doubled} steps")]
    NotConverged {
        steps: usize,
        doubled: usize,
        change: f64,
    },

    #[error("operation requires a circuit without measurements")]
    MeasurementPresent,

    #[error("gate `{0}` cannot be converted to the requested gate set")]
    UnconvertibleGate(String),

    #[error("approximate synthesis stopped at depth {depth} with best distance {best_distance:e}")]
    SynthesisFailed {
        best_distance: f64,
        depth: usize,
        best: Box<Circuit>,
    },

    #[error("calibration error at `{field}`: {message}")]
    Calibration { field: String, message: String },

    #[error("noise model does not cover: {}", .0.join(", "))]
    MissingCoverage(Vec<String>),

    #[error("malformed noise model: {0}")]
    MalformedNoise(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
