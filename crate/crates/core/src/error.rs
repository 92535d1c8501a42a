//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix dimension {0} exceeds the supported maximum of 16")]
    DimensionTooLarge(usize),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid parameter {name}: {value} (expected {expected})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("matrix is not Hermitian: max |m - m^dag| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("trace is {trace:.12} instead of 1")]
    TraceNotOne { trace: f64 },

    #[error("matrix is not positive semidefinite within tolerance")]
    NotPositive,

    #[error("state norm is {norm:.12} instead of 1")]
    NormNotOne { norm: f64 },

    #[error("Kraus completeness violated: max |sum K^dag K - I| = {deviation:.3e}")]
    CompletenessViolation { deviation: f64 },

    #[error("qubit index {index} out of range for {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("QR eigenvalue iteration did not converge after {iterations} sweeps")]
    EigenNonConvergence { iterations: usize },

    #[error("eigenpair residual {residual:.3e} exceeds tolerance for lambda = {lambda}")]
    EigenResidual {
        lambda: num_complex::Complex64,
        residual: f64,
    },

    #[error("eigenvalue {value:.3e} is more negative than the clamp tolerance")]
    EigenvalueBeyondClamp { value: f64 },

    #[error("no entanglement to purify: {0}")]
    NoEntanglement(String),

    #[error("zero-probability branch: {0}")]
    ZeroProbabilityBranch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
