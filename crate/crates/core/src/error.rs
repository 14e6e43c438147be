use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("lambda = {0} is outside [0, 1]")]
    LambdaOutOfRange(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("enumeration of {count} points exceeds the limit of {limit}")]
    GridOverflow { count: u128, limit: u128 },

    #[error("{what} did not converge after {iterations} iterations (best value {best_value}, gap {gap})")]
    NonConvergence {
        what: String,
        iterations: usize,
        best_value: f64,
        gap: f64,
        best_weights_p: Vec<f64>,
        best_weights_q: Vec<f64>,
    },

    #[error("state space of {states} states exceeds the limit of {limit}")]
    StateExplosion { states: usize, limit: usize },

    #[error("test construction refused: {0}")]
    TestRefused(String),

    #[error("certificate failed: {0}")]
    CertificateFailed(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("invalid subsystem structure: {0}")]
    InvalidStructure(String),

    #[error("compatibility not verified: {0}")]
    CompatibilityUnverified(String),

    #[error("menu element {index}: {source}")]
    Menu {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("linear program: {0}")]
    Lp(String),
}

pub type Result<T> = std::result::Result<T, Error>;
