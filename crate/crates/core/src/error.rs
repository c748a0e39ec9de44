//! Error type shared by every module in the crate.

use std::path::PathBuf;

/// Everything that can go wrong across the model, tracker, theory, and
/// harness layers. Numerical preconditions that a caller can violate are
/// reported through this enum; internal invariants use `assert!`.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A vector argument had the wrong length.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The ambient dimension must be at least 2 for a probe direction
    /// orthogonal to the estimate to exist.
    #[error("ambient dimension must be at least 2, got {got}")]
    DimensionTooSmall { got: usize },

    /// A vector that must be normalizable had norm at or below 1e-12.
    #[error("degenerate input: vector norm {norm:e} is too small to normalize")]
    DegenerateInput { norm: f64 },

    /// A vector required to be unit length was not.
    #[error("vector is not unit length: norm {norm} deviates from 1 by more than 1e-9")]
    NotUnit { norm: f64 },

    /// Eigenvalues must satisfy lambda1 > lambda2 >= 0.
    #[error("invalid spectrum: lambda1 {lambda1} must exceed lambda2 {lambda2} and lambda2 must be nonnegative")]
    InvalidSpectrum { lambda1: f64, lambda2: f64 },

    /// Tail eigenvalues must descend from lambda2 and stay nonnegative.
    #[error("invalid tail: entry {index} ({value}) breaks lambda2 >= tail_3 >= ... >= 0")]
    InvalidTail { index: usize, value: f64 },

    /// A probe vector was not orthogonal to the estimate it was used with.
    #[error("probe is not orthogonal to the estimate: |<u, b>| = {dot:e} exceeds 1e-9")]
    NonOrthogonalProbe { dot: f64 },

    /// Rejection sampling failed to produce a usable direction.
    #[error("sampling failed: no usable direction after {attempts} attempts")]
    SamplingFailed { attempts: usize },

    /// Drift velocity must lie in [0, 1).
    #[error("invalid drift velocity {velocity}: must lie in [0, 1)")]
    InvalidVelocity { velocity: f64 },

    /// A step size or step-size parameter was outside its admissible range.
    #[error("invalid step size {value}: {reason}")]
    InvalidStepSize { value: f64, reason: &'static str },

    /// A schedule or bound was queried outside the phase it is defined on.
    #[error("iteration {t} is outside the {phase} phase (boundary t0 = {t0})")]
    PhaseRange {
        t: u64,
        t0: u64,
        phase: &'static str,
    },

    /// An experiment configuration failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An aggregate series with no rows cannot be exported or summarized.
    #[error("empty series: nothing to export or summarize")]
    EmptySeries,

    /// A trial inside a multi-trial experiment failed.
    #[error("trial {trial} failed: {source}")]
    Trial {
        trial: u64,
        #[source]
        source: Box<Error>,
    },

    /// Exported or imported data did not match the expected format.
    #[error("format error at line {line}: {reason}")]
    Format { line: usize, reason: String },

    /// File I/O failed.
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// JSON serialization or deserialization failed.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
