//! Crate-wide error type.
//!
//! Every fallible operation returns [`Error`] so callers get one enum to
//! match on. Variants carry enough context (time index, timestamp, offending
//! value) to point at the exact input that broke a precondition.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A series was shorter than the minimum the operation supports.
    #[error("series too short: need at least {min} observations, got {got}")]
    SeriesTooShort { min: usize, got: usize },

    /// Timestamps must form a strictly increasing, gap-free grid.
    #[error("timestamps not strictly increasing: {prev} is followed by {next}")]
    TimestampOrder { prev: String, next: String },

    /// Monthly and annual stamps cannot be mixed within one series.
    #[error("mixed timestamp granularities: {first} vs {other}")]
    MixedGranularity { first: String, other: String },

    /// An observation was NaN or infinite.
    #[error("non-finite value {value} at {timestamp}")]
    NonFiniteValue { timestamp: String, value: f64 },

    /// Log transform hit a non-positive observation.
    #[error("log transform requires strictly positive values: {value} at {timestamp}")]
    NonPositiveValue { timestamp: String, value: f64 },

    /// A matrix or vector had the wrong shape for the model it was given to.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An initial covariance failed its symmetry / positive semi-definite check.
    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    /// A scalar parameter was outside its admissible range.
    #[error("parameter `{name}` must be {requirement}, got {value}")]
    InvalidParameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },

    /// A density was evaluated at a negative argument.
    #[error("density argument must be non-negative, got {0}")]
    NegativeDensityArgument(f64),

    /// A density with a shape parameter below one diverges at the origin;
    /// the pole is reported instead of returning an infinity.
    #[error("density has a pole at zero when `{shape}` < 1 (got {value}); evaluate at x > 0")]
    DensityPole { shape: &'static str, value: f64 },

    /// The one-step forecast variance collapsed; the filter cannot continue.
    #[error("one-step forecast variance not positive at t={t}: {value}")]
    DegenerateForecastVariance { t: usize, value: f64 },

    /// Variance sequences must match the series length.
    #[error("variance sequence length mismatch: series has {t_len} points, {which} has {got}")]
    VarianceLength {
        which: &'static str,
        t_len: usize,
        got: usize,
    },

    /// A supplied variance was zero, negative, or non-finite.
    #[error("variance entry {which}[{t}] must be positive and finite, got {value}")]
    NonPositiveVariance {
        which: &'static str,
        t: usize,
        value: f64,
    },

    /// Precisions cannot be initialized from a series whose first differences
    /// have zero variance.
    #[error("cannot initialize precisions: first differences of the series have zero variance")]
    ConstantSeries,

    /// A chain without retained draws cannot be summarized.
    #[error("chain has no retained draws")]
    EmptyChain,

    /// Draw storage did not match the lengths implied by the metadata.
    #[error("chain storage inconsistent: {0}")]
    ChainShape(String),

    /// A sampler sweep hit a numerical failure; the iteration index and the
    /// sub-step that failed are reported alongside the underlying cause.
    #[error("sweep {iteration} failed during {step}: {source}")]
    SweepFailed {
        iteration: usize,
        step: &'static str,
        #[source]
        source: Box<Error>,
    },

    /// Credible levels must sit strictly inside (0, 1).
    #[error("credible level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),

    /// Numerical integration failed to converge to the requested tolerance.
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
}
