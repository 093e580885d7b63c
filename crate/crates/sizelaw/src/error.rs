//! Error type shared by all modules.

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A row of an input file failed to parse.
    #[error("malformed input at line {line}: {reason}")]
    MalformedInput { line: usize, reason: String },

    /// The same size appears twice in a histogram.
    #[error("duplicate bin for size {size}")]
    DuplicateBin { size: u32 },

    /// A size between min and max is missing.
    #[error("non-contiguous histogram: size {missing} is missing")]
    NonContiguous { missing: u32 },

    /// A value violates a domain constraint (negative count, non-finite input, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A requested range falls outside the histogram span.
    #[error("range {lo}:{hi} outside histogram span {span_lo}:{span_hi}")]
    RangeOutsideSpan {
        lo: u32,
        hi: u32,
        span_lo: u32,
        span_hi: u32,
    },

    /// A bin with zero (or negative) count where a log-space weight is needed.
    #[error("zero count at size {size}: log-space weight undefined")]
    ZeroCount { size: u32 },

    /// Too few usable points for the requested model.
    #[error("underdetermined: {needed} points needed, {got} available")]
    Underdetermined { needed: usize, got: usize },

    /// The weighted normal-equations matrix is singular.
    #[error("degenerate design: singular normal equations")]
    DegenerateDesign,

    /// Two lines are parallel and have no intersection.
    #[error("no intersection: slopes differ by less than 1e-12")]
    NoIntersection,

    /// RANSAC found no candidate model with enough inliers per side to refit.
    #[error("no consensus model found in {iterations} iterations")]
    NoConsensus { iterations: u32 },

    /// The extrapolated fit sums to zero over the scenario span.
    #[error("degenerate fit: model total is zero over the scenario span")]
    DegenerateFit,

    /// The fixed-normalization anchor bin has zero count.
    #[error("degenerate anchor: zero count at size {size}")]
    DegenerateAnchor { size: u32 },

    /// The slope solve has no root in the search bracket.
    #[error("no solution: slope-total equation has no root in [{lo}, {hi}]")]
    NoSolution { lo: f64, hi: f64 },

    /// Too many Monte Carlo resamples failed the pipeline.
    #[error("unstable resampling: {discarded} of {samples} samples discarded (>10%)")]
    Instability { discarded: usize, samples: usize },

    /// A parameter violates its documented invariant.
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    /// A generator spec does not tile its span.
    #[error("invalid generator spec: {0}")]
    Spec(String),

    /// The requested combination of options is not supported.
    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
