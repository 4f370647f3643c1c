//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by synthesis, preprocessing, extraction, embedding and
/// trace recovery. Variants carry enough context to report the offending
/// quantity without a backtrace.
#[derive(Debug, Error)]
pub enum Error {
    #[error("resolution too small: {got} grid points (minimum {min})")]
    ResolutionTooSmall { got: usize, min: usize },

    #[error("unknown template `{0}`")]
    UnknownTemplate(String),

    #[error("frequency outside chart domain: f = {0} (require f > 1)")]
    FrequencyOutsideChart(f64),

    #[error("amplitude outside chart domain: a = {0} (require a > 0)")]
    AmplitudeOutsideChart(f64),

    #[error(
        "phase not strictly increasing on the sample grid (first violation near t = {at:.6} s)"
    )]
    PhaseNotIncreasing { at: f64 },

    #[error(
        "slow-variation condition violated: max |a'|/phi' = {amp_ratio:.6}, \
         max |phi''|/phi' = {accel_ratio:.6}, allowed epsilon = {epsilon:.6}"
    )]
    SlowVariationViolated {
        amp_ratio: f64,
        accel_ratio: f64,
        epsilon: f64,
    },

    #[error("generalized model needs at least one harmonic component (K = 0)")]
    NoHarmonics,

    #[error("invalid sampling rate: fs = {0} (require finite fs > 0)")]
    InvalidSamplingRate(f64),

    #[error("invalid duration: {0} s (require finite duration > 0)")]
    InvalidDuration(f64),

    #[error("time series too short: {got} samples (minimum {min})")]
    SeriesTooShort { got: usize, min: usize },

    #[error("non-finite value at sample {index}")]
    NonFiniteSample { index: usize },

    #[error("cutoff {cutoff} Hz is not below the Nyquist frequency {nyquist} Hz")]
    CutoffAboveNyquist { cutoff: f64, nyquist: f64 },

    #[error("filter order {0} is invalid (require order >= 1)")]
    InvalidFilterOrder(usize),

    #[error("median window of {window} samples exceeds signal length {len}")]
    WindowLongerThanSignal { window: usize, len: usize },

    #[error("median window of {0} samples is too small (minimum 3 after rounding)")]
    WindowTooSmall(usize),

    #[error("upsampling target {target_fs} Hz must exceed the source rate {fs} Hz")]
    UpsampleTargetNotAbove { target_fs: f64, fs: f64 },

    #[error(
        "upsampled length {0:.3} is not integral; choose a rate ratio that yields whole samples"
    )]
    UpsampleLengthNotIntegral(f64),

    #[error("no cycles detected")]
    NoCyclesDetected,

    #[error("landmarks not strictly increasing at position {0}")]
    LandmarksNotIncreasing(usize),

    #[error("landmark {index} out of bounds for signal of {len} samples")]
    LandmarkOutOfBounds { index: usize, len: usize },

    #[error("all pulses rejected")]
    AllPulsesRejected,

    #[error("cycle window too narrow: p = {0} columns (require p >= 3)")]
    WindowTooNarrow(usize),

    #[error("all cycle windows fall outside the signal bounds")]
    NoCyclesInBounds,

    #[error("degenerate cycle: row {0} is constant")]
    DegenerateCycle(usize),

    #[error("need at least {min} cycles, got {got}")]
    TooFewCycles { got: usize, min: usize },

    #[error("non-finite entry in row {row}, column {col}")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("degenerate bandwidth")]
    DegenerateBandwidth,

    #[error("knn bandwidth needs k < N: k = {k}, N = {n}")]
    KnnOutOfRange { k: usize, n: usize },

    #[error("explicit bandwidth must be positive and finite: h = {0}")]
    InvalidBandwidth(f64),

    #[error("isolated point: row {0} has zero kernel degree")]
    IsolatedPoint(usize),

    #[error("alpha must lie in [0, 1]: got {0}")]
    InvalidAlpha(f64),

    #[error("diffusion time must be positive and finite: t = {0}")]
    InvalidDiffusionTime(f64),

    #[error("embedding dimension must satisfy 1 <= d < N: d = {d}, N = {n}")]
    InvalidEmbeddingDim { d: usize, n: usize },

    #[error("eigensolver failed to converge: {0}")]
    EigenFailure(String),

    #[error("spectral sanity check failed: {0}")]
    SpectralCheck(String),

    #[error("zero matrix has no singular direction")]
    ZeroMatrix,

    #[error("need at least {min} support points, got {got}")]
    TooFewSupportPoints { got: usize, min: usize },

    #[error("knots must be strictly increasing at position {0}")]
    KnotsNotIncreasing(usize),

    #[error("trace of {got} samples is shorter than one window (2*{halfwidth}+1)")]
    TraceTooShort { got: usize, halfwidth: usize },

    #[error("scenario `{0}` is not defined")]
    UnknownScenario(String),

    #[error("malformed {what}: {detail}")]
    Malformed { what: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
