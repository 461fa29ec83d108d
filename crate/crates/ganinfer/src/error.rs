//! Crate-wide error type.

use std::fmt;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by grid construction, surface evaluation, resampling and
/// experiment plumbing.
#[derive(Debug)]
pub enum Error {
    /// Vector lengths or grid dimensions do not line up.
    DimensionMismatch { context: &'static str, expected: usize, actual: usize },
    /// A box bound pair has an empty interior (lower >= upper).
    EmptyBoxInterior { axis: usize, lower: f64, upper: f64 },
    /// A grid axis was requested with fewer than two points.
    CountTooSmall { axis: usize, count: usize },
    /// Two objects refer to different grids.
    GridMismatch,
    /// An operation over a marginal function was given the wrong domain.
    DomainMismatch { context: &'static str },
    /// A set operation requires a non-empty set.
    EmptySet { context: &'static str },
    /// A sample-based operation requires a non-empty sample.
    EmptySample { context: &'static str },
    /// Negative radius or slack where a nonnegative one is required.
    NegativeLevel { context: &'static str, value: f64 },
    /// Slackness exponent outside the open interval (0, 1/2).
    InvalidSlacknessExponent { exponent: f64 },
    /// Slackness scale must be strictly positive.
    InvalidSlacknessScale { scale: f64 },
    /// Coverage level alpha outside (0, 1).
    InvalidAlpha { alpha: f64 },
    /// Sample too small for the requested resampling scheme.
    SampleTooSmall { context: &'static str, n: usize, minimum: usize },
    /// A scale factor that must be positive was not.
    NonPositiveScale { value: f64 },
    /// A parameter point lies outside the problem box.
    PointOutsideBox { theta: Vec<f64> },
    /// The kernel produced a NaN or infinite value.
    NonFiniteKernel { row: Option<usize>, theta: Vec<f64>, value: f64 },
    /// A grid function was constructed with non-finite values.
    NonFiniteValue { index: usize, value: f64 },
    /// No population oracle and no Monte Carlo budget supplied.
    MissingPopulationOracle,
    /// No ground-truth solution set is available for the experiment.
    MissingGroundTruth,
    /// Kernel values at the requested points carry (numerically) zero variance.
    DegenerateVariance { index: usize, variance: f64 },
    /// Covariance matrix fails the positive semidefiniteness check.
    CovarianceNotPsd { min_eigenvalue: f64 },
    /// Solution points do not have pairwise distinct gamma and delta blocks.
    SolutionsNotDistinct,
    /// Configuration file or experiment configuration is invalid.
    InvalidConfig(String),
    /// Underlying I/O failure.
    Io(std::io::Error),
    /// JSON (de)serialization failure.
    Json(serde_json::Error),
    /// Malformed CSV input.
    CsvParse { line: usize, message: String },
}

impl Error {
    /// Process exit code for the CLI: 2 for configuration problems, 3 for
    /// numerical failures discovered while computing.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::NonFiniteKernel { .. }
            | Error::NonFiniteValue { .. }
            | Error::DegenerateVariance { .. }
            | Error::CovarianceNotPsd { .. }
            | Error::SolutionsNotDistinct => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { context, expected, actual } => {
                write!(f, "{context}: expected length {expected}, got {actual}")
            }
            Error::EmptyBoxInterior { axis, lower, upper } => {
                write!(f, "box axis {axis} has empty interior: [{lower}, {upper}]")
            }
            Error::CountTooSmall { axis, count } => {
                write!(f, "grid axis {axis} needs at least 2 points, got {count}")
            }
            Error::GridMismatch => write!(f, "operands live on different grids"),
            Error::DomainMismatch { context } => {
                write!(f, "{context}: grid function has the wrong domain")
            }
            Error::EmptySet { context } => write!(f, "{context}: set is empty"),
            Error::EmptySample { context } => write!(f, "{context}: sample is empty"),
            Error::NegativeLevel { context, value } => {
                write!(f, "{context}: level must be nonnegative, got {value}")
            }
            Error::InvalidSlacknessExponent { exponent } => {
                write!(f, "slackness exponent must lie in (0, 0.5), got {exponent}")
            }
            Error::InvalidSlacknessScale { scale } => {
                write!(f, "slackness scale must be positive, got {scale}")
            }
            Error::InvalidAlpha { alpha } => {
                write!(f, "alpha must lie in (0, 1), got {alpha}")
            }
            Error::SampleTooSmall { context, n, minimum } => {
                write!(f, "{context}: sample size {n} below minimum {minimum}")
            }
            Error::NonPositiveScale { value } => {
                write!(f, "scale must be positive, got {value}")
            }
            Error::PointOutsideBox { theta } => {
                write!(f, "parameter point {theta:?} lies outside the box")
            }
            Error::NonFiniteKernel { row, theta, value } => match row {
                Some(i) => write!(f, "kernel returned {value} at sample row {i}, theta {theta:?}"),
                None => write!(f, "kernel returned {value} at theta {theta:?}"),
            },
            Error::NonFiniteValue { index, value } => {
                write!(f, "non-finite value {value} at flat index {index}")
            }
            Error::MissingPopulationOracle => {
                write!(f, "no population oracle and no Monte Carlo fallback budget")
            }
            Error::MissingGroundTruth => {
                write!(f, "experiment requires a known solution set or population oracle")
            }
            Error::DegenerateVariance { index, variance } => {
                write!(f, "kernel variance {variance} at solution point {index} is degenerate")
            }
            Error::CovarianceNotPsd { min_eigenvalue } => {
                write!(f, "covariance matrix not PSD (min eigenvalue {min_eigenvalue})")
            }
            Error::SolutionsNotDistinct => {
                write!(f, "solution points do not have pairwise distinct gamma and delta blocks")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Io(e) => write!(f, "i/o error: {e}"),
            Error::Json(e) => write!(f, "json error: {e}"),
            Error::CsvParse { line, message } => write!(f, "csv parse error at line {line}: {message}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            Error::Json(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e)
    }
}
