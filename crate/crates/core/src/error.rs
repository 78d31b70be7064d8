use thiserror::Error;

/// Errors raised anywhere in the reconstruction pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("sampled values invalid: {0}")]
    InvalidSamples(String),
    #[error("value {value} outside [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("samples are not strictly monotone (consecutive difference {diff:e} at node {index})")]
    NotMonotone { index: usize, diff: f64 },
    #[error("a delta well has no pointwise values")]
    DeltaNotPointwise,
    #[error("no grid node lies within one spacing of x = 0 for the delta well")]
    DeltaOffGrid,
    #[error("unknown catalog row {0} (expected 1..=6)")]
    UnknownRow(usize),
    #[error("eigensolver did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("requested {requested} bound states but only {available} lie below the continuum edge {edge}")]
    TooFewStates {
        requested: usize,
        available: usize,
        edge: f64,
    },
    #[error("mode is not strictly positive at interior node {index} (value {value:e})")]
    NotPositiveMode { index: usize, value: f64 },
    #[error("amplitude A must be nonzero")]
    ZeroA,
    #[error("profile is not a single-extremum even profile: {0}")]
    NotCase2(String),
    #[error("inputs live on different grids")]
    GridMismatch,
    #[error("left and right branches disagree by {deviation:e} (tolerance {tolerance:e})")]
    BranchInconsistency { deviation: f64, tolerance: f64 },
    #[error("kink profile cannot be inverted: {0}")]
    NotInvertible(String),
    #[error("no closed form is known for F in catalog row {0}")]
    NoClosedForm(usize),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("field left the domain of F at t = {t} (u = {u}, domain [{lo}, {hi}]); use a smaller amplitude or an extension policy")]
    RangeExceeded { t: f64, u: f64, lo: f64, hi: f64 },
    #[error("field norm exceeded {limit:e} at t = {t}")]
    Instability { t: f64, limit: f64 },
    #[error("series has {len} samples, need at least {min}")]
    TooShort { len: usize, min: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the numerics rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ConvergenceFailure(_)
                | Error::TooFewStates { .. }
                | Error::Instability { .. }
                | Error::RangeExceeded { .. }
                | Error::BranchInconsistency { .. }
                | Error::NotInvertible(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
