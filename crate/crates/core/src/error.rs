use thiserror::Error;

/// Errors produced by every operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("data matrix is empty ({rows}x{cols})")]
    EmptyMatrix { rows: usize, cols: usize },
    #[error("data matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("data matrix has no nonzero singular value")]
    AllZeroMatrix,
    #[error("sample eigenvalues {first} and {second} coincide within the rank tolerance")]
    DegenerateSpectrum { first: f64, second: f64 },
    #[error("operation needs at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("rank tolerance {0} is outside (0, 1)")]
    RankToleranceOutOfRange(f64),
    #[error("kappa = {0} is outside [0, 1)")]
    KappaOutOfRange(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("log argument {value} <= 0 for pair ({i}, {j})")]
    LogDomainError { i: usize, j: usize, value: f64 },
    #[error("eigenvalue estimate at index {index} is not positive ({value})")]
    NonPositiveLambda { index: usize, value: f64 },
    #[error("truth matrix is singular; {0} loss needs its inverse")]
    SingularTruth(&'static str),
    #[error("estimate is singular; {0} loss is unbounded for it (request role inversion or use an invertible estimate)")]
    SingularEstimate(&'static str),
    #[error("reference estimator is singular and the loss needs its inverse")]
    SingularReference,
    #[error("reference losses sum to zero")]
    ZeroReference,
    #[error("bootstrap replicate {replicate} stayed rank-degenerate after {attempts} redraws")]
    ResampleDegenerate { replicate: usize, attempts: usize },
    #[error("loss {0} has no cross-validation risk estimate")]
    UnsupportedLoss(&'static str),
    #[error("matrix from file is not symmetric positive definite: {0}")]
    FileNotSpd(String),
    #[error("factorization failed: {0}")]
    FactorizationFailure(String),
    #[error("plug-in covariance is not invertible for kappa = {0}")]
    NonInvertiblePlugin(f64),
    #[error("invalid kappa grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("replicate {index} failed: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerical pipeline (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::AllZeroMatrix
            | Error::DegenerateSpectrum { .. }
            | Error::LogDomainError { .. }
            | Error::NonPositiveLambda { .. }
            | Error::SingularTruth(_)
            | Error::SingularEstimate(_)
            | Error::SingularReference
            | Error::ZeroReference
            | Error::ResampleDegenerate { .. }
            | Error::FactorizationFailure(_)
            | Error::NonInvertiblePlugin(_) => true,
            Error::Replicate { source, .. } => source.is_numeric(),
            _ => false,
        }
    }

    pub(crate) fn at_replicate(self, index: usize) -> Error {
        match self {
            e @ Error::Replicate { .. } => e,
            e => Error::Replicate {
                index,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
