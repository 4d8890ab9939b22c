use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integration diverged at step {step}")]
    IntegrationDiverged { step: usize },

    #[error("snapshot pairs mix different sampling intervals ({0} vs {1})")]
    MixedSamplingIntervals(f64, f64),

    #[error("degenerate dictionary: all singular values truncated")]
    DegenerateDictionary,

    #[error("eigenvector matrix is numerically singular (cond = {cond:.3e})")]
    IllConditionedEigendecomposition { cond: f64 },

    #[error("trajectory endpoint not within tolerance of any attractor target")]
    UnresolvedBasin,

    #[error("training set contains a single class; indicator would be constant")]
    SingleClassTraining,

    #[error("group action does not match the expected form: {0}")]
    WrongAction(String),

    #[error("linear algebra backend failure: {0}")]
    LinAlg(#[from] ndarray_linalg::error::LinalgError),
}
