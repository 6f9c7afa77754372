use thiserror::Error;

/// Errors shared across the diagnostic modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("degenerate factorization: {0}")]
    DegenerateFactorization(String),

    #[error("mixture is not centered: |sum_k pi_k mu_k| = {norm:.3e} exceeds {tol:.1e}")]
    NotCentered { norm: f64, tol: f64 },

    #[error("empty data")]
    EmptyData,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate contrast: {0}")]
    DegenerateContrast(String),

    #[error("insufficient null samples: need at least {needed}, got {got}")]
    InsufficientNullSamples { needed: usize, got: usize },

    #[error("ill-conditioned data: {0}")]
    IllConditionedData(String),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("inconsistent hypothesis: {0}")]
    InconsistentHypothesis(String),

    #[error("contrast evaluation failed on group sample {sample_index} ({element}): {source}")]
    Evaluation {
        sample_index: usize,
        element: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
