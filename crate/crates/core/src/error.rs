use thiserror::Error;

#[derive(Debug, Error)]
pub enum ShapeError {
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("affinely degenerate point set: affine rank {rank} < dimension {dim}")]
    FlatHull { rank: usize, dim: usize },

    #[error("inconsistent volume oracle: {0}")]
    Oracle(String),

    #[error("infeasible packing: {0}")]
    InfeasiblePacking(String),

    #[error("rejection sampler acceptance rate {rate:.3e} below 1e-6")]
    Envelope { rate: f64 },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("covariance estimate is rank deficient (rank {rank} of {dim})")]
    RankDeficient { rank: usize, dim: usize },

    #[error("outside the regime of validity: {0}")]
    OutOfRegime(String),

    #[error("no root in (0, 1]: {0}")]
    OutOfRange(String),

    #[error("insufficient data: need at least {needed} distinct sample sizes, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<ShapeError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ShapeError {
    pub fn context(self, context: impl Into<String>) -> Self {
        ShapeError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = ShapeError> = std::result::Result<T, E>;
