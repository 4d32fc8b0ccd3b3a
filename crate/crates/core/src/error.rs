use thiserror::Error;

/// Errors produced by structure validation, model evaluation, fitting and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("hyperedge list is empty")]
    EmptyHyperedges,

    #[error("hyperedge {edge} references vertex {vertex} not in the vertex set")]
    UnknownVertex { edge: String, vertex: u32 },

    #[error("vertex {0} is not in the vertex set")]
    VertexNotFound(u32),

    #[error("invalid structure: {0}")]
    Structure(String),

    #[error("cherry tree has a single cluster; no linked pair to merge")]
    SingleCluster,

    #[error("truncation level {level} out of range 1..={max}")]
    LevelOutOfRange { level: usize, max: usize },

    #[error("parameter {value} outside the {family} domain")]
    ParameterDomain { family: &'static str, value: f64 },

    #[error("kendall tau {tau} is not attainable by the {family} family")]
    UnattainableTau { family: &'static str, tau: f64 },

    #[error("need at least {required} observations, got {got}")]
    TooFewObservations { required: usize, got: usize },

    #[error("column {0} is constant; rank transform and tau are undefined")]
    ConstantColumn(usize),

    #[error("conditional distribution of {target} given {given} is not realizable in this structure")]
    NotRealizable { target: u32, given: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("root search failed to converge ({0})")]
    NonConvergence(&'static str),

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("density evaluator returned a nonpositive value {value} for {context}")]
    NonpositiveDensity { context: String, value: f64 },

    #[error("family pool is empty")]
    EmptyFamilyPool,

    #[error("{0}")]
    InvalidInput(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures caused by malformed input files rather than by the
    /// mathematical content of a request. The CLI maps these to exit code 2.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Io(_) | Error::Json(_) | Error::Csv(_)
        )
    }
}
