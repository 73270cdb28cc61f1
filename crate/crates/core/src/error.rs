use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid variable `{name}`: {reason}")]
    InvalidVariable { name: String, reason: String },

    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("self-loop on `{0}`")]
    SelfLoop(String),

    #[error("duplicate arc {from} -> {to}")]
    DuplicateArc { from: String, to: String },

    #[error("graph contains a cycle through {0:?}")]
    CycleDetected(Vec<String>),

    #[error("missing CPT for `{0}`")]
    MissingCpt(String),

    #[error("CPT for `{node}` does not match the graph: {reason}")]
    CptShapeMismatch { node: String, reason: String },

    #[error("CPT for `{node}`, row {row}: {reason}")]
    InvalidProbabilities { node: String, row: usize, reason: String },

    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),

    #[error("conditioning event has probability {probability:e}")]
    ZeroConditioningEvent { probability: f64 },

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("path-specific effect is unidentifiable; recanting witnesses: {witnesses:?}")]
    Unidentifiable { witnesses: Vec<String> },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error(
        "QP solver failed after {iterations} iterations: {message} \
         (primal residual {primal_residual:e}, stationarity residual {stationarity_residual:e})"
    )]
    SolverFailure {
        message: String,
        iterations: usize,
        primal_residual: f64,
        stationarity_residual: f64,
    },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("row {row}, column `{column}`: value `{value}` is outside the domain")]
    OutOfDomainValue {
        row: usize,
        column: String,
        value: String,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("chi-square baseline is degenerate: {0}")]
    DegenerateBaseline(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
