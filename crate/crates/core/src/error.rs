use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported tensor dimension {0} (expected 1, 2 or 3)")]
    UnsupportedDim(usize),

    #[error("matrix is not symmetric (entry ({row}, {col}) differs by {diff:e})")]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error("elasticity tensor is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("data set is empty")]
    EmptyDataSet,

    #[error("degenerate sampling box: {0}")]
    DegenerateBox(String),

    #[error("transformation strains coincide (a == b)")]
    IdenticalWells,

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid boundary data: {0}")]
    InvalidBoundary(String),

    #[error("stiffness is singular on the free dofs (mechanism); null direction has {} entries", null_direction.len())]
    Mechanism { null_direction: Vec<f64> },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("state is not in the required region: {0}")]
    NotInRegion(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
