use thiserror::Error;

/// Errors produced by mesh construction, element assembly and the eigensolver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),
    #[error("zero-length edge")]
    ZeroLengthEdge,
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("unsupported mesh request: {0}")]
    Unsupported(String),
    #[error("refinement produced degenerate geometry: {0}")]
    RefineGeometry(String),
    #[error("degenerate element: {0}")]
    DegenerateElement(String),
    #[error("boundary condition mismatch: {0}")]
    BcMismatch(String),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("eigensolver failed to converge: {0}")]
    IterationFailure(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
