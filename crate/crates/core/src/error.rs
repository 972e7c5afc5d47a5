use thiserror::Error;

/// Errors raised by grid construction, expression evaluation and the
/// verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },

    #[error("unknown variable `{name}` at node {coords:?}")]
    UnknownVariable { name: String, coords: Vec<f64> },

    #[error("expression is not finite at node {coords:?}: {detail}")]
    NonFiniteExpression { coords: Vec<f64>, detail: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),

    #[error("unsupported dimension {0} (at most 3 supported here)")]
    UnsupportedDimension(usize),

    #[error("value at node {index} is not finite")]
    NotFiniteAtPoint { index: usize },

    #[error("point {0:?} is not a grid node")]
    NotANode(Vec<f64>),

    #[error("point is not in the set")]
    PointNotInSet,

    #[error("point is not on the graph")]
    NotOnGraph,

    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),

    #[error("linear map does not send grid nodes to grid nodes: {0}")]
    NotNodePreserving(String),

    #[error("0 is not a node of the parameter grid")]
    ZeroNotOnGrid,

    #[error("x-grid is not adapted to the constraint values: g(y) = {0:?} is not a node")]
    GridNotAdapted(Vec<f64>),

    #[error("object has no analytic provenance and cannot be rebuilt on a refined grid")]
    NotRefinable,

    #[error("raster format: {0}")]
    RasterFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
