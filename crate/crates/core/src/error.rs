use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("argument {0} lies outside the closed strip 0 <= Im z <= pi")]
    OutsideStrip(String),
    #[error("inadmissible deformation function: {0}")]
    Inadmissible(String),
    #[error("pole detected: {0}")]
    Pole(String),
    #[error("grid is not closed under the momentum reflection p2 -> -p2")]
    NotReflectionClosed,
    #[error("momentum {0:?} is not on the forward mass shell")]
    OffShell([f64; 3]),
    #[error("wedges are not causally separated: {0}")]
    NotSeparated(String),
    #[error("dense dimension {dim} exceeds the bound {bound}")]
    DimensionBound { dim: usize, bound: usize },
    #[error("analytic continuation overflow: {0}")]
    ContinuationOverflow(String),
    #[error("phase constraint violated in strict mode: {0}")]
    PhaseConstraint(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
