use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("polytope is unbounded in direction of coordinate {0}")]
    UnboundedPolytope(usize),
    #[error("quadratic subproblem is unbounded below; class assumptions violated")]
    UnboundedQp,
    #[error("instance schema error: {0}")]
    Schema(String),
    #[error("condition not applicable: {0}")]
    Inapplicable(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
