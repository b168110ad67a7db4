use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cell index ({i}, {j}) out of range for a {nx} x {ny} cell grid")]
    Index {
        i: usize,
        j: usize,
        nx: usize,
        ny: usize,
    },

    #[error("sub-rectangle not node-aligned or not contained in the grid: {0}")]
    Alignment(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: energy excess {excess:.3e} exceeds {limit:.3e}")]
    Precondition { excess: f64, limit: f64 },

    #[error("solver stalled in stage {stage} (eps = {eps:.3e}): {detail}")]
    SolverStall {
        stage: usize,
        eps: f64,
        detail: String,
    },

    #[error("non-finite value: {0}")]
    Numeric(String),

    #[error("point lies on the graph (distance {0:.3e})")]
    Singular(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
