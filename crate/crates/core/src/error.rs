use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape error: expected {expected} nodes, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("grid mismatch: fields live on different grids")]
    GridMismatch,

    #[error("under-resolved boundary: phase jump {jump:.4} rad between samples {index} and {next}")]
    UnderResolvedBoundary { index: usize, next: usize, jump: f64 },

    #[error("no global lifting exists for boundary data of degree {degree}")]
    NoLifting { degree: i64 },

    #[error("hypothesis violated: deg(g) must be 0 (found {degree})")]
    Hypothesis { degree: i64 },

    #[error("solver did not converge after {steps} steps (residual {residual:.3e})")]
    NotConverged {
        steps: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("projection singularity: |(u, v)| = {modulus:.3e} at node {node}")]
    ProjectionSingularity { node: usize, modulus: f64 },

    #[error("lifting unavailable: min |u| = {min_modulus:.4} is below 1/2")]
    LiftingUnavailable { min_modulus: f64 },

    #[error("insufficient data: {levels} epsilon levels, at least 3 are required")]
    InsufficientData { levels: usize },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
