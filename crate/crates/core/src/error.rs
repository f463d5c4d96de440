use thiserror::Error;

/// Errors produced by the simulator, optimizer and experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse scenario: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("invalid scenario: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("convergence speed {rho} gives no finite convergence round")]
    Divergent { rho: f64 },

    #[error("no feasible design found after {iterations} dual iterations")]
    NoFeasibleDesign { iterations: usize },

    #[error("singular Gram matrix: pooled features do not span the model space")]
    SingularGram,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
