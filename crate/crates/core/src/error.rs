use thiserror::Error;

/// Errors produced by game construction, feedback computation and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed game document: {0}")]
    Parse(String),

    #[error("invalid game ({invariant}) at node {node:?}: {detail}")]
    Validation {
        invariant: &'static str,
        node: Option<usize>,
        detail: String,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible perturbed simplex: gamma * sum(nu) = {0} > 1")]
    InfeasibleSimplex(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("iteration budget exhausted after {iterations} iterations, best gap {best_gap:e}")]
    BudgetExhausted { iterations: usize, best_gap: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    pub(crate) fn validation(invariant: &'static str, node: Option<usize>, detail: impl Into<String>) -> Self {
        Error::Validation {
            invariant,
            node,
            detail: detail.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
