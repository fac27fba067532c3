use thiserror::Error;

/// Errors raised by the model, optimizer and game routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// Structural validation failure (shape mismatch, out-of-range parameter).
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    /// Total attraction is zero, so market shares are 0/0.
    #[error("degenerate market: total attraction is zero or fewer than two firms")]
    DegenerateMarket,

    /// A cost denominator evaluated to exactly zero.
    #[error("singular cost: denominator is {denominator}")]
    SingularCost { denominator: f64 },

    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// λ·f_k must be strictly positive for the knowledge-price condition.
    #[error("nonpositive marginal value of knowledge: lambda*f_k = {value}")]
    NonpositiveMarginal { value: f64 },

    /// An iterative method exhausted its budget.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// The output target cannot be produced.
    #[error("infeasible output target {q_target}")]
    InfeasibleTarget { q_target: f64 },

    /// The supplier/buyer split needs an even number of firms.
    #[error("market of {n} firms cannot be split into equal supplier and buyer halves")]
    OddMarket { n: usize },

    /// The subsidized profit is only defined for a negative knowledge price.
    #[error("knowledge price must be negative for the subsidized profit, got {r}")]
    SignContract { r: f64 },
}

impl ModelError {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ModelError::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, ModelError>;
