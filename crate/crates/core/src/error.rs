use crate::conic::SolveStatus;
use crate::poly::PolyWireError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The Gram basis cannot produce a monomial that the target polynomial contains.
    #[error("structurally infeasible: monomial {0} is not expressible in the Gram basis")]
    StructuralInfeasibility(String),

    /// The conic solver did not return an optimal point.
    #[error("solver returned {status:?}: {context}")]
    Solver { status: SolveStatus, context: String },

    #[error("certificate check failed: {0}")]
    Certificate(String),

    #[error("convex subproblem failed: {0}")]
    Subproblem(String),

    #[error(transparent)]
    Wire(#[from] PolyWireError),
}

impl Error {
    pub(crate) fn solver(status: SolveStatus, context: impl Into<String>) -> Self {
        Error::Solver {
            status,
            context: context.into(),
        }
    }
}
