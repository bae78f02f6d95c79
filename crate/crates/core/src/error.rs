use thiserror::Error;

/// Failures raised by the solvers, projections and goodness-of-fit routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("zero vector has no unit maximizer")]
    ZeroVector,
    #[error("face of row {row} is empty")]
    EmptyFace { row: usize },
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error("no finite solution: every branch is infeasible or unbounded")]
    NoFiniteSolution,
    #[error("dimension {n} too large for the 1-norm decomposition (limit 16)")]
    DimensionTooLarge { n: usize },
    #[error("no row pair yields a nonzero cost vector")]
    DegeneratePair,
    #[error("right-hand side b is identically zero")]
    BIsZero,
    #[error("all relaxation branches are infeasible")]
    AllBranchesInfeasible,
    #[error("relative baseline undefined for row {row} (b_i = 0)")]
    BaselineUndefined { row: usize },
    #[error("baseline denominator is zero")]
    DegenerateBaseline,
    #[error("cost structure C has a negative entry")]
    StructureNotNonneg,
    #[error("structured relaxation returned zero weights")]
    StructuredDegenerate,
    #[error("forward problem is infeasible")]
    InfeasibleForward,
    #[error("forward problem is unbounded")]
    UnboundedForward,
    #[error("problem has no cost structure C")]
    MissingCostStructure,
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// True for errors caused by malformed or out-of-contract input.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid(_)
                | Error::ZeroVector
                | Error::BIsZero
                | Error::DimensionTooLarge { .. }
                | Error::BaselineUndefined { .. }
                | Error::StructureNotNonneg
                | Error::MissingCostStructure
                | Error::Unsupported(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
