use thiserror::Error;

/// Errors raised by the library. Each variant maps onto one CLI exit code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BmgError {
    #[error("partitions or measures reference different spaces")]
    MismatchedSpace,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("refinement did not converge: best certified bound {best_bound:e} after {blocks} blocks (requested {requested:e})")]
    NonConvergence {
        best_bound: f64,
        requested: f64,
        blocks: usize,
    },

    #[error("{side} side failed: {source}")]
    SideFailed {
        side: &'static str,
        #[source]
        source: Box<BmgError>,
    },

    #[error("process is not adapted: value at time index {time} is not constant on block {block}")]
    NotAdapted { time: usize, block: usize },

    #[error("assumption violated: {0}")]
    AssumptionViolation(String),

    #[error("ratio components disagree at lattice point {point}: deviation {deviation:e} exceeds {tol:e}")]
    CrossComponent { point: i64, deviation: f64, tol: f64 },

    #[error("lattice alignment: {0}")]
    LatticeAlignment(String),

    #[error("size budget exceeded: {needed} atoms requested, limit {limit}")]
    SizeBudget { needed: usize, limit: usize },

    #[error("construction infeasible after {attempts} attempts: {reason}")]
    ConstructionInfeasible { attempts: usize, reason: String },
}

impl BmgError {
    pub(crate) fn on_side(self, side: &'static str) -> Self {
        BmgError::SideFailed {
            side,
            source: Box::new(self),
        }
    }

    /// True when the error (or the error it wraps) is an engine non-convergence.
    pub fn is_non_convergence(&self) -> bool {
        match self {
            BmgError::NonConvergence { .. } => true,
            BmgError::SideFailed { source, .. } => source.is_non_convergence(),
            _ => false,
        }
    }

    /// True for violations of the change-of-measure hypotheses.
    pub fn is_assumption_violation(&self) -> bool {
        match self {
            BmgError::AssumptionViolation(_) | BmgError::CrossComponent { .. } => true,
            BmgError::SideFailed { source, .. } => source.is_assumption_violation(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, BmgError>;
