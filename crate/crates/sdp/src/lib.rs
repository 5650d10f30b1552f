//! Dense primal-dual interior-point solver for semidefinite programs in
//! linear-matrix-inequality form:
//!
//! ```text
//! minimize    cᵀy
//! subject to  Ay = b
//!             F_j0 + Σᵢ yᵢ F_ji ⪰ 0   for every block j
//! ```
//!
//! Blocks whose coefficient matrices are single symmetric unit cells (Gram
//! matrices of sum-of-squares programs) are recognized and handled in their
//! dual scaling, and variables that appear in no block are treated as free
//! variables in an augmented Schur system.

mod presolve;
mod problem;
mod sdpa;
mod solution;
mod solver;

pub use problem::{LmiBlock, SdpProblem, SparseSym};
pub use sdpa::to_sdpa;
pub use solution::{
    dual_objective, dual_residual_vector, residuals, Residuals, SdpSolution, SdpStatus,
    SolveOptions,
};
pub use solver::solve;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SdpError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("block side {got} does not match {expected}")]
    BlockSide { expected: usize, got: usize },
    #[error("{what} has length {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("variable index {index} out of range for {n} variables")]
    VariableIndex { index: usize, n: usize },
}
