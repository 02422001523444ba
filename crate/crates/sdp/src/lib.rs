//! Dense primal-dual interior-point solver for standard-form block-diagonal
//! semidefinite programs.
//!
//! The primal problem is
//!
//! ```text
//!     maximize   <C, X>
//!     subject to <A_i, X> = a_i   for i = 1..m
//!                X >= 0           (block-diagonal PSD)
//! ```
//!
//! Size-1 blocks model nonnegative scalar variables. The solver is a
//! path-following method with a symmetrized Newton direction and a
//! Mehrotra-style predictor-corrector, forming the dense Schur complement
//! and factoring it by Cholesky. It is intended for moment matrices of a
//! few hundred rows, not for large-scale programs.

mod io;
mod problem;
mod solver;

pub use io::{read_problem, read_solution, write_problem, write_solution};
pub use problem::{BlockMat, SdpError, SdpProblem, SparseSym};
pub use solver::{solve_sdp, IterRecord, SdpSolution, SdpStatus, SolveOptions};
