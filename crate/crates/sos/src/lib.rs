//! Polynomials in (u, b) variables, degree-4 monomial bases and moment
//! matrices, and the compiler from constrained pseudoexpectation programs to
//! standard-form semidefinite programs.
//!
//! A degree-4 pseudoexpectation is a linear functional on polynomials of
//! degree at most 4 whose moment matrix over the chosen basis is PSD, with
//! pE[1] = 1. Programs maximize a linear objective in the moments subject to
//! polynomial equalities (localized by basis monomials) and scalar
//! inequalities pE[h] >= 0.

mod basis;
mod poly;
mod program;

pub use basis::{BasisMode, MonomialBasis};
pub use poly::{Monomial, Polynomial};
pub use program::{
    compile_feasibility, compile_program, max_pe_quadform, sos_bernstein_bound, Compiled,
    Diagnostics, Program, PseudoExpectation, SosError, Solved,
};

// Re-export the solver knobs callers need when driving compiled programs.
pub use ht_sdp::{SdpStatus, SolveOptions};
