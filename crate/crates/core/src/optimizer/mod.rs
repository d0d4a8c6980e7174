//! Prototype shaping optimization: convex iteration for a rank-one, minimum
//! out-of-subband-power start, then majorization-minimization of the lifted
//! instantaneous-power variance under OSBEP, NEP, energy and PSD constraints.

mod algorithm;
mod kernel;
mod rank;
pub mod sdp;

pub use algorithm::{run_algorithm1, write_trace_csv, OptimizerOutcome, OptimizerParams, TraceRow};
pub use kernel::{lambda_max, QuarticKernel, LAMBDA_MARGIN};
pub use rank::{build_direction_matrix, extract_rank_one, rank_ratio};
pub use sdp::{nep_lifted, nep_vectors, ConvexSubproblem, NepConstraint, SdpSolution, SolverOptions};

use crate::dsp::ComplexMat;
use crate::error::Result;

/// Solves the MM subproblem `min tr(V X)` (see [`sdp`]).
pub fn solve_sdp_subproblem(problem: &ConvexSubproblem, hint: Option<&ComplexMat>) -> Result<SdpSolution> {
    sdp::solve(problem, hint, &SolverOptions::default())
}

/// Solves the CI subproblem `min w tr(Y B) + tr(Omega Y)` without the OSBEP bound.
pub fn solve_ci_subproblem(
    b: &ComplexMat,
    w: f64,
    omega: &ComplexMat,
    rho: f64,
    k: usize,
    m: usize,
    eps: f64,
    hint: Option<&ComplexMat>,
) -> Result<SdpSolution> {
    let objective = b * crate::dsp::C64::new(w, 0.0) + omega;
    let prob = ConvexSubproblem::new(objective, omega.clone(), None, rho, k, m, eps)?;
    sdp::solve(&prob, hint, &SolverOptions::default())
}
