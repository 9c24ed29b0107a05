//! Discrete feasibility problems for Euler-type conditions on a sampled field,
//! their solution, and independent certificate verification.

mod extract;
mod problem;
mod solver;
pub mod sparse;
mod verify;

pub use extract::{extract_f, reeb_rescale, FirstIntegralReport, ReebReport, T_ZERO};
pub use problem::{assemble, FeasibilityProblem, Mode, POSITIVITY_FLOOR};
pub use solver::{solve, solve_with_clock, SolveReport, SolverDiagnostics, SolverOptions, Status};
pub use verify::{
    cycle_pairings, equality_residual, farkas_adjoint, primal_norm_cap, verify_dual, verify_primal,
    verify_farkas, verify_primal_with, DualCertificate, DualResiduals, FarkasReport, PrimalCertificate, PrimalResiduals, DEFAULT_EPS_CYCLE,
    DEFAULT_EPS_DUAL, FLOOR_SLACK,
};
