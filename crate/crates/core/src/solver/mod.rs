//! Outer algorithms, dual-subproblem iterators, theory constants and diagnostics.

mod diagnostics;
mod inner;
mod problem;
mod run;
mod theory;

pub use diagnostics::{admm_dual_step, dual_transform, ergodic_gap_bound, lyapunov, relative_error_residual};
pub use inner::{
    fista, inner_bcd_epoch, inner_fista_restart, inner_proxgrad, solve_exact, BcdPlan, BcdWork, FistaOutput,
    ZSubproblem,
};
pub use problem::SaddleProblem;
pub use run::{
    pdhg_step, prepdhg_x_step, run, Algorithm, ConvergenceTrace, InnerKind, IterateState, RunResult, Solver,
    SolverConfig, Status, StepInfo, StopRule, TraceRecord, TRACE_HEADER,
};
pub use theory::{
    bcd_gamma_bounds, bcd_gamma_feasible, bcd_largest_feasible_gamma, bcd_rate, c_bcd, c_proxgrad, proxgrad_rate,
};
