use std::time::Instant;

use super::{Family, ProblemInstance};
use crate::error::Result;
use crate::precond::{gram_precond, scaled_identity, Preconditioner};
use crate::solver::{ergodic_gap_bound, InnerKind, SaddleProblem, Solver, SolverConfig, StopRule};

/// Output of [`reference_solve`].
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    /// `Φ(x*)` with indicator terms dropped; see `feas` for the constraint residual.
    pub phi: f64,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub feas: f64,
    /// Ergodic gap bound at termination.
    pub certificate: f64,
    /// False when the iteration budget ran out before the residual rule fired.
    pub certified: bool,
    pub outer_iters: usize,
}

#[derive(Debug, Clone)]
pub struct ReferenceOptions {
    pub tau: f64,
    /// Inner sweeps per outer step when block sweeps apply.
    pub p: usize,
    pub max_outer: usize,
    pub time_budget_s: Option<f64>,
}

impl ReferenceOptions {
    /// Steps tuned on desk-scale instances; these differ from the table settings.
    pub fn for_instance(instance: &ProblemInstance) -> Self {
        let tau = match instance.family {
            Family::Emd => 0.01,
            _ => 1.0,
        };
        Self {
            tau,
            p: 4,
            max_outer: 10_000_000,
            time_budget_s: None,
        }
    }
}

/// High-accuracy oracle for a built instance: preconditioned PDHG iterated until the
/// scaled step residual drops below `tol`.
pub fn reference_solve(instance: &ProblemInstance, tol: f64) -> Result<ReferenceSolution> {
    let opts = ReferenceOptions::for_instance(instance);
    let (m1, m2) = instance.prepdhg_pair(opts.tau)?;
    reference_solve_with(&instance.problem, m1, m2, tol, &opts)
}

/// [`reference_solve`] on a bare problem with `M1 = I/τ`, `M2 = τAAᵀ`.
pub fn reference_solve_problem(problem: &SaddleProblem, tol: f64, opts: &ReferenceOptions) -> Result<ReferenceSolution> {
    let m1 = scaled_identity(opts.tau, problem.n())?;
    let m2 = gram_precond(&problem.a, opts.tau)?;
    reference_solve_with(problem, m1, m2, tol, opts)
}

/// Uses block sweeps for the dual subproblem where an ordering exists, and a
/// tightly solved subproblem otherwise.
pub fn reference_solve_with(
    problem: &SaddleProblem,
    m1: Preconditioner,
    m2: Preconditioner,
    tol: f64,
    opts: &ReferenceOptions,
) -> Result<ReferenceSolution> {
    let stop = StopRule {
        phi_star: None,
        tol_residual: tol,
        max_outer: opts.max_outer,
        time_budget_s: opts.time_budget_s,
        ..StopRule::default()
    };
    let bcd = SolverConfig::iprepdhg(m1.clone(), m2.clone(), InnerKind::Bcd, opts.p);
    let mut config = match Solver::new(problem, bcd.clone()) {
        Ok(_) => bcd,
        Err(_) => {
            let mut c = SolverConfig::prepdhg_exact(m1.clone(), m2.clone());
            c.exact_tol = (tol * 1e-2).max(1e-14);
            c
        }
    };
    config.stop = stop;
    config.trace_time = false;
    config.trace_stride = usize::MAX;
    let start = Instant::now();
    let result = Solver::new(problem, config)?.run()?;
    log::info!(
        "reference solve: {} outer iterations in {:.2}s",
        result.outer_iters,
        start.elapsed().as_secs_f64()
    );
    let state = result.state;
    let n = problem.n();
    let m = problem.m();
    let certificate = ergodic_gap_bound(
        &vec![0.0; n],
        &vec![0.0; m],
        &state.ergodic_x(),
        &state.ergodic_z(),
        &m1,
        &m2,
        &problem.a,
        state.count.max(1),
    )?;
    let ax = problem.a.apply(&state.x)?;
    let (phi, feas) = problem.objective_split(&state.x, &ax);
    Ok(ReferenceSolution {
        phi,
        feas,
        x: state.x,
        z: state.z,
        certificate,
        certified: result.status == crate::solver::Status::Converged,
        outer_iters: result.outer_iters,
    })
}
