use std::fmt::Write as _;
use std::time::Instant;

use super::diagnostics::{lyapunov_with_adjoint, relative_error_residual};
use super::inner::{fista, inner_proxgrad, solve_exact, BcdPlan, BcdWork, ZSubproblem};
use super::problem::SaddleProblem;
use crate::error::{check_len, Error, Result};
use crate::operators::{norm, NORM_DEFAULT_ITERS, NORM_DEFAULT_TOL};
use crate::precond::Preconditioner;
use crate::prox::Metric;

#[derive(Debug, Clone, PartialEq)]
pub enum Algorithm {
    /// Original PDHG with scalar steps, `1/(τσ) ≥ ‖A‖²`.
    Pdhg { tau: f64, sigma: f64 },
    /// Preconditioned PDHG with the dual subproblem solved to `exact_tol`.
    PrePdhgExact,
    /// Preconditioned PDHG with `p` applications of the inner iterator.
    IPrePdhg,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerKind {
    ProxGrad { gamma: f64 },
    FistaRestart { gamma: f64 },
    /// Closed-form color-block sweeps; needs a Gram (or block-diagonal) `M2`.
    Bcd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StopRule {
    /// Optimal value for the relative objective gap `δ = |Φ − Φ*|/|Φ*|`.
    pub phi_star: Option<f64>,
    pub tol_obj: f64,
    /// With `phi_star`, also require the feasibility distance below this.
    pub tol_feas: Option<f64>,
    /// Residual rule used when `phi_star` is absent.
    pub tol_residual: f64,
    pub max_outer: usize,
    pub time_budget_s: Option<f64>,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            phi_star: None,
            tol_obj: 1e-6,
            tol_feas: None,
            tol_residual: 1e-8,
            max_outer: 100_000,
            time_budget_s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub m1: Option<Preconditioner>,
    pub m2: Option<Preconditioner>,
    pub inner: InnerKind,
    pub p: usize,
    pub stop: StopRule,
    /// Tolerance of the subproblem solve for [`Algorithm::PrePdhgExact`].
    pub exact_tol: f64,
    pub rel_error_diag: bool,
    pub lyapunov_diag: bool,
    /// Record every `trace_stride`-th iteration (and the last).
    pub trace_stride: usize,
    /// Record wall time in the trace; off gives byte-identical traces.
    pub trace_time: bool,
}

impl SolverConfig {
    pub fn pdhg(tau: f64, sigma: f64) -> Self {
        Self::base(Algorithm::Pdhg { tau, sigma }, None, None, InnerKind::ProxGrad { gamma: sigma }, 1)
    }

    pub fn prepdhg_exact(m1: Preconditioner, m2: Preconditioner) -> Self {
        Self::base(Algorithm::PrePdhgExact, Some(m1), Some(m2), InnerKind::Bcd, 1)
    }

    pub fn iprepdhg(m1: Preconditioner, m2: Preconditioner, inner: InnerKind, p: usize) -> Self {
        Self::base(Algorithm::IPrePdhg, Some(m1), Some(m2), inner, p)
    }

    fn base(
        algorithm: Algorithm,
        m1: Option<Preconditioner>,
        m2: Option<Preconditioner>,
        inner: InnerKind,
        p: usize,
    ) -> Self {
        Self {
            algorithm,
            m1,
            m2,
            inner,
            p,
            stop: StopRule::default(),
            exact_tol: 1e-12,
            rel_error_diag: false,
            lyapunov_diag: false,
            trace_stride: 1,
            trace_time: true,
        }
    }

    pub fn with_stop(mut self, stop: StopRule) -> Self {
        self.stop = stop;
        self
    }
}

/// Current iterate, running ergodic sums, and the dual-form shadow variables.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub sum_x: Vec<f64>,
    pub sum_z: Vec<f64>,
    pub count: usize,
    /// `y^{k+1} = M1 x^k − Aᵀz^k − M1 x^{k+1}` when Lyapunov monitoring is on.
    pub y: Option<Vec<f64>>,
    /// `u^{k+1} = M1 x^{k+1}` when Lyapunov monitoring is on.
    pub u: Option<Vec<f64>>,
}

impl IterateState {
    pub fn new(x: Vec<f64>, z: Vec<f64>) -> Self {
        let (n, m) = (x.len(), z.len());
        Self {
            x,
            z,
            sum_x: vec![0.0; n],
            sum_z: vec![0.0; m],
            count: 0,
            y: None,
            u: None,
        }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self::new(vec![0.0; n], vec![0.0; m])
    }

    fn accumulate(&mut self) {
        for (s, v) in self.sum_x.iter_mut().zip(&self.x) {
            *s += v;
        }
        for (s, v) in self.sum_z.iter_mut().zip(&self.z) {
            *s += v;
        }
        self.count += 1;
    }

    pub fn ergodic_x(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.sum_x.iter().map(|v| v / n).collect()
    }

    pub fn ergodic_z(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.sum_z.iter().map(|v| v / n).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub obj: f64,
    pub delta: Option<f64>,
    pub feas: Option<f64>,
    pub dz_norm: f64,
    pub err_ratio: Option<f64>,
    pub lyapunov: Option<f64>,
    pub time_s: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
}

pub const TRACE_HEADER: &str = "k,obj,delta,feas,dz_norm,err_ratio,lyapunov,time_s";

impl ConvergenceTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(TRACE_HEADER);
        s.push('\n');
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{:e},{},{},{:e},{},{},{}",
                r.k,
                r.obj,
                opt(r.delta),
                opt(r.feas),
                r.dz_norm,
                opt(r.err_ratio),
                opt(r.lyapunov),
                r.time_s.map(|t| format!("{t:.6}")).unwrap_or_default()
            );
        }
        s
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    NotConverged,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub state: IterateState,
    pub trace: ConvergenceTrace,
    pub status: Status,
    pub outer_iters: usize,
    pub elapsed_s: f64,
    pub final_obj: f64,
    pub final_delta: Option<f64>,
    pub final_feas: f64,
    /// Total inner iterator applications (`p` per outer iteration).
    pub inner_applications: usize,
}

/// Per-step quantities reported by [`Solver::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub obj: f64,
    pub feas: f64,
    pub dx_norm: f64,
    pub dz_norm: f64,
    pub err_ratio: Option<f64>,
    /// `L^k`, evaluated after the primal step with the previous `z`.
    pub lyapunov: Option<f64>,
    pub inner_applications: usize,
}

enum ZMethod {
    Pdhg { sigma: f64 },
    Exact { plan: Option<BcdPlan> },
    ProxGrad { gamma: f64 },
    Fista { gamma: f64 },
    Bcd { plan: BcdPlan },
}

/// Stateful driver for one run: PDHG, exact PrePDHG, or iPrePDHG.
pub struct Solver<'a> {
    problem: &'a SaddleProblem,
    config: SolverConfig,
    m1_diag: Vec<f64>,
    m2: Option<Preconditioner>,
    method: ZMethod,
    track_adjoint: bool,
    pub state: IterateState,
    ax: Vec<f64>,
    atz: Vec<f64>,
    drift: Vec<f64>,
    work: BcdWork,
    inner_applications: usize,
}

impl<'a> Solver<'a> {
    pub fn new(problem: &'a SaddleProblem, config: SolverConfig) -> Result<Self> {
        let (n, m) = (problem.n(), problem.m());
        if config.p == 0 {
            return Err(Error::Config("inner count p must be >= 1".into()));
        }
        if config.trace_stride == 0 {
            return Err(Error::Config("trace stride must be >= 1".into()));
        }
        let (m1_diag, m2, method) = match &config.algorithm {
            Algorithm::Pdhg { tau, sigma } => {
                if !(*tau > 0.0 && *sigma > 0.0) {
                    return Err(Error::Config("PDHG needs tau, sigma > 0".into()));
                }
                let l = problem.a.op_norm_sq_estimate(NORM_DEFAULT_ITERS, NORM_DEFAULT_TOL)?;
                if tau * sigma * l > 1.0 + 1e-9 {
                    return Err(Error::Config(format!(
                        "PDHG step condition violated: 1/(tau sigma) = {} < ||A||^2 estimate {l}",
                        1.0 / (tau * sigma)
                    )));
                }
                (
                    vec![1.0 / tau; n],
                    Some(Preconditioner::ScaledIdentity {
                        scale: 1.0 / sigma,
                        dim: m,
                    }),
                    ZMethod::Pdhg { sigma: *sigma },
                )
            }
            Algorithm::PrePdhgExact | Algorithm::IPrePdhg => {
                let m1 = config
                    .m1
                    .as_ref()
                    .ok_or_else(|| Error::Config("missing M1".into()))?;
                let m2 = config
                    .m2
                    .clone()
                    .ok_or_else(|| Error::Config("missing M2".into()))?;
                check_len(n, m1.dim(), "M1 dimension")?;
                check_len(m, m2.dim(), "M2 dimension")?;
                let d = m1.as_metric()?.as_slice().to_vec();
                let method = if config.algorithm == Algorithm::PrePdhgExact {
                    let plan = if m2.is_diagonal() {
                        None
                    } else {
                        BcdPlan::new(&m2, &problem.g, None).ok()
                    };
                    ZMethod::Exact { plan }
                } else {
                    match config.inner {
                        InnerKind::ProxGrad { gamma } => ZMethod::ProxGrad { gamma },
                        InnerKind::FistaRestart { gamma } => ZMethod::Fista { gamma },
                        InnerKind::Bcd => ZMethod::Bcd {
                            plan: BcdPlan::new(&m2, &problem.g, None)?,
                        },
                    }
                };
                (d, Some(m2), method)
            }
        };
        let track_adjoint = match &method {
            ZMethod::Bcd { plan } => plan.tracks_adjoint_of(&problem.a),
            _ => false,
        };
        let state = IterateState::zeros(n, m);
        let mut solver = Self {
            problem,
            config,
            m1_diag,
            m2,
            method,
            track_adjoint,
            ax: vec![0.0; m],
            atz: vec![0.0; n],
            drift: vec![0.0; m],
            work: BcdWork::default(),
            inner_applications: 0,
            state,
        };
        solver.sync();
        Ok(solver)
    }

    /// Replaces the iterate and restarts the ergodic sums.
    pub fn set_state(&mut self, x: Vec<f64>, z: Vec<f64>) -> Result<()> {
        check_len(self.problem.n(), x.len(), "initial x")?;
        check_len(self.problem.m(), z.len(), "initial z")?;
        self.state = IterateState::new(x, z);
        self.sync();
        Ok(())
    }

    fn sync(&mut self) {
        self.problem.a.apply_into(&self.state.x, &mut self.ax);
        self.problem.a.apply_adjoint_into(&self.state.z, &mut self.atz);
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn inner_applications(&self) -> usize {
        self.inner_applications
    }

    /// One outer iteration.
    pub fn step(&mut self) -> Result<StepInfo> {
        let problem = self.problem;
        let (n, m) = (problem.n(), problem.m());
        let x_old = self.state.x.clone();
        let z_old = self.state.z.clone();

        // primal step: x = prox^{M1}_f(x − M1⁻¹ Aᵀ z)
        let v: Vec<f64> = (0..n).map(|i| x_old[i] - self.atz[i] / self.m1_diag[i]).collect();
        let mut x_new = vec![0.0; n];
        problem.f.prox_into(&v, Metric::Diag(&self.m1_diag), &mut x_new)?;

        let lyap = if self.config.lyapunov_diag {
            let u: Vec<f64> = (0..n).map(|i| self.m1_diag[i] * x_new[i]).collect();
            let y: Vec<f64> = (0..n)
                .map(|i| self.m1_diag[i] * x_old[i] - self.atz[i] - u[i])
                .collect();
            let m1 = Preconditioner::Diagonal(self.m1_diag.clone());
            let l = lyapunov_with_adjoint(&z_old, &self.atz, &y, &u, &m1, problem)?;
            self.state.y = Some(y);
            self.state.u = Some(u);
            Some(l)
        } else {
            None
        };

        let mut ax_new = vec![0.0; m];
        problem.a.apply_into(&x_new, &mut ax_new);
        for i in 0..m {
            self.drift[i] = -(2.0 * ax_new[i] - self.ax[i]);
        }

        let m2 = self.m2.as_ref().expect("metric set at construction");
        let sub = ZSubproblem::new(&z_old, &self.drift, m2, &problem.g)?;
        let mut z_new = vec![0.0; m];
        let mut adjoint_done = false;
        let applications = match &self.method {
            ZMethod::Pdhg { sigma } => {
                let w: Vec<f64> = (0..m).map(|i| z_old[i] - sigma * self.drift[i]).collect();
                problem.g.conj_prox_into(&w, Metric::Scalar(1.0 / sigma), &mut z_new)?;
                1
            }
            ZMethod::Exact { plan } => {
                z_new = solve_exact(&sub, plan.as_ref(), self.config.exact_tol, 1_000_000)?;
                1
            }
            ZMethod::ProxGrad { gamma } => {
                z_new = inner_proxgrad(&sub, *gamma, self.config.p)?;
                self.config.p
            }
            ZMethod::Fista { gamma } => {
                z_new = fista(&sub, *gamma, self.config.p, 0.0)?.z;
                self.config.p
            }
            ZMethod::Bcd { plan } => {
                plan.run(&sub, self.config.p, &mut z_new, &mut self.work)?;
                if self.track_adjoint {
                    if let Some(w) = self.work.adjoint_delta() {
                        for (a, d) in self.atz.iter_mut().zip(w) {
                            *a += d;
                        }
                        adjoint_done = true;
                    }
                }
                self.config.p
            }
        };
        self.inner_applications += applications;

        let err_ratio = if self.config.rel_error_diag {
            relative_error_residual(&sub, &z_new).ok().map(|(_, r)| r)
        } else {
            None
        };

        if !adjoint_done {
            problem.a.apply_adjoint_into(&z_new, &mut self.atz);
        }
        let dx_norm = diff_norm(&x_new, &x_old);
        let dz_norm = diff_norm(&z_new, &z_old);
        self.ax = ax_new;
        self.state.x = x_new;
        self.state.z = z_new;
        self.state.accumulate();
        let (obj, feas) = problem.objective_split(&self.state.x, &self.ax);
        Ok(StepInfo {
            obj,
            feas,
            dx_norm,
            dz_norm,
            err_ratio,
            lyapunov: lyap,
            inner_applications: applications,
        })
    }

    /// Iterates until a stop rule fires.
    pub fn run(mut self) -> Result<RunResult> {
        let stop = self.config.stop.clone();
        let mut trace = ConvergenceTrace::default();
        let start = Instant::now();
        let mut status = Status::NotConverged;
        let mut k = 0;
        let mut last = None;
        while k < stop.max_outer {
            let info = self.step()?;
            k += 1;
            let elapsed = start.elapsed().as_secs_f64();
            let delta = stop.phi_star.map(|ps| {
                let gap = (info.obj - ps).abs();
                if ps != 0.0 {
                    gap / ps.abs()
                } else {
                    gap
                }
            });
            let done = match delta {
                Some(d) => d < stop.tol_obj && stop.tol_feas.map_or(true, |t| info.feas <= t),
                None => {
                    let scale = 1.0 + norm(&self.state.x) + norm(&self.state.z);
                    info.dx_norm.max(info.dz_norm) / scale < stop.tol_residual
                }
            };
            let out_of_time = stop.time_budget_s.is_some_and(|b| elapsed >= b);
            let finished = done || out_of_time || k == stop.max_outer;
            if k % self.config.trace_stride == 0 || finished {
                trace.records.push(TraceRecord {
                    k,
                    obj: info.obj,
                    delta,
                    feas: (info.feas > 0.0 || stop.tol_feas.is_some()).then_some(info.feas),
                    dz_norm: info.dz_norm,
                    err_ratio: info.err_ratio,
                    lyapunov: info.lyapunov,
                    time_s: self.config.trace_time.then_some(elapsed),
                });
            }
            last = Some((info, delta));
            if done {
                status = Status::Converged;
                break;
            }
            if out_of_time {
                break;
            }
        }
        let elapsed_s = start.elapsed().as_secs_f64();
        let (final_obj, final_feas, final_delta) = match last {
            Some((info, delta)) => (info.obj, info.feas, delta),
            None => {
                let (o, f) = self.problem.objective_split(&self.state.x, &self.ax);
                (o, f, None)
            }
        };
        Ok(RunResult {
            state: self.state,
            trace,
            status,
            outer_iters: k,
            elapsed_s,
            final_obj,
            final_delta,
            final_feas,
            inner_applications: self.inner_applications,
        })
    }
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `run` as a free function.
pub fn run(problem: &SaddleProblem, config: SolverConfig) -> Result<RunResult> {
    Solver::new(problem, config)?.run()
}

/// One PDHG iteration:
/// `x ← prox_{τf}(x − τAᵀz)`, `z ← prox_{σg*}(z + σA(2x_new − x))`.
pub fn pdhg_step(state: &mut IterateState, problem: &SaddleProblem, tau: f64, sigma: f64) -> Result<()> {
    let atz = problem.a.apply_adjoint(&state.z)?;
    let v: Vec<f64> = state.x.iter().zip(&atz).map(|(x, g)| x - tau * g).collect();
    let mut x_new = vec![0.0; v.len()];
    problem.f.prox_into(&v, Metric::Scalar(1.0 / tau), &mut x_new)?;
    let xbar: Vec<f64> = x_new.iter().zip(&state.x).map(|(a, b)| 2.0 * a - b).collect();
    let axbar = problem.a.apply(&xbar)?;
    let w: Vec<f64> = state.z.iter().zip(&axbar).map(|(z, a)| z + sigma * a).collect();
    let mut z_new = vec![0.0; w.len()];
    problem.g.conj_prox_into(&w, Metric::Scalar(1.0 / sigma), &mut z_new)?;
    state.x = x_new;
    state.z = z_new;
    state.accumulate();
    Ok(())
}

/// Exact primal step `prox^{M1}_f(x − M1⁻¹Aᵀz)` for a diagonal `M1`.
pub fn prepdhg_x_step(state: &IterateState, problem: &SaddleProblem, m1: &Preconditioner) -> Result<Vec<f64>> {
    let metric = m1.as_metric()?;
    let atz = problem.a.apply_adjoint(&state.z)?;
    let d = metric.as_slice();
    let v: Vec<f64> = (0..d.len()).map(|i| state.x[i] - atz[i] / d[i]).collect();
    problem.f.prox_diag(&v, &metric)
}
