use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ipdhg::operators::io::{read_coordinate, read_grid, write_csv, write_pgm};
use ipdhg::operators::{Field2D, Grid2D, LinearOperator, NORM_DEFAULT_ITERS, NORM_DEFAULT_TOL};
use ipdhg::problems::synth::{
    blue_blobs, checkerboard, gaussian_marginal, half_blue_green, phantom, solid_rgb,
};
use ipdhg::problems::{
    add_impulse_noise, ct, emd, emd_default_h, graphcut, reference_solve, synth_line_integral_matrix, tvl1,
    Family, GraphCutParams, ProblemInstance,
};
use ipdhg::solver::{run, InnerKind, RunResult, SolverConfig, Status, StopRule};
use ipdhg::validation::{run_suite, schur_check_scalar, Check, Suite, SuiteParams};
use rayon::prelude::*;

use crate::config::{ConfigError, FamilyName, InnerChoice, Method, PhiStar, ProblemSpec, RawConfig, RunConfig, Source};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {msg}")]
    Io { path: PathBuf, msg: String },
    #[error(transparent)]
    Core(#[from] ipdhg::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Core(ipdhg::Error::Io(_)) => EXIT_IO,
            _ => EXIT_VALIDATION,
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        msg: e.to_string(),
    }
}

/// Reads an input, mapping any failure (missing file or malformed content) to an I/O error.
fn load<'a, T>(path: &'a Path, f: impl FnOnce(&'a Path) -> ipdhg::Result<T>) -> Result<T, CliError> {
    f(path).map_err(|e| io_err(path, e))
}

fn read_column(path: &Path) -> ipdhg::Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let t = line.split('#').next().unwrap_or("").trim();
        if t.is_empty() {
            continue;
        }
        out.push(t.parse().map_err(|_| ipdhg::Error::Parse {
            line: k + 1,
            msg: format!("bad number `{t}`"),
        })?);
    }
    Ok(out)
}

/// Builds the problem instance described by `spec`.
pub fn build_instance(spec: &ProblemSpec) -> Result<ProblemInstance, CliError> {
    let inst = match (&spec.family, &spec.source) {
        (FamilyName::TvL1, Source::Files(p)) => tvl1(&load(&p[0], read_grid)?, spec.lambda)?,
        (FamilyName::TvL1, Source::Synthetic { name, size, noise, seed }) => {
            let clean = match name.as_str() {
                "checkerboard" => checkerboard(*size, *size, (*size / 8).max(1), 0.0, 1.0),
                _ => phantom(*size, *size),
            };
            tvl1(&add_impulse_noise(&clean, *noise, *seed)?, spec.lambda)?
        }
        (FamilyName::GraphCut, src) => {
            let img: Vec<Grid2D> = match src {
                Source::Files(p) => p.iter().map(|p| load(p, read_grid)).collect::<Result<_, _>>()?,
                Source::Synthetic { name, size, noise, seed } => match name.as_str() {
                    "blobs" => blue_blobs(*size, *size, *noise, *seed),
                    "halves" => half_blue_green(*size, *size),
                    "blue" => solid_rgb(*size, *size, [0.0, 0.0, 1.0]),
                    _ => solid_rgb(*size, *size, [0.0, 1.0, 0.0]),
                }
                .to_vec(),
            };
            let params = GraphCutParams {
                alpha: spec.alpha,
                beta: spec.beta,
                ..GraphCutParams::default()
            };
            graphcut(&img, params)?
        }
        (FamilyName::Emd, src) => {
            let (r0, r1) = match src {
                Source::Files(p) => (load(&p[0], read_grid)?, load(&p[1], read_grid)?),
                Source::Synthetic { size, .. } => {
                    let s = *size as f64;
                    (
                        gaussian_marginal(*size, *size, 0.25 * s, 0.25 * s, 3.0 * s / 32.0),
                        gaussian_marginal(*size, *size, 0.6875 * s, 0.625 * s, s / 8.0),
                    )
                }
            };
            emd(&r0, &r1, spec.h.unwrap_or_else(|| emd_default_h(r0.cols())))?
        }
        (FamilyName::Ct, src) => {
            let (r, b, rows, cols) = match src {
                Source::Files(p) => {
                    let r = load(&p[0], read_coordinate)?;
                    let b = load(&p[1], read_column)?;
                    let (rows, cols) = spec.ct_dims.expect("validated");
                    (r, b, rows, cols)
                }
                Source::Synthetic { size, seed, .. } => {
                    let r = synth_line_integral_matrix(*size, *size, spec.angles, spec.detectors, *seed)?;
                    let b = LinearOperator::Sparse(r.clone()).apply(phantom(*size, *size).values())?;
                    (r, b, *size, *size)
                }
            };
            ct(r, &b, spec.lambda, rows, cols, spec.variant)?
        }
    };
    Ok(inst)
}

/// Resolves a method against the instance's recommended settings.
pub fn solver_config(method: &Method, inst: &ProblemInstance) -> Result<SolverConfig, CliError> {
    let cfg = match method {
        Method::Pdhg { tau, sigma } => {
            let tau = tau.unwrap_or(inst.tau);
            match sigma {
                Some(s) => {
                    let l = inst.problem.a.op_norm_sq_estimate(NORM_DEFAULT_ITERS, NORM_DEFAULT_TOL)?;
                    if tau * s * l > 1.0 {
                        return Err(CliError::Invalid(format!(
                            "pdhg steps violate tau * sigma * |A|^2 <= 1 (got {:.4})",
                            tau * s * l
                        )));
                    }
                    SolverConfig::pdhg(tau, *s)
                }
                None => inst.pdhg_config(tau)?,
            }
        }
        Method::DpPdhg => inst.dp_pdhg_config()?,
        Method::PrePdhg { tau, exact_tol } => inst.prepdhg_exact_config(tau.unwrap_or(inst.tau), *exact_tol)?,
        Method::IPrePdhg { tau, p, inner, gamma } => {
            let tau = tau.unwrap_or(inst.tau);
            let p = p.unwrap_or(inst.p);
            let mut cfg = inst.iprepdhg_config(tau, p)?;
            if *inner != InnerChoice::Bcd {
                let m2 = cfg.m2.as_ref().expect("iprepdhg has M2");
                let gamma = match gamma {
                    Some(g) => *g,
                    None => 1.0 / m2.lambda_max_estimate()?,
                };
                cfg.inner = match inner {
                    InnerChoice::ProxGrad => InnerKind::ProxGrad { gamma },
                    _ => InnerKind::FistaRestart { gamma },
                };
            }
            cfg
        }
    };
    Ok(cfg)
}

fn stop_rule(cfg: &RunConfig, phi_star: Option<f64>) -> StopRule {
    StopRule {
        phi_star,
        tol_obj: cfg.stop.tol.unwrap_or(1e-6),
        tol_feas: cfg.stop.tol_feas,
        tol_residual: cfg.stop.tol_residual,
        max_outer: cfg.stop.max_outer,
        time_budget_s: cfg.stop.time_budget,
    }
}

fn resolve_phi_star(cfg: &RunConfig, inst: &ProblemInstance) -> Result<Option<f64>, CliError> {
    Ok(match cfg.stop.phi_star {
        PhiStar::None => inst.phi_star,
        PhiStar::Value(v) => Some(v),
        PhiStar::Reference => {
            let tol = cfg.stop.tol.unwrap_or(1e-6);
            let sol = reference_solve(inst, (tol * 1e-3).clamp(1e-13, 1e-9))?;
            log::info!("reference Φ* = {:.12e} ({} iterations)", sol.phi, sol.outer_iters);
            Some(sol.phi)
        }
    })
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Converged => "converged",
        Status::NotConverged => "not_converged",
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|d| format!("{d:e}")).unwrap_or_default()
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Writes the solution grids for the instance family.
pub fn write_solution(dir: &Path, inst: &ProblemInstance, x: &[f64], threshold: f64) -> Result<(), CliError> {
    let (r, c) = (inst.rows, inst.cols);
    let wrap = |p: PathBuf, res: ipdhg::Result<()>| res.map_err(|e| io_err(&p, e));
    match inst.family {
        Family::Emd => {
            let m = Field2D::from_flat(r, c, x)?;
            for (name, ch) in [("flux_x.csv", m.channel1), ("flux_y.csv", m.channel2)] {
                let p = dir.join(name);
                wrap(p.clone(), write_csv(&p, &Grid2D::new(r, c, ch)?))?;
            }
        }
        _ => {
            let g = Grid2D::new(r, c, x.to_vec())?;
            let p = dir.join("solution.csv");
            wrap(p.clone(), write_csv(&p, &g))?;
            let shown = if inst.family == Family::GraphCut {
                Grid2D::new(r, c, x.iter().map(|&v| if v >= threshold { 1.0 } else { 0.0 }).collect())?
            } else {
                g
            };
            let name = if inst.family == Family::GraphCut { "mask.pgm" } else { "solution.pgm" };
            let p = dir.join(name);
            wrap(p.clone(), write_pgm(&p, &shown))?;
        }
    }
    Ok(())
}

fn execute(cfg: &RunConfig, inst: &ProblemInstance, phi_star: Option<f64>) -> Result<RunResult, CliError> {
    let mut sc = solver_config(&cfg.method, inst)?.with_stop(stop_rule(cfg, phi_star));
    sc.trace_stride = cfg.trace_stride;
    sc.trace_time = cfg.trace_time;
    Ok(run(&inst.problem, sc)?)
}

pub const SUMMARY_HEADER: &str = "status,outer_iters,time_s,final_delta";

fn summary_line(res: &RunResult) -> String {
    format!(
        "{},{},{:.6},{}",
        status_name(res.status),
        res.outer_iters,
        res.elapsed_s,
        fmt_opt(res.final_delta)
    )
}

/// Single run: trace, solution and summary. Returns the exit status.
pub fn cmd_solve(raw: &RawConfig) -> Result<i32, CliError> {
    if raw.is_sweep() {
        return Err(ConfigError {
            origin: None,
            key: None,
            msg: "sweep lists are only accepted by `compare`".into(),
        }
        .into());
    }
    let cfg = RunConfig::from_raw(raw)?;
    let dir = cfg.output_dir(raw, "ipdhg-out");
    let inst = build_instance(&cfg.problem)?;
    let phi_star = resolve_phi_star(&cfg, &inst)?;
    let res = execute(&cfg, &inst, phi_star)?;
    create_dir(&dir)?;
    write_file(&dir.join("trace.csv"), &res.trace.to_csv())?;
    write_solution(&dir, &inst, &res.state.x, cfg.threshold)?;
    let line = summary_line(&res);
    write_file(&dir.join("summary.csv"), &format!("{SUMMARY_HEADER}\n{line}\n"))?;
    println!("{SUMMARY_HEADER}");
    println!("{line}");
    Ok(match res.status {
        Status::Converged => EXIT_OK,
        Status::NotConverged => EXIT_NOT_CONVERGED,
    })
}

/// One row of the comparison table.
#[derive(Debug, Clone)]
pub struct CompareRow {
    pub method: String,
    pub params: String,
    pub outer_iters: Option<usize>,
    pub runtime_s: Option<f64>,
    pub status: String,
    pub final_delta: Option<f64>,
    pub best: bool,
}

pub const TABLE_HEADER: &str = "run,method,params,outer_iters,runtime_s,status,final_delta,best";

/// Runs every configuration of a sweep on one shared problem and stop rule.
pub fn compare(raw: &RawConfig, jobs: usize) -> Result<(Vec<CompareRow>, Vec<Option<String>>), CliError> {
    let runs = raw.expand()?;
    if runs.len() < 2 {
        return Err(CliError::Invalid(
            "compare needs at least two configurations (use comma lists)".into(),
        ));
    }
    let cfgs = runs.iter().map(RunConfig::from_raw).collect::<Result<Vec<_>, _>>()?;
    let inst = build_instance(&cfgs[0].problem)?;
    let mut shared = cfgs[0].clone();
    if shared.stop.phi_star == PhiStar::None {
        shared.stop.phi_star = PhiStar::Reference;
    }
    let phi_star = resolve_phi_star(&shared, &inst)?;

    let one = |(raw, cfg): (&RawConfig, &RunConfig)| {
        let params = raw.solver_params();
        match execute(cfg, &inst, phi_star) {
            Ok(res) => (
                CompareRow {
                    method: cfg.method.name().to_string(),
                    params,
                    outer_iters: Some(res.outer_iters),
                    runtime_s: Some(res.elapsed_s),
                    status: status_name(res.status).to_string(),
                    final_delta: res.final_delta,
                    best: false,
                },
                Some(res.trace.to_csv()),
            ),
            Err(e) => (
                CompareRow {
                    method: cfg.method.name().to_string(),
                    params,
                    outer_iters: None,
                    runtime_s: None,
                    status: format!("error: {e}"),
                    final_delta: None,
                    best: false,
                },
                None,
            ),
        }
    };
    let pairs: Vec<_> = runs.iter().zip(&cfgs).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let results: Vec<(CompareRow, Option<String>)> = pool.install(|| pairs.into_par_iter().map(one).collect());
    let (mut rows, traces): (Vec<_>, Vec<_>) = results.into_iter().unzip();

    let mut methods: Vec<String> = rows.iter().map(|r| r.method.clone()).collect();
    methods.dedup();
    for m in methods {
        let best = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.method == m && r.status == "converged")
            .min_by(|a, b| a.1.runtime_s.partial_cmp(&b.1.runtime_s).expect("finite runtimes"))
            .map(|(k, _)| k);
        if let Some(k) = best {
            rows[k].best = true;
        }
    }
    Ok((rows, traces))
}

pub fn format_table(rows: &[CompareRow]) -> String {
    let mut s = format!("{TABLE_HEADER}\n");
    for (k, r) in rows.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            k,
            r.method,
            r.params,
            r.outer_iters.map(|v| v.to_string()).unwrap_or_default(),
            r.runtime_s.map(|v| format!("{v:.6}")).unwrap_or_default(),
            r.status.replace(',', ";"),
            fmt_opt(r.final_delta),
            if r.best { "*" } else { "" }
        );
    }
    s
}

/// Comparison table plus per-run traces. Exit 0 even when individual runs fail.
pub fn cmd_compare(raw: &RawConfig, jobs: usize) -> Result<i32, CliError> {
    let base = RunConfig::from_raw(&raw.expand()?.swap_remove(0))?;
    let dir = base.output_dir(raw, "ipdhg-compare");
    let (rows, traces) = compare(raw, jobs)?;
    create_dir(&dir)?;
    let table = format_table(&rows);
    write_file(&dir.join("table.csv"), &table)?;
    for (k, t) in traces.iter().enumerate() {
        if let Some(t) = t {
            write_file(&dir.join(format!("trace_{k:03}.csv")), t)?;
        }
    }
    print!("{table}");
    Ok(EXIT_OK)
}

/// Theory checks; exit 3 if any fails.
pub fn cmd_validate(suites: &[Suite], seeds: &[u64], params: &SuiteParams) -> Result<i32, CliError> {
    let mut failed = 0usize;
    let mut total = 0usize;
    for &seed in seeds {
        for &suite in suites {
            let checks = run_suite(suite, seed, params)?;
            for c in checks {
                report(&c, Some(seed));
                total += 1;
                failed += usize::from(!c.passed);
            }
        }
    }
    println!("{} of {total} checks passed", total - failed);
    Ok(if failed == 0 { EXIT_OK } else { EXIT_VALIDATION })
}

fn report(c: &Check, seed: Option<u64>) {
    match seed {
        Some(s) => println!("{c} (margin {:.3e}, seed {s})", c.margin()),
        None => println!("{c} (margin {:.3e})", c.margin()),
    }
}

/// Schur check of a user supplied `(m1 I, m2 I)` pair for the matrix at `path`.
pub fn cmd_validate_pair(path: &Path, m1: f64, m2: f64) -> Result<i32, CliError> {
    let a = LinearOperator::Sparse(load(path, read_coordinate)?);
    let c = schur_check_scalar(&a, m1, m2)?;
    report(&c, None);
    Ok(if c.passed { EXIT_OK } else { EXIT_VALIDATION })
}

/// High-accuracy reference value and solution.
pub fn cmd_oracle(raw: &RawConfig, tol: f64) -> Result<i32, CliError> {
    let cfg = RunConfig::from_raw(raw)?;
    let dir = cfg.output_dir(raw, "ipdhg-oracle");
    let inst = build_instance(&cfg.problem)?;
    let sol = reference_solve(&inst, tol)?;
    create_dir(&dir)?;
    write_solution(&dir, &inst, &sol.x, cfg.threshold)?;
    let line = format!(
        "{:.15e},{:e},{:e},{},{}",
        sol.phi, sol.feas, sol.certificate, sol.certified, sol.outer_iters
    );
    let header = "phi,feas,certificate,certified,outer_iters";
    write_file(&dir.join("oracle.csv"), &format!("{header}\n{line}\n"))?;
    println!("{header}\n{line}");
    Ok(if sol.certified { EXIT_OK } else { EXIT_NOT_CONVERGED })
}
