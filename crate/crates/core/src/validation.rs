//! Desk-scale checks of the theory: each suite returns measured quantities next to
//! the limit they must respect.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::operators::{dot, norm, LinearOperator, SparseMatrix};
use crate::precond::{
    ct_block_precond, gram_precond, gram_precond_shifted, ordering_for, pock_diagonal, scaled_identity,
    validate_schur, CtVariant, Preconditioner,
};
use crate::problems::synth_line_integral_matrix;
use crate::prox::{conj_prox_via_moreau, DiagonalMetric, ProxFunction};
use crate::solver::{
    admm_dual_step, bcd_largest_feasible_gamma, c_bcd, c_proxgrad, dual_transform, ergodic_gap_bound,
    inner_bcd_epoch, pdhg_step, InnerKind, IterateState, SaddleProblem, Solver, SolverConfig, ZSubproblem,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Moreau,
    Adjoint,
    Schur,
    Ergodic,
    RelErr,
    Lyapunov,
    Admm,
    Reduction,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Moreau,
        Suite::Adjoint,
        Suite::Schur,
        Suite::Ergodic,
        Suite::RelErr,
        Suite::Lyapunov,
        Suite::Admm,
        Suite::Reduction,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Moreau => "moreau",
            Suite::Adjoint => "adjoint",
            Suite::Schur => "schur",
            Suite::Ergodic => "ergodic",
            Suite::RelErr => "relerr",
            Suite::Lyapunov => "lyapunov",
            Suite::Admm => "admm",
            Suite::Reduction => "reduction",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .iter()
            .find(|k| k.name() == s)
            .copied()
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite '{s}'")))
    }
}

/// One measured property: passes when `value <= limit`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn new(suite: Suite, name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            suite,
            name: name.into(),
            value,
            limit,
            passed: value <= limit,
        }
    }

    /// `limit − value`; negative on failure.
    pub fn margin(&self) -> f64 {
        self.limit - self.value
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}/{}: {:.3e} <= {:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.value,
            self.limit
        )
    }
}

/// Sizes of the randomized suites.
#[derive(Debug, Clone)]
pub struct SuiteParams {
    pub moreau_draws: usize,
    pub adjoint_max_grid: usize,
    pub ergodic_instances: usize,
    pub ergodic_horizons: Vec<usize>,
    pub relerr_iters: usize,
    pub lyapunov_iters: usize,
    pub admm_iters: usize,
}

impl Default for SuiteParams {
    fn default() -> Self {
        Self {
            moreau_draws: 1000,
            adjoint_max_grid: 64,
            ergodic_instances: 10,
            ergodic_horizons: vec![1, 10, 100, 1000],
            relerr_iters: 500,
            lyapunov_iters: 500,
            admm_iters: 50,
        }
    }
}

pub fn run_suite(suite: Suite, seed: u64, params: &SuiteParams) -> Result<Vec<Check>> {
    match suite {
        Suite::Moreau => moreau_suite(seed, params.moreau_draws),
        Suite::Adjoint => adjoint_suite(seed, params.adjoint_max_grid),
        Suite::Schur => schur_suite(seed),
        Suite::Ergodic => ergodic_suite(seed, params.ergodic_instances, &params.ergodic_horizons),
        Suite::RelErr => relerr_suite(seed, params.relerr_iters),
        Suite::Lyapunov => lyapunov_suite(seed, params.lyapunov_iters),
        Suite::Admm => admm_suite(seed, params.admm_iters),
        Suite::Reduction => reduction_suite(seed),
    }
}

/// Scalar identity pair `(m1·I, m2·I)` against `A`.
pub fn schur_check_scalar(a: &LinearOperator, m1: f64, m2: f64) -> Result<Check> {
    let p1 = Preconditioner::ScaledIdentity {
        scale: m1,
        dim: a.ncols(),
    };
    let p2 = Preconditioner::ScaledIdentity {
        scale: m2,
        dim: a.nrows(),
    };
    let rep = validate_schur(&p1, &p2, a)?;
    Ok(Check::new(Suite::Schur, format!("pair ({m1} I, {m2} I)"), -rep.min_eig, 1e-10))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rvec(rng: &mut ChaCha8Rng, n: usize, s: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-s..s)).collect()
}

fn random_dense(rng: &mut ChaCha8Rng, m: usize, n: usize) -> SparseMatrix {
    let rows: Vec<Vec<f64>> = (0..m).map(|_| rvec(rng, n, 1.0)).collect();
    SparseMatrix::from_dense(&rows).expect("rectangular rows")
}

/// A random function of every kind (and one sum), with a metric that is constant on
/// each pixel group.
pub fn random_prox(rng: &mut ChaCha8Rng, kind: usize) -> (ProxFunction, Vec<f64>) {
    let n = rng.gen_range(1..=6);
    let mut metric: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..20.0)).collect();
    let f = match kind % 8 {
        0 => ProxFunction::zero(n),
        1 => ProxFunction::L1 {
            weight: rng.gen_range(0.01..3.0),
            shift: rvec(rng, n, 2.0),
        },
        2 => {
            let pixels = n;
            let d: Vec<f64> = (0..pixels).map(|_| rng.gen_range(0.05..20.0)).collect();
            metric = d.iter().chain(&d).copied().collect();
            ProxFunction::GroupL12 {
                weight: rng.gen_range(0.01..3.0),
                pixels,
            }
        }
        3 => {
            let lo = rng.gen_range(-2.0..0.5);
            ProxFunction::BoxIndicator {
                lo,
                hi: lo + rng.gen_range(0.0..2.0),
                dim: n,
            }
        }
        4 => ProxFunction::LinearPlusBox {
            linear: rvec(rng, n, 2.0),
            lo: 0.0,
            hi: 1.0,
        },
        5 => ProxFunction::PointIndicator { target: rvec(rng, n, 2.0) },
        6 => ProxFunction::Quadratic {
            weight: rng.gen_range(0.1..5.0),
            center: rvec(rng, n, 2.0),
        },
        _ => {
            let m2 = rng.gen_range(1..=4);
            let d2: Vec<f64> = (0..m2).map(|_| rng.gen_range(0.05..20.0)).collect();
            metric.extend(&d2);
            ProxFunction::SumSeparable(vec![
                ProxFunction::Quadratic {
                    weight: rng.gen_range(0.1..5.0),
                    center: rvec(rng, n, 2.0),
                },
                ProxFunction::l1(rng.gen_range(0.01..3.0), m2),
            ])
        }
    };
    (f, metric)
}

fn moreau_suite(seed: u64, draws: usize) -> Result<Vec<Check>> {
    let mut rng = rng(seed);
    let (mut worst_id, mut worst_inc, mut worst_ne) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..draws {
        let (phi, d) = random_prox(&mut rng, k);
        let m = DiagonalMetric::new(d.clone())?;
        let x = rvec(&mut rng, d.len(), 5.0);
        let p = phi.prox_diag(&x, &m)?;
        let mx: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a * b).collect();
        let q = conj_prox_via_moreau(&phi, &mx, &m)?;
        let res: Vec<f64> = (0..x.len()).map(|i| x[i] - p[i] - q[i] / d[i]).collect();
        worst_id = worst_id.max(norm(&res) / (1.0 + norm(&x)));

        // q minimizes φ*(q) + ½‖q − Mx‖²_{M⁻¹}: M⁻¹(Mx − q) = x − q/d must lie in ∂φ*(q)
        let r: Vec<f64> = (0..x.len()).map(|i| x[i] - q[i] / d[i]).collect();
        let s = phi.conj_subgradient_projection(&q, &r)?;
        let gap: Vec<f64> = r.iter().zip(&s).map(|(a, b)| a - b).collect();
        worst_inc = worst_inc.max(norm(&gap) / (1.0 + norm(&r)));

        let x2: Vec<f64> = x.iter().map(|v| v + rng.gen_range(-1.0..1.0)).collect();
        let p2 = phi.prox_diag(&x2, &m)?;
        let mnorm = |a: &[f64], b: &[f64]| -> f64 {
            (0..a.len()).map(|i| d[i] * (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
        };
        worst_ne = worst_ne.max(mnorm(&p, &p2) - mnorm(&x, &x2));
    }
    Ok(vec![
        Check::new(Suite::Moreau, "identity residual", worst_id, 1e-12),
        Check::new(Suite::Moreau, "conjugate optimality", worst_inc, 1e-9),
        Check::new(Suite::Moreau, "nonexpansive excess", worst_ne, 1e-12),
    ])
}

fn adjoint_defect(a: &LinearOperator, rng: &mut ChaCha8Rng) -> Result<f64> {
    let x = rvec(rng, a.ncols(), 1.0);
    let y = rvec(rng, a.nrows(), 1.0);
    let ax = a.apply(&x)?;
    let aty = a.apply_adjoint(&y)?;
    let scale = norm(&ax) * norm(&y) + norm(&x) * norm(&aty);
    Ok((dot(&ax, &y) - dot(&x, &aty)).abs() / scale.max(f64::MIN_POSITIVE))
}

fn grid_operators(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Result<Vec<LinearOperator>> {
    let w: Vec<f64> = (0..2 * rows * cols).map(|_| rng.gen_range(0.01..1.0)).collect();
    let h = rng.gen_range(0.2..3.0);
    Ok(vec![
        LinearOperator::grad(rows, cols, h)?,
        LinearOperator::div(rows, cols, h)?,
        LinearOperator::weighted_grad(rows, cols, h, w)?,
    ])
}

fn adjoint_suite(seed: u64, max_grid: usize) -> Result<Vec<Check>> {
    let mut rng = rng(seed);
    let mut sizes: Vec<(usize, usize)> = vec![(1, 1), (1, 5), (4, 1), (2, 2), (3, 7), (8, 8)];
    sizes.push((max_grid, max_grid));
    sizes.push((max_grid / 2 + 1, max_grid));
    let (mut worst_adj, mut gram_fail, mut dense_off) = (0.0f64, 0.0f64, 0.0f64);
    for &(r, c) in &sizes {
        for op in grid_operators(&mut rng, r, c)? {
            worst_adj = worst_adj.max(adjoint_defect(&op, &mut rng)?);
            let ord = ordering_for(&op)?;
            if op.block_gram(&ord).is_err() {
                gram_fail += 1.0;
            }
            if r * c <= 64 {
                // independent dense check: within-block rows of A are orthogonal
                let s = op.to_sparse().to_dense();
                for block in ord.blocks() {
                    for (k, &i) in block.iter().enumerate() {
                        for &j in &block[k + 1..] {
                            let ip: f64 = s[i].iter().zip(&s[j]).map(|(a, b)| a * b).sum();
                            dense_off = dense_off.max(ip.abs());
                        }
                    }
                }
            }
        }
    }
    let sp = LinearOperator::Sparse(random_dense(&mut rng, 7, 5));
    worst_adj = worst_adj.max(adjoint_defect(&sp, &mut rng)?);
    let st = LinearOperator::stacked(vec![
        LinearOperator::Sparse(synth_line_integral_matrix(6, 6, 4, 6, seed)?),
        LinearOperator::grad(6, 6, 1.0)?,
    ])?;
    worst_adj = worst_adj.max(adjoint_defect(&st, &mut rng)?);
    Ok(vec![
        Check::new(Suite::Adjoint, "adjoint defect", worst_adj, 1e-12),
        Check::new(Suite::Adjoint, "block_gram rejections", gram_fail, 0.0),
        Check::new(Suite::Adjoint, "within-block inner products", dense_off, 0.0),
    ])
}

fn schur_suite(seed: u64) -> Result<Vec<Check>> {
    let mut rng = rng(seed);
    let mut checks = Vec::new();
    let mut worst_gram = 0.0f64;
    let mut worst_pock = f64::NEG_INFINITY;
    for (r, c) in [(3, 4), (8, 8), (16, 16)] {
        for op in grid_operators(&mut rng, r, c)? {
            if op.nrows() + op.ncols() > crate::precond::DENSE_LIMIT {
                continue;
            }
            let tau = [10.0, 1.0, 0.1, 0.01][rng.gen_range(0..4)];
            let rep = validate_schur(&scaled_identity(tau, op.ncols())?, &gram_precond(&op, tau)?, &op)?;
            worst_gram = worst_gram.max(rep.min_eig.abs());
            let (m1, m2) = pock_diagonal(&op)?;
            worst_pock = worst_pock.max(-validate_schur(&m1, &m2, &op)?.min_eig);
        }
    }
    checks.push(Check::new(Suite::Schur, "|min eig| of (I/tau, tau AA^T)", worst_gram, 1e-10));
    checks.push(Check::new(Suite::Schur, "Pock diagonal pair", worst_pock, 1e-10));
    for (r, c) in [(6, 6), (12, 12)] {
        let rm = synth_line_integral_matrix(r, c, 6, 10, seed)?;
        let a = LinearOperator::stacked(vec![
            LinearOperator::Sparse(rm.clone()),
            LinearOperator::grad(r, c, 1.0)?,
        ])?;
        for variant in [CtVariant::Norm, CtVariant::RowSum] {
            let (m1, m2) = ct_block_precond(&rm, r, c, 0.01, variant)?;
            let rep = validate_schur(&m1, &m2, &a)?;
            checks.push(Check::new(
                Suite::Schur,
                format!("CT {variant:?} on {r}x{c}"),
                -rep.min_eig,
                1e-10,
            ));
        }
    }
    Ok(checks)
}

/// Small random problem with finite `f` and `g`, and probe points in `dom f × dom g*`.
fn random_saddle(rng: &mut ChaCha8Rng) -> Result<(SaddleProblem, f64)> {
    let n = rng.gen_range(2..=6);
    let m = rng.gen_range(2..=6);
    let a = LinearOperator::Sparse(random_dense(rng, m, n));
    let f = if rng.gen_bool(0.5) {
        ProxFunction::Quadratic {
            weight: rng.gen_range(0.2..3.0),
            center: rvec(rng, n, 1.0),
        }
    } else {
        ProxFunction::L1 {
            weight: rng.gen_range(0.2..2.0),
            shift: rvec(rng, n, 1.0),
        }
    };
    let gw = rng.gen_range(0.2..2.0);
    let g = if rng.gen_bool(0.5) {
        ProxFunction::l1(gw, m)
    } else {
        ProxFunction::Quadratic {
            weight: gw,
            center: rvec(rng, m, 1.0),
        }
    };
    Ok((SaddleProblem::new(f, g, a)?, gw))
}

fn ergodic_suite(seed: u64, instances: usize, horizons: &[usize]) -> Result<Vec<Check>> {
    let mut rng = rng(seed);
    let horizon = horizons.iter().copied().max().unwrap_or(0);
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0usize;
    for k in 0..instances {
        let (problem, gw) = random_saddle(&mut rng)?;
        let (n, m) = (problem.n(), problem.m());
        let (m1, m2) = if k % 2 == 0 {
            pock_diagonal(&problem.a)?
        } else {
            let tau = rng.gen_range(0.1..2.0);
            (scaled_identity(tau, n)?, gram_precond_shifted(&problem.a, tau, 0.05)?)
        };
        let mut cfg = SolverConfig::prepdhg_exact(m1.clone(), m2.clone());
        cfg.exact_tol = 1e-14;
        let mut solver = Solver::new(&problem, cfg)?;
        let probes: Vec<(Vec<f64>, Vec<f64>)> = (0..20)
            .map(|_| (rvec(&mut rng, n, 3.0), rvec(&mut rng, m, gw * 0.999)))
            .collect();
        for step in 1..=horizon {
            solver.step()?;
            if !horizons.contains(&step) {
                continue;
            }
            let (xn, zn) = (solver.state.ergodic_x(), solver.state.ergodic_z());
            let mut pts = probes.clone();
            pts.push((solver.state.x.clone(), solver.state.z.clone()));
            for (x, z) in &pts {
                let gap = problem.saddle_value(&xn, z)? - problem.saddle_value(x, &zn)?;
                let bound = ergodic_gap_bound(&vec![0.0; n], &vec![0.0; m], x, z, &m1, &m2, &problem.a, step)?;
                worst = worst.max((gap - bound) / (1.0 + gap.abs() + bound.abs()));
                count += 1;
            }
        }
    }
    Ok(vec![Check::new(
        Suite::Ergodic,
        format!("gap minus bound over {count} probes"),
        worst,
        1e-9,
    )])
}

/// Relative error ratios against `c(p)` for proximal gradient and block sweeps.
fn relerr_suite(seed: u64, iters: usize) -> Result<Vec<Check>> {
    let mut rng = rng(seed);
    let shift = 0.1;
    let (r, c) = (5, 4);
    let b = rvec(&mut rng, r * c, 1.0);
    let rho: Vec<f64> = {
        let v = rvec(&mut rng, r * c, 1.0);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| x - mean).collect()
    };
    let cases = vec![
        (
            "tvl1",
            SaddleProblem::new(
                ProxFunction::L1 { weight: 1.0, shift: b },
                ProxFunction::l1(1.0, 2 * r * c),
                LinearOperator::grad(r, c, 1.0)?,
            )?,
            0.5,
        ),
        (
            "emd",
            SaddleProblem::new(
                ProxFunction::GroupL12 {
                    weight: 1.0,
                    pixels: r * c,
                },
                ProxFunction::PointIndicator { target: rho },
                LinearOperator::div(r, c, 1.0)?,
            )?,
            0.5,
        ),
    ];
    let mut checks = Vec::new();
    for (name, problem, tau) in &cases {
        let m2 = gram_precond_shifted(&problem.a, *tau, shift)?;
        let (lmin, lmax) = m2.eig_range()?;
        let l = ordering_for(&problem.a)?.num_blocks();
        let gamma_pg = lmin / (lmax * lmax);
        let gamma_bcd = bcd_largest_feasible_gamma(lmin, lmax, l)?;
        for p in 1..=3 {
            for (label, inner, bound) in [
                ("proxgrad", InnerKind::ProxGrad { gamma: gamma_pg }, c_proxgrad(gamma_pg, lmin, lmax, p)?),
                ("bcd", InnerKind::Bcd, c_bcd(gamma_bcd, lmin, lmax, l, p)?),
            ] {
                let mut cfg = SolverConfig::iprepdhg(scaled_identity(*tau, problem.n())?, m2.clone(), inner, p);
                cfg.rel_error_diag = true;
                let mut solver = Solver::new(problem, cfg)?;
                let mut worst = 0.0f64;
                for _ in 0..iters {
                    let info = solver.step()?;
                    if let Some(ratio) = info.err_ratio {
                        worst = worst.max(ratio);
                    }
                }
                checks.push(Check::new(Suite::RelErr, format!("{name} {label} p={p}"), worst, bound));
            }
        }
    }
    Ok(checks)
}

/// Descent of the augmented Lagrangian with `μ_f = 4`, `τ = 1`, `M2 = τAAᵀ + γI`.
fn lyapunov_suite(seed: u64, iters: usize) -> Result<Vec<Check>> {
    let mut rng = rng(seed);
    let (n, m) = (6, 4);
    let mu = 4.0;
    let tau = 1.0;
    let gamma = 0.5;
    let a = LinearOperator::Sparse(random_dense(&mut rng, m, n));
    let problem = SaddleProblem::new(
        ProxFunction::Quadratic {
            weight: mu,
            center: rvec(&mut rng, n, 2.0),
        },
        ProxFunction::l1(0.3, m),
        a.clone(),
    )?
    .with_strong_convexity(mu)?;
    let m1 = scaled_identity(tau, n)?;
    let m2 = gram_precond_shifted(&a, tau, gamma)?;
    let (lmin, lmax) = m2.eig_range()?;
    let step = lmin / (lmax * lmax);
    let mut p = 1;
    while c_proxgrad(step, lmin, lmax, p)? >= gamma {
        p += 1;
        if p > 10_000 {
            return Err(Error::InfeasibleStepsize("no p with c(p) < gamma".into()));
        }
    }
    let c = c_proxgrad(step, lmin, lmax, p)?;
    // C1 = (τ/2 − 1/(τ μ²)) I, C2 = ½τAAᵀ + (γ − c) I
    let c1 = tau / 2.0 - 1.0 / (tau * mu * mu);
    let mut cfg = SolverConfig::iprepdhg(m1, m2, InnerKind::ProxGrad { gamma: step }, p);
    cfg.lyapunov_diag = true;
    let mut solver = Solver::new(&problem, cfg)?;
    let x0 = rvec(&mut rng, n, 1.0);
    let z0 = rvec(&mut rng, m, 0.3);
    solver.set_state(x0, z0)?;
    let mut prev: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let (mut worst_mono, mut worst_desc) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for _ in 0..iters {
        let z_before = solver.state.z.clone();
        let info = solver.step()?;
        let l = info.lyapunov.expect("lyapunov tracking enabled");
        let y = solver.state.y.clone().expect("dual shadow set");
        if let Some((lp, yp, dz)) = prev.take() {
            let dy: Vec<f64> = yp.iter().zip(&y).map(|(a, b)| a - b).collect();
            let atdz = a.apply_adjoint(&dz)?;
            let rhs = c1 * dot(&dy, &dy) + 0.5 * tau * dot(&atdz, &atdz) + (gamma - c) * dot(&dz, &dz);
            worst_mono = worst_mono.max(l - lp);
            worst_desc = worst_desc.max(rhs - (lp - l));
        }
        let dz: Vec<f64> = z_before.iter().zip(&solver.state.z).map(|(a, b)| a - b).collect();
        prev = Some((l, y, dz));
    }
    Ok(vec![
        Check::new(Suite::Lyapunov, format!("increase of L (p={p})"), worst_mono, 1e-10),
        Check::new(Suite::Lyapunov, "descent shortfall", worst_desc, 1e-10),
    ])
}

/// Exact PrePDHG with `(I/τ, τAAᵀ)` against dual ADMM, on `n = 6`, `m = 4`.
fn admm_suite(seed: u64, iters: usize) -> Result<Vec<Check>> {
    let mut rng = rng(seed);
    let (n, m) = (6, 4);
    let tau = 0.7;
    let a = LinearOperator::Sparse(random_dense(&mut rng, m, n));
    let problem = SaddleProblem::new(
        ProxFunction::Quadratic {
            weight: 2.0,
            center: rvec(&mut rng, n, 2.0),
        },
        ProxFunction::l1(0.5, m),
        a.clone(),
    )?
    .with_strong_convexity(2.0)?;
    let m1 = scaled_identity(tau, n)?;
    let mut cfg = SolverConfig::prepdhg_exact(m1.clone(), gram_precond(&a, tau)?);
    cfg.exact_tol = 1e-14;
    let mut solver = Solver::new(&problem, cfg)?;
    let x0 = solver.state.x.clone();
    let z0 = solver.state.z.clone();
    solver.step()?;
    let (mut y, _) = dual_transform(&solver.state.x, &x0, &z0, &m1, &a)?;
    let mut v = solver.state.x.clone();
    let mut z = z0;
    let mut worst = 0.0f64;
    for _ in 0..iters {
        let (zn, yn, vn) = admm_dual_step(&z, &y, &v, tau, &problem, 1e-14)?;
        let z_pd = solver.state.z.clone();
        solver.step()?;
        let dz = zn.iter().zip(&z_pd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let dx = vn.iter().zip(&solver.state.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(dz).max(dx);
        (z, y, v) = (zn, yn, vn);
    }
    Ok(vec![Check::new(Suite::Admm, format!("iterate mismatch over {iters}"), worst, 1e-8)])
}

/// iPrePDHG with scalar metrics and one unit prox-gradient step is PDHG; one block
/// sweep with linear `g*` is a red-black Gauss-Seidel sweep.
fn reduction_suite(seed: u64) -> Result<Vec<Check>> {
    let mut rng = rng(seed);
    let (r, c) = (4, 4);
    let problem = SaddleProblem::new(
        ProxFunction::L1 {
            weight: 0.8,
            shift: rvec(&mut rng, r * c, 1.0),
        },
        ProxFunction::l1(1.0, 2 * r * c),
        LinearOperator::grad(r, c, 1.0)?,
    )?;
    let sigma = 1.0;
    let tau = 1.0 / (8.0 * sigma);
    let m2 = Preconditioner::ScaledIdentity {
        scale: 1.0 / sigma,
        dim: problem.m(),
    };
    let cfg = SolverConfig::iprepdhg(scaled_identity(tau, problem.n())?, m2, InnerKind::ProxGrad { gamma: sigma }, 1);
    let mut solver = Solver::new(&problem, cfg)?;
    let mut state = IterateState::zeros(problem.n(), problem.m());
    let mut worst_pd = 0.0f64;
    for _ in 0..100 {
        solver.step()?;
        pdhg_step(&mut state, &problem, tau, sigma)?;
        let d = solver
            .state
            .x
            .iter()
            .zip(&state.x)
            .chain(solver.state.z.iter().zip(&state.z))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst_pd = worst_pd.max(d);
    }

    let div = LinearOperator::div(r, c, 1.0)?;
    let target = rvec(&mut rng, r * c, 1.0);
    let g = ProxFunction::PointIndicator { target: target.clone() };
    let t = 0.3;
    let m2 = gram_precond(&div, t)?;
    let zk = rvec(&mut rng, r * c, 1.0);
    let drift = rvec(&mut rng, r * c, 1.0);
    let sub = ZSubproblem::new(&zk, &drift, &m2, &g)?;
    let ord = ordering_for(&div)?;
    let bcd = inner_bcd_epoch(&sub, &ord, 1)?;
    // red-black Gauss-Seidel on τAAᵀ(z − z^k) = −(c + target)
    let dense = div.to_sparse().to_dense();
    let k = r * c;
    let gram = |i: usize, j: usize| -> f64 { t * dense[i].iter().zip(&dense[j]).map(|(a, b)| a * b).sum::<f64>() };
    let mut z = zk.clone();
    for block in ord.blocks() {
        for &i in block {
            let mut res = drift[i] + target[i];
            for j in 0..k {
                res += gram(i, j) * (z[j] - zk[j]);
            }
            z[i] -= res / gram(i, i);
        }
    }
    let worst_gs = z.iter().zip(&bcd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(vec![
        Check::new(Suite::Reduction, "iPrePDHG vs PDHG over 100", worst_pd, 1e-14),
        Check::new(Suite::Reduction, "block sweep vs red-black Gauss-Seidel", worst_gs, 1e-13),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn broken_schur_pair_fails() {
        let a = LinearOperator::Sparse(SparseMatrix::diagonal(&[2.0, 2.0]));
        let c = schur_check_scalar(&a, 1.0, 1.0).unwrap();
        assert!(!c.passed);
        assert!(schur_check_scalar(&a, 1.0, 4.0).unwrap().passed);
    }
}
