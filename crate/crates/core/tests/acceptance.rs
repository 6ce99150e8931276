//! Acceptance run: one PASS/FAIL line per criterion. Sequential so timings are not
//! disturbed by other tests.

use std::time::Instant;

use ipdhg::operators::LinearOperator;
use ipdhg::problems::synth::{blue_blobs, gaussian_marginal, phantom};
use ipdhg::problems::{
    add_impulse_noise, ct, emd, emd_default_h, graphcut, reference_solve, synth_line_integral_matrix, tvl1,
    GraphCutParams, ProblemInstance,
};
use ipdhg::precond::CtVariant;
use ipdhg::solver::{run, SolverConfig, Status, StopRule};
use ipdhg::validation::{run_suite, Suite, SuiteParams};

const TAUS: [f64; 5] = [10.0, 1.0, 0.1, 0.01, 0.001];
const REPEATS: usize = 5;

struct Outcome {
    passed: bool,
    detail: String,
}

fn suite_criterion(suite: Suite) -> Outcome {
    let checks = run_suite(suite, 1, &SuiteParams::default()).expect("suite runs");
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.to_string()).collect();
    let worst = checks
        .iter()
        .map(|c| c.margin())
        .fold(f64::INFINITY, f64::min);
    Outcome {
        passed: failed.is_empty(),
        detail: if failed.is_empty() {
            format!("{} checks, smallest margin {worst:.2e}", checks.len())
        } else {
            failed.join("; ")
        },
    }
}

fn stop(phi: f64, tol: f64, budget: f64) -> StopRule {
    StopRule {
        phi_star: Some(phi),
        tol_obj: tol,
        max_outer: 10_000_000,
        time_budget_s: Some(budget),
        ..StopRule::default()
    }
}

/// Wall time of the outer loop to reach the stop rule, or `None` within the budget.
fn timed(inst: &ProblemInstance, mut cfg: SolverConfig, phi: f64, tol: f64, budget: f64) -> Option<f64> {
    cfg = cfg.with_stop(stop(phi, tol, budget));
    cfg.trace_stride = 1_000_000;
    cfg.trace_time = false;
    let res = run(&inst.problem, cfg).expect("run");
    (res.status == Status::Converged).then_some(res.elapsed_s)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    v[v.len() / 2]
}

struct Candidate {
    label: String,
    config: SolverConfig,
}

/// Best configuration of a family: one screening run each, then the median of
/// repeated runs of the winner. `None` if nothing converged within the cap.
fn best_of(inst: &ProblemInstance, cands: Vec<Candidate>, phi: f64, tol: f64, cap: f64) -> Option<(String, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (k, c) in cands.iter().enumerate() {
        let budget = best.map_or(cap, |(_, t)| (3.0 * t).max(0.2).min(cap));
        if let Some(t) = timed(inst, c.config.clone(), phi, tol, budget) {
            if best.map_or(true, |(_, b)| t < b) {
                best = Some((k, t));
            }
        }
    }
    let (k, _) = best?;
    let times: Vec<f64> = (0..REPEATS)
        .map(|_| timed(inst, cands[k].config.clone(), phi, tol, cap).unwrap_or(cap))
        .collect();
    Some((cands[k].label.clone(), median(times)))
}

fn speedup_case(name: &str, inst: &ProblemInstance, tol: f64) -> (bool, String) {
    let reference = reference_solve(inst, 1e-12).expect("reference");
    let phi = reference.phi;
    let cap = 60.0;
    let mut ipre = Vec::new();
    for &tau in &TAUS {
        for p in 1..=3 {
            ipre.push(Candidate {
                label: format!("iprepdhg tau={tau} p={p}"),
                config: inst.iprepdhg_config(tau, p).expect("config"),
            });
        }
    }
    let ours = best_of(inst, ipre, phi, tol, cap);
    let Some((ours_label, ours_t)) = ours else {
        return (false, format!("{name}: iPrePDHG never converged"));
    };
    let mut base: Vec<Candidate> = TAUS
        .iter()
        .map(|&tau| Candidate {
            label: format!("pdhg tau={tau}"),
            config: inst.pdhg_config(tau).expect("config"),
        })
        .collect();
    base.push(Candidate {
        label: "dp-pdhg".into(),
        config: inst.dp_pdhg_config().expect("config"),
    });
    let base_cap = (10.0 * ours_t).clamp(1.0, cap);
    match best_of(inst, base, phi, tol, base_cap) {
        Some((label, t)) => {
            let ratio = ours_t / t;
            (
                ratio <= 0.5,
                format!("{name}: {ours_label} {ours_t:.4}s vs {label} {t:.4}s, ratio {ratio:.3}"),
            )
        }
        None => (
            true,
            format!("{name}: {ours_label} {ours_t:.4}s, baselines did not converge within {base_cap:.1}s"),
        ),
    }
}

fn criterion8() -> Outcome {
    let tv = tvl1(&add_impulse_noise(&phantom(64, 64), 0.15, 1).expect("noise"), 1.0).expect("tvl1");
    let gc = graphcut(&blue_blobs(64, 64, 0.5, 1), GraphCutParams::default()).expect("graphcut");
    let r = synth_line_integral_matrix(16, 16, 36, 8, 5).expect("matrix");
    let b = LinearOperator::Sparse(r.clone()).apply(phantom(16, 16).values()).expect("apply");
    let ctp = ct(r, &b, 1.0, 16, 16, CtVariant::Norm).expect("ct");
    let cases = [
        speedup_case("tvl1 64x64", &tv, 1e-6),
        speedup_case("graphcut 64x64", &gc, 1e-6),
        speedup_case("ct 16x16", &ctp, 1e-4),
    ];
    Outcome {
        passed: cases.iter().all(|c| c.0),
        detail: cases.iter().map(|c| c.1.as_str()).collect::<Vec<_>>().join("; "),
    }
}

fn criterion9() -> Outcome {
    let r0 = gaussian_marginal(32, 32, 8.0, 8.0, 3.0);
    let r1 = gaussian_marginal(32, 32, 22.0, 20.0, 4.0);
    let inst = emd(&r0, &r1, emd_default_h(32)).expect("emd");
    let reference = reference_solve(&inst, 1e-11).expect("reference");
    let budget = 0.25;
    let fixed = |cfg: SolverConfig| {
        let mut cfg = cfg.with_stop(StopRule {
            phi_star: None,
            tol_residual: 0.0,
            max_outer: usize::MAX,
            time_budget_s: Some(budget),
            ..StopRule::default()
        });
        cfg.trace_stride = 1_000_000;
        cfg.trace_time = false;
        let res = run(&inst.problem, cfg).expect("run");
        (res.final_feas, res.final_obj)
    };
    let (feas, obj) = fixed(inst.iprepdhg_config(0.01, 2).expect("config"));
    let pdhg_feas = TAUS
        .iter()
        .map(|&tau| fixed(inst.pdhg_config(tau).expect("config")).0)
        .fold(f64::INFINITY, f64::min);
    let rel = (obj - reference.phi).abs() / reference.phi;
    Outcome {
        passed: reference.certified && feas <= 0.1 * pdhg_feas && rel <= 0.01,
        detail: format!(
            "after {budget}s: feas {feas:.2e} vs best pdhg {pdhg_feas:.2e}; obj {obj:.6} vs reference {:.6} (rel {rel:.1e}, certified {})",
            reference.phi, reference.certified
        ),
    }
}

fn main() {
    let criteria: Vec<(u32, &str, f64, Box<dyn Fn() -> Outcome>)> = vec![
        (1, "moreau identity", 5.0, Box::new(|| suite_criterion(Suite::Moreau))),
        (2, "adjoint and block structure", 10.0, Box::new(|| suite_criterion(Suite::Adjoint))),
        (3, "schur validation", 30.0, Box::new(|| suite_criterion(Suite::Schur))),
        (4, "admm equivalence", 10.0, Box::new(|| suite_criterion(Suite::Admm))),
        (5, "ergodic bound", 60.0, Box::new(|| suite_criterion(Suite::Ergodic))),
        (6, "bounded relative error", 120.0, Box::new(|| suite_criterion(Suite::RelErr))),
        (7, "lyapunov descent", 60.0, Box::new(|| suite_criterion(Suite::Lyapunov))),
        (8, "desk-scale speedup", 900.0, Box::new(criterion8)),
        (9, "emd fixed budget", 300.0, Box::new(criterion9)),
        (10, "reduction identities", 10.0, Box::new(|| suite_criterion(Suite::Reduction))),
    ];
    let mut failures = 0;
    for (id, name, limit, f) in criteria {
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        let ok = out.passed && secs < limit;
        failures += usize::from(!ok);
        println!(
            "{} criterion {id} ({name}): {:.2}s (limit {limit}s) {}",
            if ok { "PASS" } else { "FAIL" },
            secs,
            out.detail
        );
    }
    println!("SKIP criterion 11 (full-scale emd): optional, reference marginals not bundled");
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
