//! Measurable counterparts of the convergence theory.

use super::inner::{solve_exact, ZSubproblem};
use super::problem::SaddleProblem;
use crate::error::{check_len, Error, Result};
use crate::operators::{dot, norm, LinearOperator};
use crate::precond::Preconditioner;
use crate::prox::Metric;

/// Relative error of an approximate subproblem solution: `ε` is the least-norm
/// vector with `0 ∈ ∂g*(z_new) + M2(z_new − z^k) + c + ε`. Returns `(‖ε‖, ratio)`
/// with `ratio = ‖ε‖/‖z_new − z^k‖` (`∞` for a stalled iterate, `0` when both vanish).
pub fn relative_error_residual(sub: &ZSubproblem<'_>, z_new: &[f64]) -> Result<(f64, f64)> {
    check_len(sub.dim(), z_new.len(), "relative error iterate")?;
    let dz: Vec<f64> = z_new.iter().zip(sub.z_ref).map(|(a, b)| a - b).collect();
    if !sub.g.conj_value(z_new)?.is_finite() {
        return Err(Error::DiagnosticUnavailable(
            "iterate lies outside the domain of g*".into(),
        ));
    }
    let mut r = sub.m2.apply(&dz)?;
    for (ri, ci) in r.iter_mut().zip(sub.drift) {
        *ri = -*ri - ci;
    }
    let s = sub.g.conj_subgradient_projection(z_new, &r)?;
    let eps: Vec<f64> = r.iter().zip(&s).map(|(a, b)| a - b).collect();
    let (e, d) = (norm(&eps), norm(&dz));
    let ratio = if d > 0.0 {
        e / d
    } else if e > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok((e, ratio))
}

/// `(1/2N)[‖x − x0‖²_{M1} + ‖z − z0‖²_{M2} − 2⟨A(x − x0), z − z0⟩]`.
#[allow(clippy::too_many_arguments)]
pub fn ergodic_gap_bound(
    x0: &[f64],
    z0: &[f64],
    x: &[f64],
    z: &[f64],
    m1: &Preconditioner,
    m2: &Preconditioner,
    a: &LinearOperator,
    n: usize,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("ergodic bound needs N >= 1".into()));
    }
    let dx: Vec<f64> = x.iter().zip(x0).map(|(a, b)| a - b).collect();
    let dz: Vec<f64> = z.iter().zip(z0).map(|(a, b)| a - b).collect();
    let q = dot(&dx, &m1.apply(&dx)?) + dot(&dz, &m2.apply(&dz)?) - 2.0 * dot(&a.apply(&dx)?, &dz);
    Ok(q / (2.0 * n as f64))
}

/// Generalized augmented Lagrangian
/// `g*(z) + f*(y) + ⟨−Aᵀz − y, M1⁻¹u⟩ + ½‖Aᵀz + y‖²_{M1⁻¹}`.
pub fn lyapunov(z: &[f64], y: &[f64], u: &[f64], m1: &Preconditioner, problem: &SaddleProblem) -> Result<f64> {
    let atz = problem.a.apply_adjoint(z)?;
    lyapunov_with_adjoint(z, &atz, y, u, m1, problem)
}

pub(crate) fn lyapunov_with_adjoint(
    z: &[f64],
    atz: &[f64],
    y: &[f64],
    u: &[f64],
    m1: &Preconditioner,
    problem: &SaddleProblem,
) -> Result<f64> {
    let d = m1
        .diagonal()
        .ok_or_else(|| Error::UnsupportedMetric("Lyapunov monitoring needs a diagonal M1".into()))?;
    check_len(problem.n(), y.len(), "Lyapunov y")?;
    check_len(problem.n(), u.len(), "Lyapunov u")?;
    let mut acc = problem.g.conj_value(z)? + problem.f.conj_value(y)?;
    for i in 0..d.len() {
        let s = atz[i] + y[i];
        acc += (-s * u[i] + 0.5 * s * s) / d[i];
    }
    Ok(acc)
}

/// `u = M1 x_curr`, `y = M1 x_prev − Aᵀ z_prev − M1 x_curr`.
pub fn dual_transform(
    x_curr: &[f64],
    x_prev: &[f64],
    z_prev: &[f64],
    m1: &Preconditioner,
    a: &LinearOperator,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let u = m1.apply(x_curr)?;
    let up = m1.apply(x_prev)?;
    let atz = a.apply_adjoint(z_prev)?;
    let y = (0..u.len()).map(|i| up[i] - atz[i] - u[i]).collect();
    Ok((y, u))
}

/// One ADMM iteration on the dual problem with penalty `tau`, in the scaling
/// `v = τ u`:
/// `z ← argmin g*(z) + (τ/2)‖Aᵀz + y − v/τ‖²`, `y ← prox_{f*/τ}(v/τ − Aᵀz)`,
/// `v ← v − τ(Aᵀz + y)`. The `z` step is solved to `tol`.
pub fn admm_dual_step(
    z: &[f64],
    y: &[f64],
    v: &[f64],
    tau: f64,
    problem: &SaddleProblem,
    tol: f64,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let a = &problem.a;
    let atz = a.apply_adjoint(z)?;
    let r: Vec<f64> = (0..y.len()).map(|i| atz[i] + y[i] - v[i] / tau).collect();
    let drift: Vec<f64> = a.apply(&r)?.iter().map(|t| tau * t).collect();
    let m2 = Preconditioner::Gram {
        tau,
        op: a.clone(),
        shift: 0.0,
    };
    let sub = ZSubproblem::new(z, &drift, &m2, &problem.g)?;
    let z_new = solve_exact(&sub, None, tol, 1_000_000)?;
    let atz_new = a.apply_adjoint(&z_new)?;
    let w: Vec<f64> = (0..y.len()).map(|i| v[i] / tau - atz_new[i]).collect();
    let mut y_new = vec![0.0; y.len()];
    problem.f.conj_prox_into(&w, Metric::Scalar(tau), &mut y_new)?;
    let v_new = (0..y.len())
        .map(|i| v[i] - tau * (atz_new[i] + y_new[i]))
        .collect();
    Ok((z_new, y_new, v_new))
}
