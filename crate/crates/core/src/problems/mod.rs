//! The four application problems, synthetic inputs, and the reference oracle.

mod reference;
pub mod synth;

pub use reference::{reference_solve, reference_solve_problem, reference_solve_with, ReferenceOptions, ReferenceSolution};
pub use synth::{add_impulse_noise, synth_line_integral_matrix, Rgb};

use crate::error::{check_len, Error, Result};
use crate::operators::{Grid2D, LinearOperator, SparseMatrix, NORM_DEFAULT_ITERS, NORM_DEFAULT_TOL};
use crate::precond::{ct_block_precond, gram_precond, pock_diagonal, scaled_identity, CtVariant};
use crate::prox::ProxFunction;
use crate::solver::{InnerKind, SaddleProblem, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    TvL1,
    GraphCut,
    Emd,
    Ct(CtVariant),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::TvL1 => "tvl1",
            Family::GraphCut => "graphcut",
            Family::Emd => "emd",
            Family::Ct(_) => "ct",
        }
    }
}

/// A built problem with its metadata and recommended solver settings.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub family: Family,
    pub problem: SaddleProblem,
    pub rows: usize,
    pub cols: usize,
    pub params: Vec<(String, String)>,
    /// Recommended outer step `τ` and inner count `p` for iPrePDHG with BCD.
    pub tau: f64,
    pub p: usize,
    pub phi_star: Option<f64>,
}

impl ProblemInstance {
    pub fn name(&self) -> &'static str {
        self.family.name()
    }

    /// iPrePDHG with block sweeps: `(I/τ, τAAᵀ)`, or the CT block pair.
    pub fn iprepdhg_config(&self, tau: f64, p: usize) -> Result<SolverConfig> {
        let (m1, m2) = self.prepdhg_pair(tau)?;
        Ok(SolverConfig::iprepdhg(m1, m2, InnerKind::Bcd, p))
    }

    /// Preconditioner pair used by the PrePDHG-family runs at step `tau`.
    pub fn prepdhg_pair(&self, tau: f64) -> Result<(crate::precond::Preconditioner, crate::precond::Preconditioner)> {
        match self.family {
            Family::Ct(variant) => {
                let r = self.ct_matrix()?;
                ct_block_precond(r, self.rows, self.cols, tau, variant)
            }
            _ => Ok((
                scaled_identity(tau, self.problem.n())?,
                gram_precond(&self.problem.a, tau)?,
            )),
        }
    }

    pub fn recommended_config(&self) -> Result<SolverConfig> {
        self.iprepdhg_config(self.tau, self.p)
    }

    /// PDHG with `σ = 1/(τ‖A‖²)`.
    pub fn pdhg_config(&self, tau: f64) -> Result<SolverConfig> {
        let l = self.problem.a.op_norm_sq_estimate(NORM_DEFAULT_ITERS, NORM_DEFAULT_TOL)?;
        Ok(SolverConfig::pdhg(tau, 1.0 / (tau * l)))
    }

    /// Diagonally preconditioned PDHG (Pock-Chambolle sums).
    pub fn dp_pdhg_config(&self) -> Result<SolverConfig> {
        let (m1, m2) = pock_diagonal(&self.problem.a)?;
        Ok(SolverConfig::prepdhg_exact(m1, m2))
    }

    /// PrePDHG with the dual subproblem solved to `tol`.
    pub fn prepdhg_exact_config(&self, tau: f64, tol: f64) -> Result<SolverConfig> {
        let (m1, m2) = self.prepdhg_pair(tau)?;
        let mut c = SolverConfig::prepdhg_exact(m1, m2);
        c.exact_tol = tol;
        Ok(c)
    }

    fn ct_matrix(&self) -> Result<&SparseMatrix> {
        match &self.problem.a {
            LinearOperator::Stacked(parts) => match parts.first() {
                Some(LinearOperator::Sparse(r)) => Ok(r),
                _ => Err(Error::InvalidParameter("CT operator must start with R".into())),
            },
            _ => Err(Error::InvalidParameter("CT operator must be stacked".into())),
        }
    }
}

fn check_pos(v: f64, name: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")))
    }
}

/// TV-L1 denoising: `‖Du‖₁ + λ‖u − b‖₁`.
pub fn tvl1(b: &Grid2D, lambda: f64) -> Result<ProblemInstance> {
    check_pos(lambda, "lambda")?;
    let (rows, cols) = (b.rows(), b.cols());
    let f = ProxFunction::L1 {
        weight: lambda,
        shift: b.values().to_vec(),
    };
    let g = ProxFunction::l1(1.0, 2 * rows * cols);
    let problem = SaddleProblem::new(f, g, LinearOperator::grad(rows, cols, 1.0)?)?;
    Ok(ProblemInstance {
        family: Family::TvL1,
        problem,
        rows,
        cols,
        params: vec![("lambda".into(), lambda.to_string())],
        tau: 0.01,
        p: 1,
        phi_star: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphCutParams {
    pub alpha: f64,
    pub beta: f64,
    pub mu_f: [f64; 3],
    pub mu_b: [f64; 3],
}

impl Default for GraphCutParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 10.0,
            mu_f: [0.0, 0.0, 1.0],
            mu_b: [0.0, 1.0, 0.0],
        }
    }
}

/// Weighted-TV graph cut: `‖D_w u‖₁ + ⟨u, w^u⟩` over `0 ≤ u ≤ 1`.
pub fn graphcut(image: &[Grid2D], params: GraphCutParams) -> Result<ProblemInstance> {
    if image.len() != 3 {
        return Err(Error::InvalidParameter(format!(
            "graph cut needs an RGB image, got {} channels",
            image.len()
        )));
    }
    check_pos(params.alpha, "alpha")?;
    check_pos(params.beta, "beta")?;
    let (rows, cols) = (image[0].rows(), image[0].cols());
    for ch in image {
        if ch.rows() != rows || ch.cols() != cols {
            return Err(Error::InvalidParameter("channel shapes differ".into()));
        }
    }
    let n = rows * cols;
    let px = |k: usize| [image[0].values()[k], image[1].values()[k], image[2].values()[k]];
    let dist2 = |a: [f64; 3], b: [f64; 3]| -> f64 { (0..3).map(|c| (a[c] - b[c]).powi(2)).sum() };
    let unary: Vec<f64> = (0..n)
        .map(|k| params.alpha * (dist2(px(k), params.mu_f) - dist2(px(k), params.mu_b)))
        .collect();
    let mut w = vec![1.0; 2 * n];
    for i in 0..rows {
        for j in 0..cols {
            let k = i * cols + j;
            if i + 1 < rows {
                w[k] = (-params.beta * dist2(px(k + cols), px(k)).sqrt()).exp();
            }
            if j + 1 < cols {
                w[n + k] = (-params.beta * dist2(px(k + 1), px(k)).sqrt()).exp();
            }
        }
    }
    let f = ProxFunction::LinearPlusBox {
        linear: unary,
        lo: 0.0,
        hi: 1.0,
    };
    let g = ProxFunction::l1(1.0, 2 * n);
    let problem = SaddleProblem::new(f, g, LinearOperator::weighted_grad(rows, cols, 1.0, w)?)?;
    Ok(ProblemInstance {
        family: Family::GraphCut,
        problem,
        rows,
        cols,
        params: vec![
            ("alpha".into(), params.alpha.to_string()),
            ("beta".into(), params.beta.to_string()),
        ],
        tau: 10.0,
        p: 2,
        phi_star: None,
    })
}

/// Default EMD grid step `(N − 1)/4`.
pub fn emd_default_h(cols: usize) -> f64 {
    (cols.max(2) - 1) as f64 / 4.0
}

/// Earth mover's distance: `min ‖m‖_{1,2}` s.t. `div m = ρ⁰ − ρ¹`. Both marginals
/// are normalized to unit mass after the equal-mass check.
pub fn emd(rho0: &Grid2D, rho1: &Grid2D, h: f64) -> Result<ProblemInstance> {
    check_pos(h, "h")?;
    let (rows, cols) = (rho0.rows(), rho0.cols());
    if rho1.rows() != rows || rho1.cols() != cols {
        return Err(Error::InfeasibleMarginals("marginal shapes differ".into()));
    }
    if rho0.values().iter().chain(rho1.values()).any(|v| *v < 0.0) {
        return Err(Error::InfeasibleMarginals("marginals must be nonnegative".into()));
    }
    let (s0, s1) = (rho0.sum(), rho1.sum());
    if !(s0 > 0.0) || (s0 - s1).abs() > 1e-12 * s0.max(s1) {
        return Err(Error::InfeasibleMarginals(format!("masses differ: {s0} vs {s1}")));
    }
    let target: Vec<f64> = rho0
        .values()
        .iter()
        .zip(rho1.values())
        .map(|(a, b)| a / s0 - b / s1)
        .collect();
    let n = rows * cols;
    let f = ProxFunction::GroupL12 {
        weight: 1.0,
        pixels: n,
    };
    let g = ProxFunction::PointIndicator { target };
    let problem = SaddleProblem::new(f, g, LinearOperator::div(rows, cols, h)?)?;
    Ok(ProblemInstance {
        family: Family::Emd,
        problem,
        rows,
        cols,
        params: vec![("h".into(), h.to_string())],
        tau: 0.01,
        p: 2,
        phi_star: None,
    })
}

/// CT reconstruction `½‖Ru − b‖² + λ‖Du‖₁` in the split `f = 0`, `A = (R; D)`.
pub fn ct(r: SparseMatrix, b: &[f64], lambda: f64, rows: usize, cols: usize, variant: CtVariant) -> Result<ProblemInstance> {
    check_pos(lambda, "lambda")?;
    check_len(rows * cols, r.cols(), "CT matrix columns")?;
    check_len(r.rows(), b.len(), "CT data")?;
    let m_r = r.rows();
    let g = ProxFunction::SumSeparable(vec![
        ProxFunction::Quadratic {
            weight: 1.0,
            center: b.to_vec(),
        },
        ProxFunction::l1(lambda, 2 * rows * cols),
    ]);
    let a = LinearOperator::stacked(vec![LinearOperator::Sparse(r), LinearOperator::grad(rows, cols, 1.0)?])?;
    let problem = SaddleProblem::new(ProxFunction::zero(rows * cols), g, a)?;
    Ok(ProblemInstance {
        family: Family::Ct(variant),
        problem,
        rows,
        cols,
        params: vec![
            ("lambda".into(), lambda.to_string()),
            ("rays".into(), m_r.to_string()),
        ],
        tau: 0.01,
        p: 2,
        phi_star: None,
    })
}
