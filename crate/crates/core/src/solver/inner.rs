//! Iterators for the dual subproblem
//! `min_z g*(z) + ⟨z − z^k, c⟩ + ½‖z − z^k‖²_{M2}` with drift `c = −A(2x^{k+1} − x^k)`.

use crate::error::{check_len, Error, Result};
use crate::operators::{dot, norm, LinearOperator, SparseMatrix};
use crate::precond::{ordering_for, BlockOrdering, Preconditioner};
use crate::prox::{scalar_conj_prox, Metric, ProxFunction, ScalarConj};

/// One dual subproblem, held without forming `M2⁻¹`.
#[derive(Debug, Clone, Copy)]
pub struct ZSubproblem<'a> {
    pub z_ref: &'a [f64],
    pub drift: &'a [f64],
    pub m2: &'a Preconditioner,
    pub g: &'a ProxFunction,
}

impl<'a> ZSubproblem<'a> {
    pub fn new(
        z_ref: &'a [f64],
        drift: &'a [f64],
        m2: &'a Preconditioner,
        g: &'a ProxFunction,
    ) -> Result<Self> {
        let m = g.dim();
        check_len(m, z_ref.len(), "subproblem reference point")?;
        check_len(m, drift.len(), "subproblem drift")?;
        check_len(m, m2.dim(), "subproblem metric")?;
        Ok(Self {
            z_ref,
            drift,
            m2,
            g,
        })
    }

    pub fn dim(&self) -> usize {
        self.z_ref.len()
    }

    /// Smooth part `⟨z − z^k, c⟩ + ½‖z − z^k‖²_{M2}` and its gradient.
    fn smooth(&self, z: &[f64], grad: &mut [f64]) -> f64 {
        let dz: Vec<f64> = z.iter().zip(self.z_ref).map(|(a, b)| a - b).collect();
        self.m2.apply_into(&dz, grad);
        let q = 0.5 * dot(&dz, grad) + dot(&dz, self.drift);
        for (gi, ci) in grad.iter_mut().zip(self.drift) {
            *gi += ci;
        }
        q
    }

    pub fn objective(&self, z: &[f64]) -> Result<f64> {
        let mut g = vec![0.0; z.len()];
        Ok(self.g.conj_value(z)? + self.smooth(z, &mut g))
    }

    /// `prox_{γ g*}(z − γ ∇h2(z))`; also returns the smooth value at `z`.
    fn proxgrad_step(&self, z: &[f64], gamma: f64, grad: &mut [f64], out: &mut [f64]) -> Result<f64> {
        let val = self.smooth(z, grad);
        let v: Vec<f64> = z.iter().zip(grad.iter()).map(|(a, g)| a - gamma * g).collect();
        self.g.conj_prox_into(&v, Metric::Scalar(1.0 / gamma), out)?;
        Ok(val)
    }
}

fn check_gamma_p(gamma: f64, p: usize) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("inner stepsize must be > 0, got {gamma}")));
    }
    if p == 0 {
        return Err(Error::InvalidParameter("inner count p must be >= 1".into()));
    }
    Ok(())
}

/// `p` proximal-gradient steps from `z^k`.
pub fn inner_proxgrad(sub: &ZSubproblem<'_>, gamma: f64, p: usize) -> Result<Vec<f64>> {
    check_gamma_p(gamma, p)?;
    let m = sub.dim();
    let mut z = sub.z_ref.to_vec();
    let mut next = vec![0.0; m];
    let mut grad = vec![0.0; m];
    for _ in 0..p {
        sub.proxgrad_step(&z, gamma, &mut grad, &mut next)?;
        std::mem::swap(&mut z, &mut next);
    }
    Ok(z)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FistaOutput {
    pub z: Vec<f64>,
    pub restarts: usize,
    pub steps: usize,
}

/// FISTA with function-value restart; `p` counts gradient evaluations.
pub fn inner_fista_restart(sub: &ZSubproblem<'_>, gamma: f64, p: usize) -> Result<Vec<f64>> {
    Ok(fista(sub, gamma, p, 0.0)?.z)
}

/// FISTA with restart, stopping after `max_steps` or once the step falls below
/// `tol · (1 + ‖z‖)`.
pub fn fista(sub: &ZSubproblem<'_>, gamma: f64, max_steps: usize, tol: f64) -> Result<FistaOutput> {
    check_gamma_p(gamma, max_steps)?;
    let m = sub.dim();
    let mut z = sub.z_ref.to_vec();
    let mut y = z.clone();
    let mut next = vec![0.0; m];
    let mut grad = vec![0.0; m];
    let mut t = 1.0f64;
    let mut f_prev = sub.objective(&z)?;
    let mut restarts = 0;
    let mut steps = 0;
    while steps < max_steps {
        sub.proxgrad_step(&y, gamma, &mut grad, &mut next)?;
        steps += 1;
        let f_next = sub.objective(&next)?;
        let step: f64 = next.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if f_next > f_prev {
            // restart: drop momentum and continue from the new point
            t = 1.0;
            y.copy_from_slice(&next);
            restarts += 1;
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            for i in 0..m {
                y[i] = next[i] + beta * (next[i] - z[i]);
            }
            t = t_next;
        }
        std::mem::swap(&mut z, &mut next);
        f_prev = f_next;
        if tol > 0.0 && step <= tol * (1.0 + norm(&z)) {
            break;
        }
    }
    Ok(FistaOutput { z, restarts, steps })
}

/// Precomputed data for closed-form block-coordinate sweeps.
#[derive(Debug, Clone)]
pub struct BcdPlan {
    segments: Vec<Segment>,
    dim: usize,
    num_blocks: usize,
}

#[derive(Debug, Clone)]
enum Segment {
    /// Diagonal metric block: solved exactly in one pass.
    Diag {
        start: usize,
        d: Vec<f64>,
        g: ProxFunction,
    },
    /// `tau · L Lᵀ + shift · I` block swept by color.
    Gram {
        start: usize,
        tau: f64,
        shift: f64,
        a: SparseMatrix,
        diag: Vec<f64>,
        blocks: Vec<Vec<usize>>,
        kinds: Vec<ScalarConj>,
        /// Operator of the block, kept to recognise the full problem operator.
        op: LinearOperator,
    },
}

impl BcdPlan {
    /// Builds the sweep plan for `M2` and `g`. Gram blocks use `ordering` when given
    /// (top-level Gram only), the operator's color ordering otherwise.
    pub fn new(m2: &Preconditioner, g: &ProxFunction, ordering: Option<&BlockOrdering>) -> Result<Self> {
        check_len(g.dim(), m2.dim(), "BCD metric")?;
        let mut segments = Vec::new();
        Self::collect(m2, g, 0, ordering, &mut segments)?;
        let num_blocks = segments
            .iter()
            .map(|s| match s {
                Segment::Diag { .. } => 1,
                Segment::Gram { blocks, .. } => blocks.len(),
            })
            .sum();
        Ok(Self {
            segments,
            dim: m2.dim(),
            num_blocks,
        })
    }

    fn collect(
        m2: &Preconditioner,
        g: &ProxFunction,
        start: usize,
        ordering: Option<&BlockOrdering>,
        out: &mut Vec<Segment>,
    ) -> Result<()> {
        let n = m2.dim();
        match m2 {
            Preconditioner::ScaledIdentity { .. } | Preconditioner::Diagonal(_) => out.push(Segment::Diag {
                start,
                d: m2.diagonal().expect("diagonal form"),
                g: g.slice(start, n)?,
            }),
            Preconditioner::Gram { tau, op, shift } => {
                let ord = match ordering {
                    Some(o) => o.clone(),
                    None => ordering_for(op)?,
                };
                let diag: Vec<f64> = op.block_gram(&ord)?.into_iter().flatten().collect();
                let mut d = vec![0.0; n];
                for (&i, v) in ord.blocks().iter().flatten().zip(diag) {
                    d[i] = v;
                }
                let kinds = (0..n)
                    .map(|i| g.scalar_conjugate(start + i))
                    .collect::<Result<Vec<_>>>()?;
                out.push(Segment::Gram {
                    start,
                    tau: *tau,
                    shift: *shift,
                    a: op.to_sparse(),
                    diag: d,
                    blocks: ord.blocks().to_vec(),
                    kinds,
                    op: op.clone(),
                });
            }
            Preconditioner::BlockDiag(parts) => {
                let mut o = start;
                for p in parts {
                    Self::collect(p, g, o, None, out)?;
                    o += p.dim();
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of color blocks `l` swept per epoch.
    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    /// True when the plan is a single Gram block over `a`, so the sweep also tracks
    /// `Aᵀ(z − z^k)`.
    pub fn tracks_adjoint_of(&self, a: &LinearOperator) -> bool {
        matches!(self.segments.as_slice(), [Segment::Gram { op, .. }] if op == a)
    }

    /// Sets `z = z^k`, solves the diagonal blocks exactly and clears the sweep state.
    pub fn start(&self, sub: &ZSubproblem<'_>, z: &mut [f64], work: &mut BcdWork) -> Result<()> {
        check_len(self.dim, sub.dim(), "BCD subproblem")?;
        z.copy_from_slice(sub.z_ref);
        work.w.resize_with(self.segments.len(), Vec::new);
        for (seg, w) in self.segments.iter().zip(work.w.iter_mut()) {
            match seg {
                Segment::Diag { start, d, g } => {
                    let r = *start..start + d.len();
                    let v: Vec<f64> = r
                        .clone()
                        .map(|i| sub.z_ref[i] - sub.drift[i] / d[i - start])
                        .collect();
                    g.conj_prox_into(&v, Metric::Diag(d), &mut z[r])?;
                }
                Segment::Gram { a, .. } => {
                    w.clear();
                    w.resize(a.cols(), 0.0);
                }
            }
        }
        Ok(())
    }

    /// One epoch over every Gram block.
    pub fn epoch(&self, sub: &ZSubproblem<'_>, z: &mut [f64], work: &mut BcdWork) {
        for (seg, w) in self.segments.iter().zip(work.w.iter_mut()) {
            if let Segment::Gram {
                start,
                tau,
                shift,
                a,
                diag,
                blocks,
                kinds,
                ..
            } = seg
            {
                let r = *start..start + diag.len();
                gram_epoch(
                    a,
                    *tau,
                    *shift,
                    diag,
                    blocks,
                    kinds,
                    &sub.z_ref[r.clone()],
                    &sub.drift[r.clone()],
                    &mut z[r],
                    w,
                );
            }
        }
    }

    /// `p` epochs from `z^k`.
    pub fn run(&self, sub: &ZSubproblem<'_>, p: usize, z: &mut [f64], work: &mut BcdWork) -> Result<()> {
        if p == 0 {
            return Err(Error::InvalidParameter("inner count p must be >= 1".into()));
        }
        self.start(sub, z, work)?;
        for _ in 0..p {
            self.epoch(sub, z, work);
        }
        Ok(())
    }

    /// Epochs until one moves `z` by less than `tol · (1 + ‖z‖)`; returns the count.
    pub fn run_to_tolerance(
        &self,
        sub: &ZSubproblem<'_>,
        tol: f64,
        max_epochs: usize,
        z: &mut [f64],
        work: &mut BcdWork,
    ) -> Result<usize> {
        self.start(sub, z, work)?;
        let mut prev = z.to_vec();
        for e in 1..=max_epochs {
            self.epoch(sub, z, work);
            let step: f64 = z.iter().zip(&prev).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if step <= tol * (1.0 + norm(z)) {
                return Ok(e);
            }
            prev.copy_from_slice(z);
        }
        Ok(max_epochs)
    }
}

/// Scratch for [`BcdPlan`]: per Gram block, the running `Lᵀ(z − z^k)`.
#[derive(Debug, Clone, Default)]
pub struct BcdWork {
    w: Vec<Vec<f64>>,
}

impl BcdWork {
    /// `Lᵀ(z − z^k)` of the first Gram block.
    pub fn adjoint_delta(&self) -> Option<&[f64]> {
        self.w.iter().find(|w| !w.is_empty()).map(Vec::as_slice)
    }
}

/// One cyclic sweep over the color blocks of a Gram metric. Rows inside a block
/// share no column, so each block update is an exact block minimization and the
/// sequential order inside a block does not change the result.
#[allow(clippy::too_many_arguments)]
fn gram_epoch(
    a: &SparseMatrix,
    tau: f64,
    shift: f64,
    diag: &[f64],
    blocks: &[Vec<usize>],
    kinds: &[ScalarConj],
    zr: &[f64],
    c: &[f64],
    z: &mut [f64],
    w: &mut [f64],
) {
    for block in blocks {
        for &i in block {
            let (cols, vals) = a.row(i);
            let mut aw = 0.0;
            for (j, v) in cols.iter().zip(vals) {
                aw += v * w[*j];
            }
            let d = diag[i];
            let h = tau * d + shift;
            let q = c[i] + tau * (aw - d * (z[i] - zr[i]));
            let s = if h > 0.0 {
                scalar_conj_prox(&kinds[i], zr[i] - q / h, 1.0 / h)
            } else {
                scalar_conj_prox(&kinds[i], zr[i] - q, 1.0)
            };
            let delta = s - z[i];
            if delta != 0.0 {
                z[i] = s;
                for (j, v) in cols.iter().zip(vals) {
                    w[*j] += delta * v;
                }
            }
        }
    }
}

/// `p` BCD epochs under `ordering` (a convenience wrapper that builds the plan).
pub fn inner_bcd_epoch(sub: &ZSubproblem<'_>, ordering: &BlockOrdering, p: usize) -> Result<Vec<f64>> {
    if !matches!(sub.m2, Preconditioner::Gram { .. }) {
        return Err(Error::UnsupportedMetric(
            "block sweeps with an explicit ordering need a Gram metric".into(),
        ));
    }
    let plan = BcdPlan::new(sub.m2, sub.g, Some(ordering))?;
    let mut z = vec![0.0; sub.dim()];
    plan.run(sub, p, &mut z, &mut BcdWork::default())?;
    Ok(z)
}

/// High-accuracy subproblem solve: closed form for diagonal `M2`, block sweeps when
/// an ordering exists, restarted FISTA otherwise.
pub fn solve_exact(sub: &ZSubproblem<'_>, plan: Option<&BcdPlan>, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let m = sub.dim();
    let mut z = vec![0.0; m];
    if let Some(d) = sub.m2.diagonal() {
        let v: Vec<f64> = (0..m).map(|i| sub.z_ref[i] - sub.drift[i] / d[i]).collect();
        sub.g.conj_prox_into(&v, Metric::Diag(&d), &mut z)?;
        return Ok(z);
    }
    if let Some(plan) = plan {
        plan.run_to_tolerance(sub, tol, max_iter, &mut z, &mut BcdWork::default())?;
        return Ok(z);
    }
    let gamma = 1.0 / sub.m2.lambda_max_estimate()?;
    Ok(fista(sub, gamma, max_iter, tol)?.z)
}
