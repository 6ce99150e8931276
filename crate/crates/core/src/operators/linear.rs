use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::grid::{check_weights, div_into, grad_into};
use super::sparse::SparseMatrix;
use crate::error::{check_len, Error, Result};
use crate::precond::BlockOrdering;

/// Safety factor applied to every power-iteration norm estimate.
pub const NORM_SAFETY: f64 = 1.01;
pub const NORM_DEFAULT_ITERS: usize = 200;
pub const NORM_DEFAULT_TOL: f64 = 1e-10;
const NORM_SEED: u64 = 0x1dd9_4a11;

/// Linear map `A: R^n -> R^m` with an exact adjoint.
///
/// Grid operators act on row-major images; fields are flattened `[channel1; channel2]`.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearOperator {
    /// Forward-difference gradient `D`, `MN -> 2MN`.
    Grad { rows: usize, cols: usize, h: f64 },
    /// `diag(w) D` with `w` of length `2MN`.
    WeightedGrad {
        rows: usize,
        cols: usize,
        h: f64,
        weights: Vec<f64>,
    },
    /// Divergence `-Dᵀ`, `2MN -> MN`.
    Div { rows: usize, cols: usize, h: f64 },
    Sparse(SparseMatrix),
    /// Vertical concatenation; all parts share the column space.
    Stacked(Vec<LinearOperator>),
}

impl LinearOperator {
    pub fn grad(rows: usize, cols: usize, h: f64) -> Result<Self> {
        check_grid(rows, cols, h)?;
        Ok(Self::Grad { rows, cols, h })
    }

    pub fn weighted_grad(rows: usize, cols: usize, h: f64, weights: Vec<f64>) -> Result<Self> {
        check_grid(rows, cols, h)?;
        check_len(2 * rows * cols, weights.len(), "gradient weights")?;
        check_weights(&weights)?;
        Ok(Self::WeightedGrad {
            rows,
            cols,
            h,
            weights,
        })
    }

    pub fn div(rows: usize, cols: usize, h: f64) -> Result<Self> {
        check_grid(rows, cols, h)?;
        Ok(Self::Div { rows, cols, h })
    }

    pub fn stacked(parts: Vec<LinearOperator>) -> Result<Self> {
        let n = parts
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty operator stack".into()))?
            .ncols();
        for p in &parts {
            check_len(n, p.ncols(), "stacked operator columns")?;
        }
        Ok(Self::Stacked(parts))
    }

    pub fn nrows(&self) -> usize {
        match self {
            Self::Grad { rows, cols, .. } | Self::WeightedGrad { rows, cols, .. } => 2 * rows * cols,
            Self::Div { rows, cols, .. } => rows * cols,
            Self::Sparse(s) => s.rows(),
            Self::Stacked(parts) => parts.iter().map(Self::nrows).sum(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Self::Grad { rows, cols, .. } | Self::WeightedGrad { rows, cols, .. } => rows * cols,
            Self::Div { rows, cols, .. } => 2 * rows * cols,
            Self::Sparse(s) => s.cols(),
            Self::Stacked(parts) => parts.first().map_or(0, Self::ncols),
        }
    }

    /// Grid shape `(M, N)` for grid operators.
    pub fn grid_shape(&self) -> Option<(usize, usize)> {
        match self {
            Self::Grad { rows, cols, .. }
            | Self::WeightedGrad { rows, cols, .. }
            | Self::Div { rows, cols, .. } => Some((*rows, *cols)),
            _ => None,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.ncols(), x.len(), "operator input")?;
        let mut out = vec![0.0; self.nrows()];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    pub fn apply_adjoint(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_len(self.nrows(), z.len(), "adjoint input")?;
        let mut out = vec![0.0; self.ncols()];
        self.apply_adjoint_into(z, &mut out);
        Ok(out)
    }

    /// `out = A x`. Panics on a length mismatch.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.ncols(), "operator input length");
        assert_eq!(out.len(), self.nrows(), "operator output length");
        match self {
            Self::Grad { rows, cols, h } => {
                let (o1, o2) = out.split_at_mut(rows * cols);
                grad_into(x, *rows, *cols, *h, o1, o2);
            }
            Self::WeightedGrad {
                rows,
                cols,
                h,
                weights,
            } => {
                let (o1, o2) = out.split_at_mut(rows * cols);
                grad_into(x, *rows, *cols, *h, o1, o2);
                for (o, w) in out.iter_mut().zip(weights) {
                    *o *= w;
                }
            }
            Self::Div { rows, cols, h } => {
                let (p1, p2) = x.split_at(rows * cols);
                div_into(p1, p2, *rows, *cols, *h, out);
            }
            Self::Sparse(s) => s.mul_into(x, out),
            Self::Stacked(parts) => {
                let mut offset = 0;
                for p in parts {
                    let m = p.nrows();
                    p.apply_into(x, &mut out[offset..offset + m]);
                    offset += m;
                }
            }
        }
    }

    /// `out = Aᵀ z`. Panics on a length mismatch.
    pub fn apply_adjoint_into(&self, z: &[f64], out: &mut [f64]) {
        assert_eq!(z.len(), self.nrows(), "adjoint input length");
        assert_eq!(out.len(), self.ncols(), "adjoint output length");
        match self {
            Self::Grad { rows, cols, h } => {
                let (p1, p2) = z.split_at(rows * cols);
                div_into(p1, p2, *rows, *cols, *h, out);
                out.iter_mut().for_each(|v| *v = -*v);
            }
            Self::WeightedGrad {
                rows,
                cols,
                h,
                weights,
            } => {
                let wz: Vec<f64> = z.iter().zip(weights).map(|(a, b)| a * b).collect();
                let (p1, p2) = wz.split_at(rows * cols);
                div_into(p1, p2, *rows, *cols, *h, out);
                out.iter_mut().for_each(|v| *v = -*v);
            }
            Self::Div { rows, cols, h } => {
                let (o1, o2) = out.split_at_mut(rows * cols);
                grad_into(z, *rows, *cols, *h, o1, o2);
                out.iter_mut().for_each(|v| *v = -*v);
            }
            Self::Sparse(s) => s.mul_transpose_into(z, out),
            Self::Stacked(parts) => {
                out.fill(0.0);
                let mut tmp = vec![0.0; out.len()];
                let mut offset = 0;
                for p in parts {
                    let m = p.nrows();
                    p.apply_adjoint_into(&z[offset..offset + m], &mut tmp);
                    for (o, t) in out.iter_mut().zip(&tmp) {
                        *o += t;
                    }
                    offset += m;
                }
            }
        }
    }

    /// Materializes the operator row by row.
    pub fn to_sparse(&self) -> SparseMatrix {
        match self {
            Self::Sparse(s) => s.clone(),
            Self::Stacked(parts) => {
                let blocks: Vec<_> = parts.iter().map(Self::to_sparse).collect();
                SparseMatrix::vstack(&blocks).expect("stack parts share columns")
            }
            Self::Grad { rows, cols, h } => grad_matrix(*rows, *cols, *h, None),
            Self::WeightedGrad {
                rows,
                cols,
                h,
                weights,
            } => grad_matrix(*rows, *cols, *h, Some(weights)),
            Self::Div { rows, cols, h } => {
                let d = grad_matrix(*rows, *cols, *h, None);
                let neg: Vec<_> = d.triplets().map(|(i, j, v)| (j, i, -v)).collect();
                SparseMatrix::from_triplets(rows * cols, 2 * rows * cols, neg).expect("valid divergence")
            }
        }
    }

    /// `λ_max(AᵀA)` by power iteration, times [`NORM_SAFETY`].
    pub fn op_norm_sq_estimate(&self, iters: usize, tol: f64) -> Result<f64> {
        self.op_norm_sq_estimate_seeded(iters, tol, NORM_SEED)
    }

    pub fn op_norm_sq_estimate_seeded(&self, iters: usize, tol: f64, seed: u64) -> Result<f64> {
        if iters == 0 {
            return Err(Error::InvalidParameter("power iteration needs iters >= 1".into()));
        }
        let n = self.ncols();
        if n == 0 || self.nrows() == 0 {
            return Ok(0.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        let mut av = vec![0.0; self.nrows()];
        let mut atav = vec![0.0; n];
        let mut lambda = 0.0;
        for _ in 0..iters {
            self.apply_into(&v, &mut av);
            let next = dot(&av, &av);
            self.apply_adjoint_into(&av, &mut atav);
            let nrm = norm(&atav);
            if nrm == 0.0 {
                return Ok(0.0);
            }
            for (vi, wi) in v.iter_mut().zip(&atav) {
                *vi = wi / nrm;
            }
            let done = (next - lambda).abs() <= tol * next.abs();
            lambda = next;
            if done {
                break;
            }
        }
        Ok(lambda * NORM_SAFETY)
    }

    /// Diagonals of `L_jᵀ L_j` for every block `j` of `ordering`, where the columns
    /// of `L_j` are the rows of `A` indexed by the block.
    ///
    /// Fails if two rows in one block share a structurally nonzero column.
    pub fn block_gram(&self, ordering: &BlockOrdering) -> Result<Vec<Vec<f64>>> {
        check_len(self.nrows(), ordering.dim(), "ordering dimension")?;
        let s = self.to_sparse();
        let mut owner = vec![usize::MAX; s.cols()];
        let mut out = Vec::with_capacity(ordering.blocks().len());
        for block in ordering.blocks() {
            let mut diag = Vec::with_capacity(block.len());
            for &r in block {
                let (c, v) = s.row(r);
                for &j in c {
                    if owner[j] != usize::MAX {
                        return Err(Error::OrderingInvalid(format!(
                            "rows {} and {} of one block share column {}",
                            owner[j] + 1,
                            r + 1,
                            j + 1
                        )));
                    }
                    owner[j] = r;
                }
                diag.push(v.iter().map(|x| x * x).sum());
            }
            for &r in block {
                for &j in s.row(r).0 {
                    owner[j] = usize::MAX;
                }
            }
            out.push(diag);
        }
        Ok(out)
    }
}

fn check_grid(rows: usize, cols: usize, h: f64) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter("grid must be non-empty".into()));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid step h must be > 0, got {h}")));
    }
    Ok(())
}

fn grad_matrix(rows: usize, cols: usize, h: f64, weights: Option<&Vec<f64>>) -> SparseMatrix {
    let n = rows * cols;
    let inv_h = 1.0 / h;
    let mut t = Vec::with_capacity(4 * n);
    for i in 0..rows {
        for j in 0..cols {
            let k = i * cols + j;
            let w1 = weights.map_or(1.0, |w| w[k]);
            let w2 = weights.map_or(1.0, |w| w[n + k]);
            if i + 1 < rows {
                t.push((k, k, -inv_h * w1));
                t.push((k, k + cols, inv_h * w1));
            }
            if j + 1 < cols {
                t.push((n + k, k, -inv_h * w2));
                t.push((n + k, k + 1, inv_h * w2));
            }
        }
    }
    SparseMatrix::from_triplets(2 * n, n, t).expect("valid gradient")
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::grid::{grad2d, Grid2D};

    #[test]
    fn sparse_and_stacked_apply() {
        let a = LinearOperator::Sparse(SparseMatrix::from_dense(&[vec![2.0]]).unwrap());
        assert_eq!(a.apply(&[3.0]).unwrap(), vec![6.0]);

        let r = SparseMatrix::from_dense(&[vec![1.0, 0.0, 2.0, 0.0], vec![0.0, -1.0, 0.0, 3.0]]).unwrap();
        let d = LinearOperator::grad(2, 2, 1.0).unwrap();
        let s = LinearOperator::stacked(vec![LinearOperator::Sparse(r.clone()), d.clone()]).unwrap();
        let u = [0.0, 1.0, 2.0, 3.0];
        let mut expect = LinearOperator::Sparse(r).apply(&u).unwrap();
        expect.extend(d.apply(&u).unwrap());
        assert_eq!(s.apply(&u).unwrap(), expect);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let d = LinearOperator::grad(2, 3, 1.0).unwrap();
        assert!(matches!(d.apply(&[0.0; 5]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(d.apply_adjoint(&[0.0; 6]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn materialized_gradient_matches_stencil() {
        let u = Grid2D::from_fn(3, 4, |i, j| (i * 7 + j * j) as f64 * 0.3);
        let f = grad2d(&u, 0.5).unwrap();
        let op = LinearOperator::grad(3, 4, 0.5).unwrap();
        let mut out = vec![0.0; 24];
        op.to_sparse().mul_into(u.values(), &mut out);
        assert_eq!(out, f.to_flat());
    }

    #[test]
    fn norm_of_scaled_identity() {
        let a = LinearOperator::Sparse(SparseMatrix::diagonal(&[2.0, 2.0, 2.0]));
        let est = a.op_norm_sq_estimate(NORM_DEFAULT_ITERS, NORM_DEFAULT_TOL).unwrap();
        assert!((est - 4.04).abs() < 1e-9, "{est}");
        let z = LinearOperator::Sparse(SparseMatrix::from_triplets(3, 3, vec![]).unwrap());
        assert_eq!(z.op_norm_sq_estimate(10, 1e-10).unwrap(), 0.0);
        assert!(a.op_norm_sq_estimate(0, 1e-10).is_err());
    }
}
