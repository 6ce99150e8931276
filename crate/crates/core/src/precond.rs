//! Preconditioner pairs `(M1, M2)`, their validity check, and color-block orderings.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{check_len, Error, Result};
use crate::operators::{LinearOperator, SparseMatrix, NORM_DEFAULT_ITERS, NORM_DEFAULT_TOL};
use crate::prox::DiagonalMetric;

/// Largest `m + n` accepted by the dense validators.
pub const DENSE_LIMIT: usize = 2000;

/// Symmetric positive (semi)definite metric.
#[derive(Debug, Clone, PartialEq)]
pub enum Preconditioner {
    /// `scale · I`.
    ScaledIdentity { scale: f64, dim: usize },
    Diagonal(Vec<f64>),
    /// `tau · A Aᵀ + shift · I`, applied through matvecs only.
    Gram {
        tau: f64,
        op: LinearOperator,
        shift: f64,
    },
    /// Block-diagonal composite over consecutive coordinate ranges.
    BlockDiag(Vec<Preconditioner>),
}

impl Preconditioner {
    pub fn dim(&self) -> usize {
        match self {
            Self::ScaledIdentity { dim, .. } => *dim,
            Self::Diagonal(d) => d.len(),
            Self::Gram { op, .. } => op.nrows(),
            Self::BlockDiag(parts) => parts.iter().map(Self::dim).sum(),
        }
    }

    /// Diagonal entries for the diagonal forms, `None` otherwise.
    pub fn diagonal(&self) -> Option<Vec<f64>> {
        match self {
            Self::ScaledIdentity { scale, dim } => Some(vec![*scale; *dim]),
            Self::Diagonal(d) => Some(d.clone()),
            Self::Gram { .. } => None,
            Self::BlockDiag(parts) => {
                let mut out = Vec::with_capacity(self.dim());
                for p in parts {
                    out.extend(p.diagonal()?);
                }
                Some(out)
            }
        }
    }

    pub fn is_diagonal(&self) -> bool {
        match self {
            Self::ScaledIdentity { .. } | Self::Diagonal(_) => true,
            Self::Gram { .. } => false,
            Self::BlockDiag(parts) => parts.iter().all(Self::is_diagonal),
        }
    }

    /// The metric as a [`DiagonalMetric`]; fails for non-diagonal or singular forms.
    pub fn as_metric(&self) -> Result<DiagonalMetric> {
        let d = self.diagonal().ok_or_else(|| {
            Error::UnsupportedMetric("a non-diagonal preconditioner cannot serve as M1".into())
        })?;
        DiagonalMetric::new(d)
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), v.len(), "preconditioner input")?;
        let mut out = vec![0.0; v.len()];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Self::ScaledIdentity { scale, .. } => {
                for (o, x) in out.iter_mut().zip(v) {
                    *o = scale * x;
                }
            }
            Self::Diagonal(d) => {
                for ((o, x), di) in out.iter_mut().zip(v).zip(d) {
                    *o = di * x;
                }
            }
            Self::Gram { tau, op, shift } => {
                let mut t = vec![0.0; op.ncols()];
                op.apply_adjoint_into(v, &mut t);
                op.apply_into(&t, out);
                for (o, x) in out.iter_mut().zip(v) {
                    *o = tau * *o + shift * x;
                }
            }
            Self::BlockDiag(parts) => {
                let mut o = 0;
                for p in parts {
                    let d = p.dim();
                    p.apply_into(&v[o..o + d], &mut out[o..o + d]);
                    o += d;
                }
            }
        }
    }

    /// `M⁻¹ v` for the diagonal forms.
    pub fn apply_inverse(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), v.len(), "preconditioner input")?;
        let d = self.diagonal().ok_or_else(|| {
            Error::UnsupportedMetric("Gram preconditioners are never inverted".into())
        })?;
        Ok(v.iter().zip(&d).map(|(x, di)| x / di).collect())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        match self {
            Self::ScaledIdentity { scale, .. } => DMatrix::identity(n, n) * *scale,
            Self::Diagonal(d) => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)),
            Self::Gram { tau, op, shift } => {
                let a = sparse_to_dense(&op.to_sparse());
                &a * a.transpose() * *tau + DMatrix::identity(n, n) * *shift
            }
            Self::BlockDiag(parts) => {
                let mut out = DMatrix::zeros(n, n);
                let mut o = 0;
                for p in parts {
                    let d = p.dim();
                    out.view_mut((o, o), (d, d)).copy_from(&p.to_dense());
                    o += d;
                }
                out
            }
        }
    }

    /// Upper estimate of `λ_max` from power iteration; exact for diagonal forms.
    pub fn lambda_max_estimate(&self) -> Result<f64> {
        match self {
            Self::ScaledIdentity { scale, .. } => Ok(*scale),
            Self::Diagonal(d) => Ok(d.iter().cloned().fold(0.0, f64::max)),
            Self::Gram { tau, op, shift } => {
                Ok(tau * op.op_norm_sq_estimate(NORM_DEFAULT_ITERS, NORM_DEFAULT_TOL)? + shift)
            }
            Self::BlockDiag(parts) => parts
                .iter()
                .map(Self::lambda_max_estimate)
                .try_fold(0.0, |m, v| v.map(|v| f64::max(m, v))),
        }
    }

    /// `(λ_min, λ_max)`: exact for diagonal forms, dense eigensolve otherwise.
    pub fn eig_range(&self) -> Result<(f64, f64)> {
        if let Some(d) = self.diagonal() {
            let lo = d.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = d.iter().cloned().fold(0.0, f64::max);
            return Ok((lo, hi));
        }
        if self.dim() > DENSE_LIMIT {
            return Err(Error::TooLarge {
                size: self.dim(),
                limit: DENSE_LIMIT,
            });
        }
        let e = SymmetricEigen::new(self.to_dense()).eigenvalues;
        Ok((e.min(), e.max()))
    }
}

pub fn scaled_identity(tau: f64, n: usize) -> Result<Preconditioner> {
    check_positive(tau, "tau")?;
    Ok(Preconditioner::ScaledIdentity {
        scale: 1.0 / tau,
        dim: n,
    })
}

/// Pock-Chambolle diagonal pair: column and row absolute sums of `A`.
pub fn pock_diagonal(a: &LinearOperator) -> Result<(Preconditioner, Preconditioner)> {
    let s = a.to_sparse();
    let fix = |mut d: Vec<f64>, what: &str| {
        let zeros = d.iter().filter(|v| **v == 0.0).count();
        if zeros > 0 {
            log::warn!("{zeros} zero {what} sums replaced by 1");
            d.iter_mut().filter(|v| **v == 0.0).for_each(|v| *v = 1.0);
        }
        d
    };
    Ok((
        Preconditioner::Diagonal(fix(s.abs_col_sums(), "column")),
        Preconditioner::Diagonal(fix(s.abs_row_sums(), "row")),
    ))
}

/// `τ A Aᵀ`, the optimal `M2` for `M1 = I/τ`.
pub fn gram_precond(a: &LinearOperator, tau: f64) -> Result<Preconditioner> {
    gram_precond_shifted(a, tau, 0.0)
}

/// `τ A Aᵀ + γ I`.
pub fn gram_precond_shifted(a: &LinearOperator, tau: f64, gamma: f64) -> Result<Preconditioner> {
    check_positive(tau, "tau")?;
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("shift must be >= 0, got {gamma}")));
    }
    Ok(Preconditioner::Gram {
        tau,
        op: a.clone(),
        shift: gamma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtVariant {
    /// `M1 = (2/τ) I`, `M2 = blockdiag(τ‖R‖² I, τ D Dᵀ)`.
    Norm,
    /// `M1 = diag(colsum |R|) + I/τ`, `M2 = blockdiag(diag(rowsum |R|), τ D Dᵀ)`.
    RowSum,
}

impl std::str::FromStr for CtVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "norm" => Ok(Self::Norm),
            "rowsum" => Ok(Self::RowSum),
            _ => Err(Error::InvalidParameter(format!("unknown CT variant '{s}'"))),
        }
    }
}

/// Block preconditioners for `A = (R; D)` with `D` the unit-step gradient.
pub fn ct_block_precond(
    r: &SparseMatrix,
    rows: usize,
    cols: usize,
    tau: f64,
    variant: CtVariant,
) -> Result<(Preconditioner, Preconditioner)> {
    check_positive(tau, "tau")?;
    let n = rows * cols;
    check_len(n, r.cols(), "CT matrix columns")?;
    let d = gram_precond(&LinearOperator::grad(rows, cols, 1.0)?, tau)?;
    match variant {
        CtVariant::Norm => {
            let rn = LinearOperator::Sparse(r.clone())
                .op_norm_sq_estimate(NORM_DEFAULT_ITERS, NORM_DEFAULT_TOL)?;
            Ok((
                Preconditioner::ScaledIdentity {
                    scale: 2.0 / tau,
                    dim: n,
                },
                Preconditioner::BlockDiag(vec![
                    Preconditioner::ScaledIdentity {
                        scale: tau * rn,
                        dim: r.rows(),
                    },
                    d,
                ]),
            ))
        }
        CtVariant::RowSum => {
            let rs = r.abs_row_sums();
            if let Some(i) = rs.iter().position(|v| *v == 0.0) {
                return Err(Error::DegenerateRow(i + 1));
            }
            let m1 = r.abs_col_sums().iter().map(|c| c + 1.0 / tau).collect();
            Ok((
                Preconditioner::Diagonal(m1),
                Preconditioner::BlockDiag(vec![Preconditioner::Diagonal(rs), d]),
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchurReport {
    pub valid: bool,
    pub min_eig: f64,
}

/// Smallest eigenvalue of `M2 − A M1⁻¹ Aᵀ` (dense, desk scale only).
pub fn validate_schur(
    m1: &Preconditioner,
    m2: &Preconditioner,
    a: &LinearOperator,
) -> Result<SchurReport> {
    let (m, n) = (a.nrows(), a.ncols());
    if m + n > DENSE_LIMIT {
        return Err(Error::TooLarge {
            size: m + n,
            limit: DENSE_LIMIT,
        });
    }
    check_len(n, m1.dim(), "M1 dimension")?;
    check_len(m, m2.dim(), "M2 dimension")?;
    let d1 = m1
        .diagonal()
        .ok_or_else(|| Error::UnsupportedMetric("M1 must be diagonal".into()))?;
    let ad = sparse_to_dense(&a.to_sparse());
    let mut scaled = ad.clone();
    for (j, d) in d1.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / d);
    }
    let s = m2.to_dense() - scaled * ad.transpose();
    let min_eig = if m == 0 {
        0.0
    } else {
        SymmetricEigen::new(s).eigenvalues.min()
    };
    Ok(SchurReport {
        valid: min_eig >= -1e-10,
        min_eig,
    })
}

pub(crate) fn sparse_to_dense(s: &SparseMatrix) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(s.rows(), s.cols());
    for (i, j, v) in s.triplets() {
        out[(i, j)] = v;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderingKind {
    /// Checkerboard on grid nodes; black (`i + j` even, 1-based) first.
    TwoBlock { rows: usize, cols: usize },
    /// Channel 1 by row parity, then channel 2 by column parity.
    FourBlock { rows: usize, cols: usize },
    /// One block per coordinate.
    Trivial(usize),
}

/// Partition of dual coordinates into color blocks, swept in stored order.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOrdering {
    kind: OrderingKind,
    blocks: Vec<Vec<usize>>,
}

impl BlockOrdering {
    pub fn two_block(rows: usize, cols: usize) -> Self {
        let mut black = Vec::new();
        let mut red = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                if (i + j) % 2 == 0 { &mut black } else { &mut red }.push(i * cols + j);
            }
        }
        Self {
            kind: OrderingKind::TwoBlock { rows, cols },
            blocks: vec![black, red],
        }
    }

    pub fn four_block(rows: usize, cols: usize) -> Self {
        let n = rows * cols;
        let mut b = vec![Vec::new(); 4];
        for i in 0..rows {
            for j in 0..cols {
                let k = i * cols + j;
                b[i % 2].push(k);
                b[2 + j % 2].push(n + k);
            }
        }
        b[2].sort_unstable();
        b[3].sort_unstable();
        Self {
            kind: OrderingKind::FourBlock { rows, cols },
            blocks: b,
        }
    }

    pub fn trivial(m: usize) -> Self {
        Self {
            kind: OrderingKind::Trivial(m),
            blocks: (0..m).map(|i| vec![i]).collect(),
        }
    }

    pub fn kind(&self) -> OrderingKind {
        self.kind
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            OrderingKind::TwoBlock { rows, cols } => rows * cols,
            OrderingKind::FourBlock { rows, cols } => 2 * rows * cols,
            OrderingKind::Trivial(m) => m,
        }
    }
}

/// The color ordering under which the operator's block Grams are diagonal.
pub fn ordering_for(a: &LinearOperator) -> Result<BlockOrdering> {
    match a {
        LinearOperator::Div { rows, cols, .. } => Ok(BlockOrdering::two_block(*rows, *cols)),
        LinearOperator::Grad { rows, cols, .. } | LinearOperator::WeightedGrad { rows, cols, .. } => {
            Ok(BlockOrdering::four_block(*rows, *cols))
        }
        LinearOperator::Sparse(_) => Err(Error::NoOrdering("sparse matrix".into())),
        LinearOperator::Stacked(_) => Err(Error::NoOrdering("stacked operator".into())),
    }
}

fn check_positive(v: f64, name: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_identity_apply() {
        let m = scaled_identity(0.01, 2).unwrap();
        assert_eq!(m.apply(&[1.0, 2.0]).unwrap(), vec![100.0, 200.0]);
        assert_eq!(m.apply_inverse(&[100.0, 1.0]).unwrap(), vec![1.0, 0.01]);
        assert!(scaled_identity(0.0, 2).is_err());
    }

    #[test]
    fn pock_sums() {
        let a = LinearOperator::Sparse(SparseMatrix::from_dense(&[vec![1.0, -2.0], vec![0.0, 3.0]]).unwrap());
        let (m1, m2) = pock_diagonal(&a).unwrap();
        assert_eq!(m1, Preconditioner::Diagonal(vec![1.0, 5.0]));
        assert_eq!(m2, Preconditioner::Diagonal(vec![3.0, 3.0]));
        let g = LinearOperator::grad(4, 4, 1.0).unwrap();
        let (m1, m2) = pock_diagonal(&g).unwrap();
        let (d1, d2) = (m1.diagonal().unwrap(), m2.diagonal().unwrap());
        assert_eq!(d1[5], 4.0);
        assert_eq!(d2[5], 2.0);
        // channel1 of the last row is structurally zero
        assert_eq!(d2[13], 1.0);
    }

    #[test]
    fn gram_scalar() {
        let a = LinearOperator::Sparse(SparseMatrix::from_dense(&[vec![2.0]]).unwrap());
        let g = gram_precond(&a, 0.5).unwrap();
        assert_eq!(g.apply(&[3.0]).unwrap(), vec![6.0]);
        assert!(g.apply_inverse(&[1.0]).is_err());
    }

    #[test]
    fn schur_examples() {
        let a = LinearOperator::Sparse(SparseMatrix::from_dense(&[vec![2.0]]).unwrap());
        let id = Preconditioner::Diagonal(vec![1.0]);
        let r = validate_schur(&id, &id, &a).unwrap();
        assert!(!r.valid);
        assert!((r.min_eig + 3.0).abs() < 1e-12);
        let big = LinearOperator::grad(40, 40, 1.0).unwrap();
        let m1 = scaled_identity(1.0, 1600).unwrap();
        let m2 = gram_precond(&big, 1.0).unwrap();
        assert!(matches!(validate_schur(&m1, &m2, &big), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn ct_variants() {
        let r = SparseMatrix::identity(4);
        let (m1, m2) = ct_block_precond(&r, 2, 2, 1.0, CtVariant::Norm).unwrap();
        assert_eq!(m1.diagonal().unwrap(), vec![2.0; 4]);
        match &m2 {
            Preconditioner::BlockDiag(p) => match p[0] {
                Preconditioner::ScaledIdentity { scale, .. } => assert!((scale - 1.01).abs() < 1e-9),
                _ => panic!("expected scaled identity"),
            },
            _ => panic!("expected block diagonal"),
        }
        let r = SparseMatrix::from_dense(&[vec![1.0, 2.0], vec![0.0, 3.0]]).unwrap();
        let (m1, m2) = ct_block_precond(&r, 1, 2, 0.5, CtVariant::RowSum).unwrap();
        assert_eq!(m1.diagonal().unwrap(), vec![3.0, 7.0]);
        match &m2 {
            Preconditioner::BlockDiag(p) => assert_eq!(p[0], Preconditioner::Diagonal(vec![3.0, 3.0])),
            _ => panic!("expected block diagonal"),
        }
        let z = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0)]).unwrap();
        assert!(matches!(ct_block_precond(&z, 1, 2, 1.0, CtVariant::RowSum), Err(Error::DegenerateRow(2))));
    }

    #[test]
    fn orderings() {
        let o = ordering_for(&LinearOperator::div(4, 4, 1.0).unwrap()).unwrap();
        assert_eq!(o.blocks()[0].len(), 8);
        assert_eq!(o.blocks()[1].len(), 8);
        let o = ordering_for(&LinearOperator::grad(3, 3, 1.0).unwrap()).unwrap();
        let sizes: Vec<_> = o.blocks().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![6, 3, 6, 3]);
        let s = LinearOperator::Sparse(SparseMatrix::identity(2));
        assert!(matches!(ordering_for(&s), Err(Error::NoOrdering(_))));
    }

    #[test]
    fn block_gram_checks() {
        let g = LinearOperator::grad(3, 3, 1.0).unwrap();
        let d = g.block_gram(&BlockOrdering::four_block(3, 3)).unwrap();
        // interior rows of channel 1 hold two unit entries
        assert_eq!(d[0][0], 2.0);
        let single = BlockOrdering {
            kind: OrderingKind::Trivial(18),
            blocks: vec![(0..18).collect()],
        };
        assert!(matches!(g.block_gram(&single), Err(Error::OrderingInvalid(_))));
        let dv = LinearOperator::div(3, 3, 1.0).unwrap();
        assert!(dv.block_gram(&BlockOrdering::two_block(3, 3)).is_ok());
    }
}
