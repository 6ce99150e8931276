use std::collections::BTreeMap;

use crate::error::{check_len, Error, Result};

/// Compressed-row sparse matrix with unique coordinates.
///
/// Products accumulate in ascending column order within a row and the adjoint
/// scatters rows in ascending order, so results are bitwise reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Zero-based triplets. Explicit zeros are kept; duplicates are rejected.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, v) in triplets {
            if i >= rows || j >= cols {
                return Err(Error::InvalidParameter(format!(
                    "entry ({}, {}) outside {rows}x{cols}",
                    i + 1,
                    j + 1
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite entry at ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
            if map.insert((i, j), v).is_some() {
                return Err(Error::InvalidParameter(format!(
                    "duplicate entry at ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
        }
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(map.len());
        let mut values = Vec::with_capacity(map.len());
        for (&(i, j), &v) in &map {
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self {
            rows: d.len(),
            cols: d.len(),
            row_ptr: (0..=d.len()).collect(),
            col_idx: (0..d.len()).collect(),
            values: d.to_vec(),
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let mut t = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            check_len(n, r.len(), "dense row")?;
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m, n, t)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Zero-based triplets in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    pub(crate) fn mul_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            let mut acc = 0.0;
            for (&j, &a) in c.iter().zip(v) {
                acc += a * x[j];
            }
            *o = acc;
        }
    }

    pub(crate) fn mul_transpose_into(&self, z: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (i, &zi) in z.iter().enumerate() {
            if zi == 0.0 {
                continue;
            }
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                out[j] += a * zi;
            }
        }
    }

    pub fn abs_row_sums(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum())
            .collect()
    }

    pub fn abs_col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for (&j, &v) in self.col_idx.iter().zip(&self.values) {
            s[j] += v.abs();
        }
        s
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.cols, self.rows, self.triplets().map(|(i, j, v)| (j, i, v)))
            .expect("transpose of a valid matrix is valid")
    }

    /// Stacks matrices with equal column counts vertically.
    pub fn vstack(blocks: &[SparseMatrix]) -> Result<Self> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        let mut t = Vec::new();
        let mut offset = 0;
        for b in blocks {
            check_len(cols, b.cols, "vstack column count")?;
            t.extend(b.triplets().map(|(i, j, v)| (i + offset, j, v)));
            offset += b.rows;
        }
        Self::from_triplets(offset, cols, t)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_rows_in_order() {
        let a = SparseMatrix::from_triplets(2, 3, vec![(1, 2, 5.0), (0, 1, 2.0), (1, 0, -1.0)]).unwrap();
        assert_eq!(a.row(0), (&[1usize][..], &[2.0][..]));
        assert_eq!(a.row(1), (&[0usize, 2][..], &[-1.0, 5.0][..]));
        let mut out = vec![0.0; 2];
        a.mul_into(&[1.0, 1.0, 1.0], &mut out);
        assert_eq!(out, vec![2.0, 4.0]);
        let mut back = vec![0.0; 3];
        a.mul_transpose_into(&[1.0, 2.0], &mut back);
        assert_eq!(back, vec![-2.0, 2.0, 10.0]);
    }

    #[test]
    fn rejects_duplicates_and_out_of_range() {
        assert!(SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 0, 2.0)]).is_err());
        assert!(SparseMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
        assert!(SparseMatrix::from_triplets(2, 2, vec![(0, 0, f64::INFINITY)]).is_err());
    }

    #[test]
    fn absolute_sums() {
        let a = SparseMatrix::from_dense(&[vec![1.0, -2.0], vec![0.0, 3.0]]).unwrap();
        assert_eq!(a.abs_col_sums(), vec![1.0, 5.0]);
        assert_eq!(a.abs_row_sums(), vec![3.0, 3.0]);
        assert_eq!(a.transpose().to_dense(), vec![vec![1.0, 0.0], vec![-2.0, 3.0]]);
    }
}
