//! Image grids, two-channel fields and the forward-difference stencils.
//!
//! Grids are stored row-major: pixel `(i, j)` (zero-based) lives at `i * cols + j`.
//! A [`Field2D`] keeps its two channels in separate buffers; when flattened into a
//! solver vector the layout is `[channel1; channel2]`.

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Grid2D {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid must be non-empty, got {rows}x{cols}"
            )));
        }
        check_len(rows * cols, values.len(), "grid values")?;
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite grid value at index {k}"
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        Self { rows, cols, values }
    }

    /// Builds a grid from nested rows; convenient in tests.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter("ragged grid rows".into()));
        }
        Self::new(m, n, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.cols + j] = v;
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    rows: usize,
    cols: usize,
    pub channel1: Vec<f64>,
    pub channel2: Vec<f64>,
}

impl Field2D {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            channel1: vec![0.0; rows * cols],
            channel2: vec![0.0; rows * cols],
        }
    }

    pub fn new(rows: usize, cols: usize, channel1: Vec<f64>, channel2: Vec<f64>) -> Result<Self> {
        check_len(rows * cols, channel1.len(), "field channel1")?;
        check_len(rows * cols, channel2.len(), "field channel2")?;
        Ok(Self {
            rows,
            cols,
            channel1,
            channel2,
        })
    }

    /// Splits a flattened `[channel1; channel2]` vector.
    pub fn from_flat(rows: usize, cols: usize, flat: &[f64]) -> Result<Self> {
        let n = rows * cols;
        check_len(2 * n, flat.len(), "flattened field")?;
        Ok(Self {
            rows,
            cols,
            channel1: flat[..n].to_vec(),
            channel2: flat[n..].to_vec(),
        })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.channel1.len());
        v.extend_from_slice(&self.channel1);
        v.extend_from_slice(&self.channel2);
        v
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

/// Forward differences with Neumann boundary: the last row of `out1` and the last
/// column of `out2` are zero.
pub(crate) fn grad_into(u: &[f64], rows: usize, cols: usize, h: f64, out1: &mut [f64], out2: &mut [f64]) {
    let inv_h = 1.0 / h;
    for i in 0..rows {
        let row = i * cols;
        for j in 0..cols {
            let k = row + j;
            out1[k] = if i + 1 < rows {
                (u[k + cols] - u[k]) * inv_h
            } else {
                0.0
            };
            out2[k] = if j + 1 < cols {
                (u[k + 1] - u[k]) * inv_h
            } else {
                0.0
            };
        }
    }
}

/// Discrete divergence, the exact negative adjoint of [`grad_into`].
pub(crate) fn div_into(p1: &[f64], p2: &[f64], rows: usize, cols: usize, h: f64, out: &mut [f64]) {
    let inv_h = 1.0 / h;
    for i in 0..rows {
        let row = i * cols;
        for j in 0..cols {
            let k = row + j;
            let mut acc = 0.0;
            if i + 1 < rows {
                acc += p1[k];
            }
            if i > 0 {
                acc -= p1[k - cols];
            }
            if j + 1 < cols {
                acc += p2[k];
            }
            if j > 0 {
                acc -= p2[k - 1];
            }
            out[k] = acc * inv_h;
        }
    }
}

fn check_h(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid step h must be > 0, got {h}")));
    }
    Ok(())
}

pub fn grad2d(u: &Grid2D, h: f64) -> Result<Field2D> {
    check_h(h)?;
    let mut f = Field2D::zeros(u.rows, u.cols);
    grad_into(&u.values, u.rows, u.cols, h, &mut f.channel1, &mut f.channel2);
    Ok(f)
}

pub fn div2d(p: &Field2D, h: f64) -> Result<Grid2D> {
    check_h(h)?;
    let mut g = Grid2D::zeros(p.rows, p.cols);
    div_into(&p.channel1, &p.channel2, p.rows, p.cols, h, &mut g.values);
    Ok(g)
}

/// `w ⊙ grad2d(u, h)` with `w` laid out as `[w1; w2]`.
pub fn weighted_grad(u: &Grid2D, w: &[f64], h: f64) -> Result<Field2D> {
    let n = u.len();
    check_len(2 * n, w.len(), "gradient weights")?;
    check_weights(w)?;
    let mut f = grad2d(u, h)?;
    for (v, wi) in f.channel1.iter_mut().zip(&w[..n]) {
        *v *= wi;
    }
    for (v, wi) in f.channel2.iter_mut().zip(&w[n..]) {
        *v *= wi;
    }
    Ok(f)
}

pub(crate) fn check_weights(w: &[f64]) -> Result<()> {
    if let Some(k) = w.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidWeights(format!(
            "weight {k} is {} (must be positive)",
            w[k]
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Grid2D {
        Grid2D::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0]]).unwrap()
    }

    #[test]
    fn grad_of_two_by_two() {
        let f = grad2d(&sample(), 1.0).unwrap();
        assert_eq!(f.channel1, vec![2.0, 2.0, 0.0, 0.0]);
        assert_eq!(f.channel2, vec![1.0, 0.0, 1.0, 0.0]);

        let f = grad2d(&sample(), 2.0).unwrap();
        assert_eq!(f.channel1, vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(f.channel2, vec![0.5, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn grad_of_constant_vanishes() {
        let u = Grid2D::from_fn(5, 3, |_, _| 7.25);
        let f = grad2d(&u, 0.3).unwrap();
        assert!(f.channel1.iter().chain(&f.channel2).all(|&v| v == 0.0));
    }

    #[test]
    fn div_is_negative_adjoint_on_unit_impulse() {
        let p = Field2D::new(2, 2, vec![1.0, 0.0, 0.0, 0.0], vec![0.0; 4]).unwrap();
        let d = div2d(&p, 1.0).unwrap();
        assert_eq!(d.values(), &[1.0, 0.0, -1.0, 0.0]);
        let z = div2d(&Field2D::zeros(3, 4), 2.0).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn weighted_grad_scales() {
        let w = vec![2.0; 8];
        let f = weighted_grad(&sample(), &w, 1.0).unwrap();
        assert_eq!(f.channel1, vec![4.0, 4.0, 0.0, 0.0]);
        assert_eq!(f.channel2, vec![2.0, 0.0, 2.0, 0.0]);
        let ones = vec![1.0; 8];
        assert_eq!(
            weighted_grad(&sample(), &ones, 1.0).unwrap(),
            grad2d(&sample(), 1.0).unwrap()
        );
    }

    #[test]
    fn rejects_bad_weights_and_steps() {
        let mut w = vec![1.0; 8];
        w[3] = 0.0;
        assert!(matches!(
            weighted_grad(&sample(), &w, 1.0),
            Err(Error::InvalidWeights(_))
        ));
        assert!(grad2d(&sample(), 0.0).is_err());
        assert!(Grid2D::new(2, 2, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }
}
