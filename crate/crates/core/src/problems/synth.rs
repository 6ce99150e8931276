//! Deterministic synthetic inputs: images, marginals, noise and line-integral matrices.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::operators::{Grid2D, SparseMatrix};

/// Three color channels of an RGB image.
pub type Rgb = [Grid2D; 3];

/// Alternating `lo`/`hi` squares of side `cell`.
pub fn checkerboard(rows: usize, cols: usize, cell: usize, lo: f64, hi: f64) -> Grid2D {
    let cell = cell.max(1);
    Grid2D::from_fn(rows, cols, |i, j| if (i / cell + j / cell) % 2 == 0 { lo } else { hi })
}

/// Piecewise-constant ellipse phantom in `[0, 1]`.
pub fn phantom(rows: usize, cols: usize) -> Grid2D {
    // (center y, center x, semi-axis y, semi-axis x, added intensity) in unit coordinates
    const ELLIPSES: [(f64, f64, f64, f64, f64); 5] = [
        (0.0, 0.0, 0.85, 0.65, 0.6),
        (0.0, 0.0, 0.75, 0.55, -0.3),
        (-0.25, -0.2, 0.25, 0.15, 0.5),
        (0.3, 0.15, 0.2, 0.3, 0.4),
        (0.1, -0.3, 0.1, 0.1, 0.3),
    ];
    Grid2D::from_fn(rows, cols, |i, j| {
        let y = 2.0 * (i as f64 + 0.5) / rows as f64 - 1.0;
        let x = 2.0 * (j as f64 + 0.5) / cols as f64 - 1.0;
        let v: f64 = ELLIPSES
            .iter()
            .filter(|(cy, cx, ay, ax, _)| ((y - cy) / ay).powi(2) + ((x - cx) / ax).powi(2) <= 1.0)
            .map(|e| e.4)
            .sum();
        v.clamp(0.0, 1.0)
    })
}

/// Solid color image.
pub fn solid_rgb(rows: usize, cols: usize, color: [f64; 3]) -> Rgb {
    color.map(|c| Grid2D::from_fn(rows, cols, |_, _| c))
}

/// Left half pure blue, right half pure green.
pub fn half_blue_green(rows: usize, cols: usize) -> Rgb {
    let blue = |_: usize, j: usize| j < cols / 2;
    [
        Grid2D::zeros(rows, cols),
        Grid2D::from_fn(rows, cols, |i, j| if blue(i, j) { 0.0 } else { 1.0 }),
        Grid2D::from_fn(rows, cols, |i, j| if blue(i, j) { 1.0 } else { 0.0 }),
    ]
}

/// Blue disc-shaped blobs on a green background with bounded color noise.
pub fn blue_blobs(rows: usize, cols: usize, noise: f64, seed: u64) -> Rgb {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (r, c) = (rows as f64, cols as f64);
    let discs = [
        (0.35 * r, 0.3 * c, 0.22 * r.min(c)),
        (0.65 * r, 0.7 * c, 0.18 * r.min(c)),
        (0.3 * r, 0.75 * c, 0.1 * r.min(c)),
    ];
    let mut out = [Grid2D::zeros(rows, cols), Grid2D::zeros(rows, cols), Grid2D::zeros(rows, cols)];
    for i in 0..rows {
        for j in 0..cols {
            let inside = discs
                .iter()
                .any(|(ci, cj, rad)| (i as f64 - ci).powi(2) + (j as f64 - cj).powi(2) <= rad * rad);
            let base = if inside { [0.1, 0.2, 0.9] } else { [0.1, 0.8, 0.2] };
            for (ch, b) in out.iter_mut().zip(base) {
                ch.set(i, j, (b + rng.gen_range(-noise..=noise)).clamp(0.0, 1.0));
            }
        }
    }
    out
}

/// Normalized Gaussian bump centered at `(ci, cj)` (grid units) plus a small floor.
pub fn gaussian_marginal(rows: usize, cols: usize, ci: f64, cj: f64, width: f64) -> Grid2D {
    let g = Grid2D::from_fn(rows, cols, |i, j| {
        let d2 = (i as f64 - ci).powi(2) + (j as f64 - cj).powi(2);
        (-d2 / (2.0 * width * width)).exp() + 1e-3
    });
    let s = g.sum();
    Grid2D::new(rows, cols, g.values().iter().map(|v| v / s).collect()).expect("finite marginal")
}

/// Salt-and-pepper noise: exactly `round(level · MN)` pixels, chosen without
/// replacement, are set to 0 or 1 with equal probability.
pub fn add_impulse_noise(u: &Grid2D, level: f64, seed: u64) -> Result<Grid2D> {
    if !(0.0..=1.0).contains(&level) {
        return Err(Error::InvalidParameter(format!("noise level {level} outside [0, 1]")));
    }
    let n = u.len();
    let count = (level * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = u.values().to_vec();
    for k in sample(&mut rng, n, count) {
        v[k] = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
    }
    Grid2D::new(u.rows(), u.cols(), v)
}

/// Intersection lengths of the line `{p : ⟨p, (cos θ, sin θ)⟩ = s}` with the unit
/// pixels of a `rows × cols` grid centered at the origin (row 0 on top).
pub fn ray_intersections(rows: usize, cols: usize, theta: f64, s: f64) -> Vec<(usize, f64)> {
    let (c, sn) = (theta.cos(), theta.sin());
    let (hx, hy) = (cols as f64 / 2.0, rows as f64 / 2.0);
    // p(t) = s n + t d with n = (c, sn), d = (−sn, c)
    let (px, py, dx, dy) = (s * c, s * sn, -sn, c);
    let mut t_lo = f64::NEG_INFINITY;
    let mut t_hi = f64::INFINITY;
    for (p, d, h) in [(px, dx, hx), (py, dy, hy)] {
        if d.abs() < 1e-14 {
            if p <= -h || p >= h {
                return Vec::new();
            }
        } else {
            let (a, b) = ((-h - p) / d, (h - p) / d);
            t_lo = t_lo.max(a.min(b));
            t_hi = t_hi.min(a.max(b));
        }
    }
    if t_hi - t_lo <= 1e-12 {
        return Vec::new();
    }
    let mut ts = vec![t_lo, t_hi];
    for (p, d, h, n) in [(px, dx, hx, cols), (py, dy, hy, rows)] {
        if d.abs() >= 1e-14 {
            for k in 0..=n {
                let t = (k as f64 - h - p) / d;
                if t > t_lo && t < t_hi {
                    ts.push(t);
                }
            }
        }
    }
    ts.sort_by(|a, b| a.partial_cmp(b).expect("finite crossings"));
    let mut out: Vec<(usize, f64)> = Vec::new();
    for w in ts.windows(2) {
        let len = w[1] - w[0];
        if len <= 1e-12 {
            continue;
        }
        let tm = 0.5 * (w[0] + w[1]);
        let (x, y) = (px + tm * dx, py + tm * dy);
        let j = ((x + hx).floor() as isize).clamp(0, cols as isize - 1) as usize;
        let i = ((hy - y).floor() as isize).clamp(0, rows as isize - 1) as usize;
        let k = i * cols + j;
        match out.iter_mut().find(|(idx, _)| *idx == k) {
            Some(e) => e.1 += len,
            None => out.push((k, len)),
        }
    }
    out
}

/// Parallel-beam line-integral matrix: `n_angles` equispaced angles over `[0, π)`
/// rotated by a seeded offset, `n_detectors` rays per angle across the grid
/// diagonal. Rays missing the grid are dropped.
pub fn synth_line_integral_matrix(
    rows: usize,
    cols: usize,
    n_angles: usize,
    n_detectors: usize,
    seed: u64,
) -> Result<SparseMatrix> {
    if rows == 0 || cols == 0 || n_angles == 0 || n_detectors == 0 {
        return Err(Error::InvalidParameter("geometry parameters must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = std::f64::consts::PI / n_angles as f64;
    let offset = rng.gen_range(0.0..step);
    let width = ((rows * rows + cols * cols) as f64).sqrt();
    let spacing = width / n_detectors as f64;
    let mut trips = Vec::new();
    let mut r = 0;
    for a in 0..n_angles {
        let theta = offset + a as f64 * step;
        for d in 0..n_detectors {
            let s = (d as f64 + 0.5) * spacing - width / 2.0;
            let hits = ray_intersections(rows, cols, theta, s);
            if hits.is_empty() {
                continue;
            }
            trips.extend(hits.into_iter().map(|(k, len)| (r, k, len)));
            r += 1;
        }
    }
    SparseMatrix::from_triplets(r, rows * cols, trips)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_counts() {
        let u = Grid2D::from_fn(100, 100, |_, _| 0.5);
        assert_eq!(add_impulse_noise(&u, 0.0, 1).unwrap(), u);
        let all = add_impulse_noise(&u, 1.0, 1).unwrap();
        assert!(all.values().iter().all(|v| *v == 0.0 || *v == 1.0));
        let some = add_impulse_noise(&u, 0.15, 7).unwrap();
        assert_eq!(some.values().iter().filter(|v| **v != 0.5).count(), 1500);
        assert_eq!(some, add_impulse_noise(&u, 0.15, 7).unwrap());
    }

    #[test]
    fn ray_along_a_row() {
        let hits = ray_intersections(4, 5, std::f64::consts::FRAC_PI_2, 1.5);
        let total: f64 = hits.iter().map(|h| h.1).sum();
        assert!((total - 5.0).abs() < 1e-12);
        assert!(hits.iter().all(|(k, _)| *k < 5));
        assert!(ray_intersections(4, 5, 0.0, 10.0).is_empty());
    }

    #[test]
    fn line_integrals_have_no_empty_rows() {
        let r = synth_line_integral_matrix(8, 8, 6, 16, 3).unwrap();
        assert!(r.abs_row_sums().iter().all(|s| *s > 0.0));
        assert_eq!(r, synth_line_integral_matrix(8, 8, 6, 16, 3).unwrap());
    }
}
