//! Relative-error constants `c(p)` for the two inner iterators with known bounds.

use crate::error::{Error, Result};

fn check_spectrum(lmin: f64, lmax: f64) -> Result<()> {
    if !(lmin > 0.0) {
        return Err(Error::DiagnosticUnavailable(format!(
            "λ_min(M2) = {lmin} is not positive; the bound needs a strongly convex subproblem"
        )));
    }
    if !(lmax >= lmin && lmax.is_finite()) {
        return Err(Error::InvalidParameter(format!("λ_max = {lmax} below λ_min = {lmin}")));
    }
    Ok(())
}

/// Contraction factor of one proximal-gradient step on the subproblem.
pub fn proxgrad_rate(gamma: f64, lmin: f64, lmax: f64) -> f64 {
    (1.0 - gamma * (2.0 * lmin - gamma * lmax * lmax)).max(0.0).sqrt()
}

/// `c(p)` after `p` proximal-gradient steps with stepsize `gamma`.
pub fn c_proxgrad(gamma: f64, lmin: f64, lmax: f64, p: usize) -> Result<f64> {
    check_spectrum(lmin, lmax)?;
    if p == 0 {
        return Err(Error::InvalidParameter("p must be >= 1".into()));
    }
    let hi = 2.0 * lmin / (lmax * lmax);
    if !(gamma > 0.0 && gamma < hi) {
        return Err(Error::InfeasibleStepsize(format!(
            "gamma = {gamma} outside (0, {hi})"
        )));
    }
    let t = proxgrad_rate(gamma, lmin, lmax);
    let tp = t.powi(p as i32);
    Ok((1.0 / gamma + lmax) / (1.0 - tp) * (tp + t.powi(p as i32 - 1)))
}

/// The four upper bounds on `gamma` required by the cyclic proximal BCD bound.
pub fn bcd_gamma_bounds(gamma: f64, lmin: f64, lmax: f64, l: usize) -> [f64; 4] {
    let l = l as f64;
    let gap = 1.0 - proxgrad_rate(gamma, lmin, lmax);
    [
        2.0 * lmin / (lmax * lmax),
        gap / (4.0 * 2f64.sqrt() * gamma * l * lmax),
        1.0 / (4.0 * l * lmax),
        2.0 * l * lmax / (17.0 * l * lmax + 2.0 * (gap / gamma).powi(2)),
    ]
}

pub fn bcd_gamma_feasible(gamma: f64, lmin: f64, lmax: f64, l: usize) -> bool {
    gamma > 0.0 && bcd_gamma_bounds(gamma, lmin, lmax, l).iter().all(|b| gamma <= *b)
}

/// Contraction factor `ρ` of one BCD epoch.
pub fn bcd_rate(gamma: f64, lmin: f64, lmax: f64) -> f64 {
    let gap = 1.0 - proxgrad_rate(gamma, lmin, lmax);
    1.0 - gap * gap / (2.0 * gamma)
}

/// `c(p)` after `p` epochs of cyclic proximal BCD over `l` blocks.
pub fn c_bcd(gamma: f64, lmin: f64, lmax: f64, l: usize, p: usize) -> Result<f64> {
    check_spectrum(lmin, lmax)?;
    if p == 0 || l == 0 {
        return Err(Error::InvalidParameter("p and l must be >= 1".into()));
    }
    if !bcd_gamma_feasible(gamma, lmin, lmax, l) {
        return Err(Error::InfeasibleStepsize(format!(
            "gamma = {gamma} violates bounds {:?}",
            bcd_gamma_bounds(gamma, lmin, lmax, l)
        )));
    }
    let rho = bcd_rate(gamma, lmin, lmax);
    let rp = rho.powi(p as i32);
    Ok((l as f64 * lmax + 1.0 / gamma) * (rp + rho.powi(p as i32 - 1)) / (1.0 - rp))
}

/// Largest `gamma` meeting the BCD bounds: a 64-point log grid on
/// `(0, 2λ_min/λ_max²]` followed by bisection above the best grid point.
pub fn bcd_largest_feasible_gamma(lmin: f64, lmax: f64, l: usize) -> Result<f64> {
    check_spectrum(lmin, lmax)?;
    let hi = 2.0 * lmin / (lmax * lmax);
    let lo = hi * 1e-12;
    let grid: Vec<f64> = (0..64)
        .map(|k| lo * (hi / lo).powf(k as f64 / 63.0))
        .collect();
    let best = grid
        .iter()
        .rposition(|g| bcd_gamma_feasible(*g, lmin, lmax, l))
        .ok_or_else(|| {
            Error::InfeasibleStepsize(format!(
                "no feasible gamma in (0, {hi}]; bounds at the smallest grid point {:?}",
                bcd_gamma_bounds(lo, lmin, lmax, l)
            ))
        })?;
    if best == grid.len() - 1 {
        return Ok(grid[best]);
    }
    let (mut a, mut b) = (grid[best], grid[best + 1]);
    for _ in 0..100 {
        let mid = 0.5 * (a + b);
        if bcd_gamma_feasible(mid, lmin, lmax, l) {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proxgrad_examples() {
        assert!((c_proxgrad(1.0, 1.0, 1.0, 1).unwrap() - 2.0).abs() < 1e-15);
        assert!((c_proxgrad(0.5, 1.0, 1.0, 1).unwrap() - 9.0).abs() < 1e-12);
        assert!((c_proxgrad(0.5, 1.0, 1.0, 2).unwrap() - 3.0).abs() < 1e-12);
        assert!(c_proxgrad(2.5, 1.0, 1.0, 1).is_err());
        assert!(matches!(c_proxgrad(0.5, 0.0, 1.0, 1), Err(Error::DiagnosticUnavailable(_))));
    }

    #[test]
    fn bcd_examples() {
        assert!((c_bcd(0.1, 1.0, 1.0, 1, 1).unwrap() - 429.0).abs() < 1e-9);
        let c10 = c_bcd(0.1, 1.0, 1.0, 1, 10).unwrap();
        let expect = 11.0 * (0.95f64.powi(10) + 0.95f64.powi(9)) / (1.0 - 0.95f64.powi(10));
        assert!((c10 - expect).abs() < 1e-9, "{c10}");
        assert!((c10 - 33.69).abs() < 0.005);
        let g = bcd_largest_feasible_gamma(1.0, 1.0, 1).unwrap();
        assert!(bcd_gamma_feasible(g, 1.0, 1.0, 1));
        assert!(!bcd_gamma_feasible(g * (1.0 + 1e-9), 1.0, 1.0, 1));
    }
}
