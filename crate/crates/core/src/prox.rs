//! Proximal operators under diagonal metrics.
//!
//! `prox^M_φ(v) = argmin_y φ(y) + ½‖y − v‖²_M` for a positive diagonal `M`. Conjugate
//! proxes go through the generalized Moreau identity
//! `x = prox^M_φ(x) + M⁻¹ prox^{M⁻¹}_{φ*}(M x)`; the only hand-written conjugate
//! proxes are the scalar fast paths in [`scalar_conj_prox`] used by block updates.

use crate::error::{check_len, Error, Result};

/// Relative slack when testing membership in a constraint set.
pub const FEAS_TOL: f64 = 1e-9;

/// Positive diagonal of a metric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalMetric(Vec<f64>);

impl DiagonalMetric {
    pub fn new(d: Vec<f64>) -> Result<Self> {
        if let Some(k) = d.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "metric entry {k} is {} (must be positive)",
                d[k]
            )));
        }
        Ok(Self(d))
    }

    pub fn identity(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn scaled_identity(n: usize, s: f64) -> Result<Self> {
        Self::new(vec![s; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.iter().map(|v| 1.0 / v).collect())
    }
}

/// Borrowed metric: either a constant or a per-coordinate diagonal.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Metric<'a> {
    Scalar(f64),
    Diag(&'a [f64]),
}

impl Metric<'_> {
    #[inline]
    fn at(&self, i: usize) -> f64 {
        match self {
            Metric::Scalar(s) => *s,
            Metric::Diag(d) => d[i],
        }
    }

    fn offset(&self, start: usize, len: usize) -> Self {
        match *self {
            Metric::Scalar(s) => Metric::Scalar(s),
            Metric::Diag(d) => Metric::Diag(&d[start..start + len]),
        }
    }
}

/// Closed proper convex functions with closed-form diagonal-metric proxes.
#[derive(Debug, Clone, PartialEq)]
pub enum ProxFunction {
    Zero { dim: usize },
    /// `weight · ‖x − shift‖₁`.
    L1 { weight: f64, shift: Vec<f64> },
    /// `weight · Σ_k ‖(x_k, x_{k+pixels})‖₂`: the mixed norm of a two-channel field.
    GroupL12 { weight: f64, pixels: usize },
    /// Indicator of `[lo, hi]^dim`.
    BoxIndicator { lo: f64, hi: f64, dim: usize },
    /// `⟨linear, x⟩` plus the indicator of `[lo, hi]^dim`.
    LinearPlusBox { linear: Vec<f64>, lo: f64, hi: f64 },
    /// Indicator of `{target}`.
    PointIndicator { target: Vec<f64> },
    /// `weight/2 · ‖x − center‖²`.
    Quadratic { weight: f64, center: Vec<f64> },
    /// Sum of functions acting on consecutive coordinate ranges.
    SumSeparable(Vec<ProxFunction>),
}

/// Closed-form scalar conjugates used inside block-coordinate sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarConj {
    /// `linear · z` plus the indicator of `[lo, hi]` (conjugate of a shifted `|·|`).
    Clamp { lo: f64, hi: f64, linear: f64 },
    /// `c · z` (conjugate of a point indicator).
    Linear { c: f64 },
    /// `z²/(2 weight) + center · z` (conjugate of a quadratic).
    Quadratic { weight: f64, center: f64 },
}

/// `argmin_z g*(z) + (z − v)²/(2t)` for a scalar conjugate kind.
#[inline]
pub fn scalar_conj_prox(kind: &ScalarConj, v: f64, t: f64) -> f64 {
    debug_assert!(t > 0.0);
    match *kind {
        ScalarConj::Clamp { lo, hi, linear } => (v - t * linear).clamp(lo, hi),
        ScalarConj::Linear { c } => v - t * c,
        ScalarConj::Quadratic { weight, center } => (v - t * center) / (1.0 + t / weight),
    }
}

#[inline]
fn soft(a: f64, t: f64) -> f64 {
    if a > t {
        a - t
    } else if a < -t {
        a + t
    } else {
        0.0
    }
}

impl ProxFunction {
    pub fn zero(dim: usize) -> Self {
        Self::Zero { dim }
    }

    pub fn l1(weight: f64, dim: usize) -> Self {
        Self::L1 {
            weight,
            shift: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Zero { dim } | Self::BoxIndicator { dim, .. } => *dim,
            Self::L1 { shift, .. } => shift.len(),
            Self::GroupL12 { pixels, .. } => 2 * pixels,
            Self::LinearPlusBox { linear, .. } => linear.len(),
            Self::PointIndicator { target } => target.len(),
            Self::Quadratic { center, .. } => center.len(),
            Self::SumSeparable(parts) => parts.iter().map(Self::dim).sum(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Zero { .. } => "zero",
            Self::L1 { .. } => "l1",
            Self::GroupL12 { .. } => "group-l12",
            Self::BoxIndicator { .. } => "box",
            Self::LinearPlusBox { .. } => "linear-plus-box",
            Self::PointIndicator { .. } => "point",
            Self::Quadratic { .. } => "quadratic",
            Self::SumSeparable(_) => "sum",
        }
    }

    /// Partition of the coordinates into the groups the function couples.
    pub fn separability(&self) -> Vec<Vec<usize>> {
        let mut groups = Vec::new();
        self.collect_groups(0, &mut groups);
        groups
    }

    fn collect_groups(&self, offset: usize, out: &mut Vec<Vec<usize>>) {
        match self {
            Self::GroupL12 { pixels, .. } => {
                out.extend((0..*pixels).map(|k| vec![offset + k, offset + pixels + k]))
            }
            Self::SumSeparable(parts) => {
                let mut o = offset;
                for p in parts {
                    p.collect_groups(o, out);
                    o += p.dim();
                }
            }
            _ => out.extend((0..self.dim()).map(|k| vec![offset + k])),
        }
    }

    /// Value, `+∞` outside the domain.
    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        let inf = f64::INFINITY;
        match self {
            Self::Zero { .. } => 0.0,
            Self::L1 { weight, shift } => {
                weight * x.iter().zip(shift).map(|(a, b)| (a - b).abs()).sum::<f64>()
            }
            Self::GroupL12 { weight, pixels } => {
                let (a, b) = x.split_at(*pixels);
                weight * a.iter().zip(b).map(|(p, q)| p.hypot(*q)).sum::<f64>()
            }
            Self::BoxIndicator { lo, hi, .. } => {
                if x.iter().all(|v| in_box(*v, *lo, *hi)) {
                    0.0
                } else {
                    inf
                }
            }
            Self::LinearPlusBox { linear, lo, hi } => {
                if x.iter().all(|v| in_box(*v, *lo, *hi)) {
                    x.iter().zip(linear).map(|(a, c)| a * c).sum()
                } else {
                    inf
                }
            }
            Self::PointIndicator { target } => {
                let scale = 1.0 + target.iter().fold(0.0f64, |m, t| m.max(t.abs()));
                if x.iter().zip(target).all(|(a, t)| (a - t).abs() <= FEAS_TOL * scale) {
                    0.0
                } else {
                    inf
                }
            }
            Self::Quadratic { weight, center } => {
                0.5 * weight * x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>()
            }
            Self::SumSeparable(parts) => {
                let mut o = 0;
                let mut acc = 0.0;
                for p in parts {
                    let d = p.dim();
                    acc += p.value(&x[o..o + d]);
                    o += d;
                }
                acc
            }
        }
    }

    /// Value with indicator terms dropped, and the squared distance to the domain.
    pub fn value_split(&self, x: &[f64]) -> (f64, f64) {
        let dist2 = |lo: f64, hi: f64| -> f64 {
            x.iter().map(|v| (v - v.clamp(lo, hi)).powi(2)).sum()
        };
        match self {
            Self::BoxIndicator { lo, hi, .. } => (0.0, dist2(*lo, *hi)),
            Self::LinearPlusBox { linear, lo, hi } => {
                (x.iter().zip(linear).map(|(a, c)| a * c).sum(), dist2(*lo, *hi))
            }
            Self::PointIndicator { target } => {
                (0.0, x.iter().zip(target).map(|(a, t)| (a - t) * (a - t)).sum())
            }
            Self::SumSeparable(parts) => {
                let mut o = 0;
                let (mut v, mut d) = (0.0, 0.0);
                for p in parts {
                    let n = p.dim();
                    let (pv, pd) = p.value_split(&x[o..o + n]);
                    v += pv;
                    d += pd;
                    o += n;
                }
                (v, d)
            }
            _ => (self.value(x), 0.0),
        }
    }

    /// Extended proximal operator with a positive diagonal metric.
    pub fn prox_diag(&self, v: &[f64], m: &DiagonalMetric) -> Result<Vec<f64>> {
        check_len(self.dim(), v.len(), "prox input")?;
        check_len(self.dim(), m.len(), "prox metric")?;
        let mut out = vec![0.0; v.len()];
        self.prox_into(v, Metric::Diag(m.as_slice()), &mut out)?;
        Ok(out)
    }

    pub(crate) fn prox_into(&self, v: &[f64], m: Metric<'_>, out: &mut [f64]) -> Result<()> {
        match self {
            Self::Zero { .. } => out.copy_from_slice(v),
            Self::L1 { weight, shift } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = shift[i] + soft(v[i] - shift[i], weight / m.at(i));
                }
            }
            Self::GroupL12 { weight, pixels } => {
                let n = *pixels;
                for k in 0..n {
                    let (d1, d2) = (m.at(k), m.at(n + k));
                    if (d1 - d2).abs() > 1e-12 * d1.max(d2) {
                        return Err(Error::UnsupportedMetric(format!(
                            "group {k} has metric entries {d1} and {d2}"
                        )));
                    }
                    let nrm = v[k].hypot(v[n + k]);
                    let factor = if nrm > 0.0 {
                        (1.0 - weight / (d1 * nrm)).max(0.0)
                    } else {
                        0.0
                    };
                    out[k] = factor * v[k];
                    out[n + k] = factor * v[n + k];
                }
            }
            Self::BoxIndicator { lo, hi, .. } => {
                for (o, x) in out.iter_mut().zip(v) {
                    *o = x.clamp(*lo, *hi);
                }
            }
            Self::LinearPlusBox { linear, lo, hi } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (v[i] - linear[i] / m.at(i)).clamp(*lo, *hi);
                }
            }
            Self::PointIndicator { target } => out.copy_from_slice(target),
            Self::Quadratic { weight, center } => {
                for (i, o) in out.iter_mut().enumerate() {
                    let d = m.at(i);
                    *o = (weight * center[i] + d * v[i]) / (weight + d);
                }
            }
            Self::SumSeparable(parts) => {
                let mut o = 0;
                for p in parts {
                    let d = p.dim();
                    p.prox_into(&v[o..o + d], m.offset(o, d), &mut out[o..o + d])?;
                    o += d;
                }
            }
        }
        Ok(())
    }

    /// `argmin_z φ*(z) + ½‖z − v‖²_D` via Moreau: `v − D⁻¹ prox^{D⁻¹}_φ(D v)`.
    pub(crate) fn conj_prox_into(&self, v: &[f64], d: Metric<'_>, out: &mut [f64]) -> Result<()> {
        let n = v.len();
        let scaled: Vec<f64> = (0..n).map(|i| d.at(i) * v[i]).collect();
        let inv = match d {
            Metric::Scalar(s) => InvMetric::Scalar(1.0 / s),
            Metric::Diag(dd) => InvMetric::Diag(dd.iter().map(|x| 1.0 / x).collect()),
        };
        self.prox_into(&scaled, inv.as_metric(), out)?;
        for i in 0..n {
            out[i] = (scaled[i] - out[i]) / d.at(i);
        }
        Ok(())
    }

    /// Conjugate value `φ*(z)`, `+∞` outside its domain.
    pub fn conj_value(&self, z: &[f64]) -> Result<f64> {
        check_len(self.dim(), z.len(), "conjugate input")?;
        let inf = f64::INFINITY;
        Ok(match self {
            Self::Zero { .. } => {
                if z.iter().all(|v| v.abs() <= FEAS_TOL) {
                    0.0
                } else {
                    inf
                }
            }
            Self::L1 { weight, shift } => {
                if z.iter().all(|v| in_box(*v, -weight, *weight)) {
                    z.iter().zip(shift).map(|(a, b)| a * b).sum()
                } else {
                    inf
                }
            }
            Self::GroupL12 { weight, pixels } => {
                let (a, b) = z.split_at(*pixels);
                if a.iter().zip(b).all(|(p, q)| p.hypot(*q) <= weight * (1.0 + FEAS_TOL)) {
                    0.0
                } else {
                    inf
                }
            }
            Self::BoxIndicator { lo, hi, .. } => z.iter().map(|v| support(*v, *lo, *hi)).sum(),
            Self::LinearPlusBox { linear, lo, hi } => z
                .iter()
                .zip(linear)
                .map(|(v, c)| support(v - c, *lo, *hi))
                .sum(),
            Self::PointIndicator { target } => z.iter().zip(target).map(|(a, t)| a * t).sum(),
            Self::Quadratic { weight, center } => z
                .iter()
                .zip(center)
                .map(|(a, c)| a * a / (2.0 * weight) + a * c)
                .sum(),
            Self::SumSeparable(parts) => {
                let mut o = 0;
                let mut acc = 0.0;
                for p in parts {
                    let d = p.dim();
                    acc += p.conj_value(&z[o..o + d])?;
                    o += d;
                }
                acc
            }
        })
    }

    /// The element of `∂φ*(z)` closest to `r`. `z` must lie in `dom φ*`.
    pub fn conj_subgradient_projection(&self, z: &[f64], r: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), z.len(), "subgradient point")?;
        check_len(self.dim(), r.len(), "subgradient target")?;
        let mut out = vec![0.0; z.len()];
        self.conj_subgrad_into(z, r, &mut out);
        Ok(out)
    }

    fn conj_subgrad_into(&self, z: &[f64], r: &[f64], out: &mut [f64]) {
        match self {
            // ∂ι_{0}(0) is the whole space.
            Self::Zero { .. } => out.copy_from_slice(r),
            Self::L1 { weight, shift } => {
                for i in 0..z.len() {
                    out[i] = shift[i] + normal_cone_box(z[i], -weight, *weight, r[i] - shift[i]);
                }
            }
            Self::GroupL12 { weight, pixels } => {
                let n = *pixels;
                for k in 0..n {
                    let nrm = z[k].hypot(z[n + k]);
                    if nrm < weight * (1.0 - FEAS_TOL) {
                        out[k] = 0.0;
                        out[n + k] = 0.0;
                    } else {
                        let s = ((r[k] * z[k] + r[n + k] * z[n + k]) / (nrm * nrm)).max(0.0);
                        out[k] = s * z[k];
                        out[n + k] = s * z[n + k];
                    }
                }
            }
            Self::BoxIndicator { lo, hi, .. } => {
                for i in 0..z.len() {
                    out[i] = support_subgrad(z[i], *lo, *hi, r[i]);
                }
            }
            Self::LinearPlusBox { linear, lo, hi } => {
                for i in 0..z.len() {
                    out[i] = support_subgrad(z[i] - linear[i], *lo, *hi, r[i]);
                }
            }
            Self::PointIndicator { target } => out.copy_from_slice(target),
            Self::Quadratic { weight, center } => {
                for i in 0..z.len() {
                    out[i] = z[i] / weight + center[i];
                }
            }
            Self::SumSeparable(parts) => {
                let mut o = 0;
                for p in parts {
                    let d = p.dim();
                    p.conj_subgrad_into(&z[o..o + d], &r[o..o + d], &mut out[o..o + d]);
                    o += d;
                }
            }
        }
    }

    /// Scalar conjugate of coordinate `i`, for kinds whose conjugate prox is a
    /// closed-form scalar map.
    pub fn scalar_conjugate(&self, i: usize) -> Result<ScalarConj> {
        match self {
            Self::Zero { .. } => Ok(ScalarConj::Clamp {
                lo: 0.0,
                hi: 0.0,
                linear: 0.0,
            }),
            Self::L1 { weight, shift } => Ok(ScalarConj::Clamp {
                lo: -weight,
                hi: *weight,
                linear: shift[i],
            }),
            Self::PointIndicator { target } => Ok(ScalarConj::Linear { c: target[i] }),
            Self::Quadratic { weight, center } => Ok(ScalarConj::Quadratic {
                weight: *weight,
                center: center[i],
            }),
            Self::SumSeparable(parts) => {
                let mut o = 0;
                for p in parts {
                    let d = p.dim();
                    if i < o + d {
                        return p.scalar_conjugate(i - o);
                    }
                    o += d;
                }
                Err(Error::InvalidParameter(format!("coordinate {i} out of range")))
            }
            other => Err(Error::UnsupportedKind(format!(
                "{} has no scalar conjugate prox; use a proximal-gradient or FISTA inner solver",
                other.kind_name()
            ))),
        }
    }

    /// Restriction to coordinates `start..start + len`.
    pub fn slice(&self, start: usize, len: usize) -> Result<ProxFunction> {
        if start + len > self.dim() {
            return Err(Error::InvalidParameter(format!(
                "slice {start}..{} exceeds dimension {}",
                start + len,
                self.dim()
            )));
        }
        if start == 0 && len == self.dim() {
            return Ok(self.clone());
        }
        let r = start..start + len;
        Ok(match self {
            Self::Zero { .. } => Self::Zero { dim: len },
            Self::L1 { weight, shift } => Self::L1 {
                weight: *weight,
                shift: shift[r].to_vec(),
            },
            Self::GroupL12 { .. } => {
                return Err(Error::UnsupportedKind(
                    "group norm cannot be split across coordinate ranges".into(),
                ))
            }
            Self::BoxIndicator { lo, hi, .. } => Self::BoxIndicator {
                lo: *lo,
                hi: *hi,
                dim: len,
            },
            Self::LinearPlusBox { linear, lo, hi } => Self::LinearPlusBox {
                linear: linear[r].to_vec(),
                lo: *lo,
                hi: *hi,
            },
            Self::PointIndicator { target } => Self::PointIndicator {
                target: target[r].to_vec(),
            },
            Self::Quadratic { weight, center } => Self::Quadratic {
                weight: *weight,
                center: center[r].to_vec(),
            },
            Self::SumSeparable(parts) => {
                let mut o = 0;
                let mut kept = Vec::new();
                for p in parts {
                    let d = p.dim();
                    let lo = start.max(o);
                    let hi = (start + len).min(o + d);
                    if lo < hi {
                        kept.push(p.slice(lo - o, hi - lo)?);
                    }
                    o += d;
                }
                if kept.len() == 1 {
                    kept.pop().expect("one part")
                } else {
                    Self::SumSeparable(kept)
                }
            }
        })
    }
}

enum InvMetric {
    Scalar(f64),
    Diag(Vec<f64>),
}

impl InvMetric {
    fn as_metric(&self) -> Metric<'_> {
        match self {
            InvMetric::Scalar(s) => Metric::Scalar(*s),
            InvMetric::Diag(d) => Metric::Diag(d),
        }
    }
}

fn in_box(v: f64, lo: f64, hi: f64) -> bool {
    let slack = FEAS_TOL * (1.0 + lo.abs().max(hi.abs()));
    v >= lo - slack && v <= hi + slack
}

fn support(z: f64, lo: f64, hi: f64) -> f64 {
    (lo * z).max(hi * z)
}

/// Closest point to `r` in `∂σ_{[lo,hi]}(z)`; `|z| ≤ FEAS_TOL` counts as the kink.
fn support_subgrad(z: f64, lo: f64, hi: f64, r: f64) -> f64 {
    if z.abs() <= FEAS_TOL {
        r.clamp(lo, hi)
    } else if z > 0.0 {
        hi
    } else {
        lo
    }
}

/// Closest point to `r` in the normal cone of `[lo, hi]` at `z`.
fn normal_cone_box(z: f64, lo: f64, hi: f64, r: f64) -> f64 {
    let slack = FEAS_TOL * (1.0 + lo.abs().max(hi.abs()));
    let at_hi = z >= hi - slack;
    let at_lo = z <= lo + slack;
    match (at_lo, at_hi) {
        (true, true) => r,
        (false, true) => r.max(0.0),
        (true, false) => r.min(0.0),
        (false, false) => 0.0,
    }
}

/// `prox^{M⁻¹}_{φ*}(w)` through the generalized Moreau identity.
pub fn conj_prox_via_moreau(phi: &ProxFunction, w: &[f64], m: &DiagonalMetric) -> Result<Vec<f64>> {
    check_len(phi.dim(), w.len(), "conjugate prox input")?;
    check_len(phi.dim(), m.len(), "conjugate prox metric")?;
    let d = m.as_slice();
    let inner: Vec<f64> = w.iter().zip(d).map(|(a, b)| a / b).collect();
    let p = phi.prox_diag(&inner, m)?;
    Ok(inner
        .iter()
        .zip(&p)
        .zip(d)
        .map(|((x, px), di)| di * (x - px))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l1_soft_threshold() {
        let f = ProxFunction::l1(1.0, 3);
        let p = f.prox_diag(&[3.0, 0.5, -3.0], &DiagonalMetric::identity(3)).unwrap();
        assert_eq!(p, vec![2.0, 0.0, -2.0]);
        // kink tie-break: |v| exactly at the threshold maps to the shift
        let p = f.prox_diag(&[1.0, -1.0, 0.0], &DiagonalMetric::identity(3)).unwrap();
        assert_eq!(p, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn box_clamp_is_metric_free() {
        let f = ProxFunction::BoxIndicator {
            lo: 0.0,
            hi: 1.0,
            dim: 3,
        };
        let m = DiagonalMetric::new(vec![0.3, 7.0, 2.0]).unwrap();
        assert_eq!(f.prox_diag(&[-0.2, 0.5, 1.7], &m).unwrap(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn group_shrinkage() {
        let f = ProxFunction::GroupL12 {
            weight: 1.0,
            pixels: 1,
        };
        let p = f.prox_diag(&[3.0, 4.0], &DiagonalMetric::identity(2)).unwrap();
        assert!((p[0] - 2.4).abs() < 1e-15 && (p[1] - 3.2).abs() < 1e-15);
        let p = f.prox_diag(&[0.0, 0.0], &DiagonalMetric::identity(2)).unwrap();
        assert_eq!(p, vec![0.0, 0.0]);
        let bad = DiagonalMetric::new(vec![1.0, 2.0]).unwrap();
        assert!(matches!(f.prox_diag(&[3.0, 4.0], &bad), Err(Error::UnsupportedMetric(_))));
    }

    #[test]
    fn moreau_examples() {
        let f = ProxFunction::l1(1.0, 1);
        let id = DiagonalMetric::identity(1);
        let c = conj_prox_via_moreau(&f, &[3.0], &id).unwrap();
        assert_eq!(c, vec![1.0]);
        assert_eq!(f.prox_diag(&[3.0], &id).unwrap()[0] + c[0], 3.0);
        let z = ProxFunction::zero(2);
        assert_eq!(conj_prox_via_moreau(&z, &[5.0, -2.0], &DiagonalMetric::identity(2)).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn scalar_fast_paths() {
        let l1 = ProxFunction::l1(1.0, 1).scalar_conjugate(0).unwrap();
        assert_eq!(scalar_conj_prox(&l1, 5.0, 0.3), 1.0);
        let lin = ScalarConj::Linear { c: 2.0 };
        assert_eq!(scalar_conj_prox(&lin, 1.0, 0.5), 0.0);
        let q = ProxFunction::Quadratic {
            weight: 1.0,
            center: vec![1.0],
        }
        .scalar_conjugate(0)
        .unwrap();
        assert_eq!(scalar_conj_prox(&q, 2.0, 1.0), 0.5);
        let gl = ProxFunction::GroupL12 {
            weight: 1.0,
            pixels: 2,
        };
        assert!(matches!(gl.scalar_conjugate(0), Err(Error::UnsupportedKind(_))));
    }

    #[test]
    fn slicing_sum_separable() {
        let g = ProxFunction::SumSeparable(vec![
            ProxFunction::Quadratic {
                weight: 1.0,
                center: vec![1.0, 2.0],
            },
            ProxFunction::l1(0.5, 3),
        ]);
        assert_eq!(g.dim(), 5);
        assert_eq!(g.slice(2, 3).unwrap(), ProxFunction::l1(0.5, 3));
        assert_eq!(
            g.slice(1, 2).unwrap(),
            ProxFunction::SumSeparable(vec![
                ProxFunction::Quadratic {
                    weight: 1.0,
                    center: vec![2.0]
                },
                ProxFunction::l1(0.5, 1)
            ])
        );
        assert!(matches!(g.scalar_conjugate(3).unwrap(), ScalarConj::Clamp { hi, .. } if hi == 0.5));
        assert_eq!(g.separability().len(), 5);
        let gl = ProxFunction::GroupL12 {
            weight: 1.0,
            pixels: 3,
        };
        assert_eq!(gl.separability()[1], vec![1, 4]);
    }

    #[test]
    fn conjugate_values() {
        let q = ProxFunction::Quadratic {
            weight: 2.0,
            center: vec![1.0],
        };
        assert_eq!(q.conj_value(&[2.0]).unwrap(), 1.0 + 2.0);
        let l1 = ProxFunction::l1(1.0, 2);
        assert_eq!(l1.conj_value(&[0.5, -1.0]).unwrap(), 0.0);
        assert_eq!(l1.conj_value(&[1.5, 0.0]).unwrap(), f64::INFINITY);
        let b = ProxFunction::BoxIndicator {
            lo: 0.0,
            hi: 1.0,
            dim: 2,
        };
        assert_eq!(b.conj_value(&[2.0, -3.0]).unwrap(), 2.0);
    }
}
