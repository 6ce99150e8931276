use crate::error::{check_len, Error, Result};
use crate::operators::LinearOperator;
use crate::prox::ProxFunction;

/// `minimize_x f(x) + g(A x)`, equivalently the saddle problem
/// `min_x max_z f(x) + ⟨A x, z⟩ − g*(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleProblem {
    pub f: ProxFunction,
    pub g: ProxFunction,
    pub a: LinearOperator,
    /// Strong convexity modulus of `f`, when known.
    pub mu_f: Option<f64>,
}

impl SaddleProblem {
    pub fn new(f: ProxFunction, g: ProxFunction, a: LinearOperator) -> Result<Self> {
        check_len(a.ncols(), f.dim(), "f dimension vs operator columns")?;
        check_len(a.nrows(), g.dim(), "g dimension vs operator rows")?;
        Ok(Self { f, g, a, mu_f: None })
    }

    pub fn with_strong_convexity(mut self, mu_f: f64) -> Result<Self> {
        if !(mu_f > 0.0) {
            return Err(Error::InvalidParameter(format!("mu_f must be > 0, got {mu_f}")));
        }
        self.mu_f = Some(mu_f);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    /// `Φ(x) = f(x) + g(Ax)`, `+∞` outside the domain.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        let ax = self.a.apply(x)?;
        Ok(self.f.value(x) + self.g.value(&ax))
    }

    /// Objective with indicator terms dropped, and the distance to feasibility,
    /// given a precomputed `A x`.
    pub fn objective_split(&self, x: &[f64], ax: &[f64]) -> (f64, f64) {
        let (fv, fd) = self.f.value_split(x);
        let (gv, gd) = self.g.value_split(ax);
        (fv + gv, (fd + gd).sqrt())
    }

    /// Saddle function `f(x) + ⟨Ax, z⟩ − g*(z)`.
    pub fn saddle_value(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        let ax = self.a.apply(x)?;
        let inner: f64 = ax.iter().zip(z).map(|(a, b)| a * b).sum();
        Ok(self.f.value(x) + inner - self.g.conj_value(z)?)
    }
}
