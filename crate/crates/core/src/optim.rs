//! First-order stochastic optimizers for the policy matrix.
//!
//! The training objective is reward maximization. Gradient estimates coming
//! out of [`crate::grad`] are reward-ascent directions; the optimizers
//! negate them internally and run a standard descent on the negative
//! reward, so a step with gradient `g` moves `θ` along `+g`.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::policy::PolicyParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Optimizer state: learning rate, Adam moment estimates and step counter.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    kind: OptimizerKind,
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    first_moment: Array2<f64>,
    second_moment: Array2<f64>,
    t: u64,
}

impl OptimizerState {
    pub fn sgd(learning_rate: f64, dim: usize) -> Result<Self> {
        Self::new(OptimizerKind::Sgd, learning_rate, dim)
    }

    /// Adam with the usual defaults β₁=0.9, β₂=0.999, ε=1e-8.
    pub fn adam(learning_rate: f64, dim: usize) -> Result<Self> {
        Self::new(OptimizerKind::Adam, learning_rate, dim)
    }

    pub fn new(kind: OptimizerKind, learning_rate: f64, dim: usize) -> Result<Self> {
        if !(learning_rate.is_finite() && learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        Ok(Self {
            kind,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            first_moment: Array2::zeros((dim, dim)),
            second_moment: Array2::zeros((dim, dim)),
            t: 0,
        })
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    /// Number of steps applied so far.
    pub fn t(&self) -> u64 {
        self.t
    }

    /// Apply one update with a reward-ascent gradient.
    pub fn step(&mut self, theta: &mut PolicyParams, grad: &Array2<f64>) -> Result<()> {
        match self.kind {
            OptimizerKind::Sgd => sgd_step(self, theta, grad),
            OptimizerKind::Adam => adam_step(self, theta, grad),
        }
    }

    fn validate(&self, theta: &PolicyParams, grad: &Array2<f64>) -> Result<()> {
        if grad.dim() != theta.matrix().dim() || grad.nrows() != self.first_moment.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "gradient {:?} vs policy {:?}",
                grad.dim(),
                theta.matrix().dim()
            )));
        }
        if !grad.iter().all(|g| g.is_finite()) {
            return Err(Error::NonFinite("gradient passed to optimizer".into()));
        }
        Ok(())
    }
}

/// Plain SGD: `θ ← θ + α·g` for a reward-ascent gradient `g`.
pub fn sgd_step(
    state: &mut OptimizerState,
    theta: &mut PolicyParams,
    grad: &Array2<f64>,
) -> Result<()> {
    state.validate(theta, grad)?;
    state.t += 1;
    let alpha = state.learning_rate;
    theta
        .matrix_mut()
        .zip_mut_with(grad, |w, &g| *w -= alpha * (-g));
    Ok(())
}

/// Bias-corrected Adam on the negative-reward loss.
pub fn adam_step(
    state: &mut OptimizerState,
    theta: &mut PolicyParams,
    grad: &Array2<f64>,
) -> Result<()> {
    state.validate(theta, grad)?;
    state.t += 1;
    let (b1, b2) = (state.beta1, state.beta2);
    let bias1 = 1.0 - b1.powi(state.t as i32);
    let bias2 = 1.0 - b2.powi(state.t as i32);
    let alpha = state.learning_rate;
    let eps = state.epsilon;

    state
        .first_moment
        .zip_mut_with(grad, |m, &g| *m = b1 * *m + (1.0 - b1) * (-g));
    state
        .second_moment
        .zip_mut_with(grad, |v, &g| *v = b2 * *v + (1.0 - b2) * g * g);

    let theta = theta.matrix_mut();
    for ((w, &m), &v) in theta
        .iter_mut()
        .zip(state.first_moment.iter())
        .zip(state.second_moment.iter())
    {
        let m_hat = m / bias1;
        let v_hat = v / bias2;
        *w -= alpha * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}
