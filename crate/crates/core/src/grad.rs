//! Gradient estimators for the per-context objective
//! `R̂(θ) = E_{a∼π_θ(·|x)}[r̂(a, x)]`.
//!
//! Four routes, from slow-and-exact to fast-and-approximate:
//!
//! - [`exact_gradient`]: full enumeration of the score-function identity
//!   `E[r̂·∇log π]` — the O(P·L) oracle.
//! - [`exact_covariance_gradient`]: full enumeration of the equivalent
//!   covariance form `Cov[r̂, ∇f]`, which never references the normalizing
//!   constant. Equal to the first route analytically; the pair is kept as a
//!   cross-check.
//! - [`reinforce_mc_gradient`]: Monte-Carlo score-function estimate with
//!   exact policy sampling via Gumbel-max perturbation — unbiased, but every
//!   sample pays O(P). This is the timing baseline.
//! - [`snis_covariance_gradient`]: the fast path. Samples come from a
//!   [`MixtureProposal`] and the covariance is estimated under
//!   self-normalized importance weights computed in log space; no O(P) sum
//!   anywhere.
//!
//! For the linear relevance model the per-action gradient is the closed
//! form `∇_θ f(a, x) = x β_aᵀ`, so every estimator reduces to an outer
//! product of `x` with an L-vector accumulated over actions.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;

use crate::error::{Error, Result};
use crate::policy::{
    policy_scores, stable_softmax, ActionId, ContextVector, ItemEmbeddings, PolicyParams,
};
use crate::proposal::MixtureProposal;

/// Largest catalog the exact enumeration oracles accept.
pub const ENUMERATION_GUARD: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Exact,
    ExactCovariance,
    ReinforceMc,
    SnisCovariance,
}

/// Importance-weight health for the SNIS estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightDiagnostics {
    /// Effective sample size `1/Σ ω̄_s²`; S for uniform weights, 1 when a
    /// single weight dominates.
    pub ess: f64,
    /// Largest normalized weight.
    pub max_weight: f64,
}

/// A gradient estimate with bookkeeping for reporting and probes.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub grad: Array2<f64>,
    pub kind: EstimatorKind,
    /// Monte-Carlo samples used; the catalog size for exact enumeration.
    pub samples: usize,
    /// The estimator's own view of `E[r̂]` (the SNIS `r̄`, the MC mean, or
    /// the exact expectation).
    pub mean_reward: f64,
    pub weight_diag: Option<WeightDiagnostics>,
    /// Inner products `f(a, x)` evaluated outside any index structure.
    pub score_evals: usize,
    /// Reward-estimator invocations.
    pub reward_evals: usize,
}

fn outer(x: ArrayView1<'_, f64>, v: &Array1<f64>) -> Array2<f64> {
    let l = x.len();
    Array2::from_shape_fn((l, l), |(i, j)| x[i] * v[j])
}

fn guard_enumeration(p: usize) -> Result<()> {
    if p > ENUMERATION_GUARD {
        return Err(Error::EnumerationGuard {
            p,
            max: ENUMERATION_GUARD,
        });
    }
    Ok(())
}

/// Exact policy gradient by full enumeration of the score-function form
/// `Σ_a π(a|x) r̂(a) (∇f_a − E_π[∇f])`. O(P·L) plus the final outer product.
pub fn exact_gradient(
    theta: &PolicyParams,
    x: &ContextVector,
    beta: &ItemEmbeddings,
    reward: impl Fn(ActionId) -> f64,
) -> Result<GradientEstimate> {
    let p = beta.n_items();
    guard_enumeration(p)?;
    let scores = policy_scores(theta, x, beta)?;
    let probs = stable_softmax(scores.as_slice().expect("contiguous"));

    // E_π[β] gives the ∇log Z part of ∇log π.
    let l = beta.dim();
    let mut beta_mean = Array1::<f64>::zeros(l);
    for (a, &pa) in probs.iter().enumerate() {
        beta_mean.scaled_add(pa, &beta.matrix().row(a));
    }

    let mut v = Array1::<f64>::zeros(l);
    let mut expected_reward = 0.0;
    for (a, &pa) in probs.iter().enumerate() {
        let r = reward(a as ActionId);
        expected_reward += pa * r;
        let w = pa * r;
        for (vi, (&b, &bm)) in v
            .iter_mut()
            .zip(beta.matrix().row(a).iter().zip(beta_mean.iter()))
        {
            *vi += w * (b - bm);
        }
    }

    Ok(GradientEstimate {
        grad: outer(x.view(), &v),
        kind: EstimatorKind::Exact,
        samples: p,
        mean_reward: expected_reward,
        weight_diag: None,
        score_evals: p,
        reward_evals: p,
    })
}

/// Exact covariance gradient by full enumeration of
/// `E_π[(r̂ − E r̂)(∇f − E ∇f)]`. Identical to [`exact_gradient`] in exact
/// arithmetic; accumulated along a different route.
pub fn exact_covariance_gradient(
    theta: &PolicyParams,
    x: &ContextVector,
    beta: &ItemEmbeddings,
    reward: impl Fn(ActionId) -> f64,
) -> Result<GradientEstimate> {
    let p = beta.n_items();
    guard_enumeration(p)?;
    let scores = policy_scores(theta, x, beta)?;
    let probs = stable_softmax(scores.as_slice().expect("contiguous"));

    let l = beta.dim();
    let mut rewards = Vec::with_capacity(p);
    let mut mean_reward = 0.0;
    let mut beta_mean = Array1::<f64>::zeros(l);
    for (a, &pa) in probs.iter().enumerate() {
        let r = reward(a as ActionId);
        rewards.push(r);
        mean_reward += pa * r;
        beta_mean.scaled_add(pa, &beta.matrix().row(a));
    }

    let mut v = Array1::<f64>::zeros(l);
    for (a, &pa) in probs.iter().enumerate() {
        let centered_r = rewards[a] - mean_reward;
        let w = pa * centered_r;
        for (vi, (&b, &bm)) in v
            .iter_mut()
            .zip(beta.matrix().row(a).iter().zip(beta_mean.iter()))
        {
            *vi += w * (b - bm);
        }
    }

    Ok(GradientEstimate {
        grad: outer(x.view(), &v),
        kind: EstimatorKind::ExactCovariance,
        samples: p,
        mean_reward,
        weight_diag: None,
        score_evals: p,
        reward_evals: p,
    })
}

/// Monte-Carlo REINFORCE with exact policy sampling.
///
/// Each of the `s` draws perturbs all P scores with fresh Gumbel noise and
/// takes the argmax (evaluated in the equivalent exponential-race form
/// `argmin_a E_a / exp(f_a − max f)`, which shares the single score pass and
/// needs one logarithm per perturbed score). `∇log π` uses the exact
/// softmax, so the estimate is unbiased; the cost is O(P·L + s·P).
pub fn reinforce_mc_gradient(
    theta: &PolicyParams,
    x: &ContextVector,
    beta: &ItemEmbeddings,
    reward: impl Fn(ActionId) -> f64,
    s: usize,
    rng: &mut impl Rng,
) -> Result<GradientEstimate> {
    if s == 0 {
        return Err(Error::Config("REINFORCE needs at least one sample".into()));
    }
    let p = beta.n_items();
    let scores = policy_scores(theta, x, beta)?;
    let scores = scores.as_slice().expect("contiguous");
    if !scores.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("policy scores".into()));
    }
    let probs = stable_softmax(scores);

    let l = beta.dim();
    let mut beta_mean = Array1::<f64>::zeros(l);
    for (a, &pa) in probs.iter().enumerate() {
        beta_mean.scaled_add(pa, &beta.matrix().row(a));
    }

    // Rates for the exponential race, shifted by the max score so the
    // exponentials stay in range.
    let max_score = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let rates: Vec<f64> = scores.iter().map(|f| (f - max_score).exp()).collect();

    let mut v = Array1::<f64>::zeros(l);
    let mut reward_sum = 0.0;
    for _ in 0..s {
        let mut best = 0usize;
        let mut best_clock = f64::INFINITY;
        for (a, &rate) in rates.iter().enumerate() {
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            let clock = -u.ln() / rate;
            if clock < best_clock {
                best_clock = clock;
                best = a;
            }
        }
        let r = reward(best as ActionId);
        reward_sum += r;
        let w = r / s as f64;
        for (vi, (&b, &bm)) in v
            .iter_mut()
            .zip(beta.matrix().row(best).iter().zip(beta_mean.iter()))
        {
            *vi += w * (b - bm);
        }
    }

    Ok(GradientEstimate {
        grad: outer(x.view(), &v),
        kind: EstimatorKind::ReinforceMc,
        samples: s,
        mean_reward: reward_sum / s as f64,
        weight_diag: None,
        score_evals: p,
        reward_evals: s,
    })
}

/// Normalize log-weights into probabilities via max-subtracted
/// exponentiation. The result only depends on differences of the inputs,
/// so adding a constant to every log-weight leaves it unchanged.
pub fn normalize_log_weights(log_weights: &[f64]) -> Vec<f64> {
    stable_softmax(log_weights)
}

/// The fast estimator: self-normalized importance sampling of the
/// covariance gradient under a mixture proposal.
///
/// Weights are `log ω_s = f(a_s, x) − log q(a_s)` normalized in log space;
/// neither the normalizing constant nor any other O(P) sum is ever formed.
/// Per call: O(S·(L + log K)) plus the final L×L outer product.
pub fn snis_covariance_gradient(
    theta: &PolicyParams,
    x: &ContextVector,
    beta: &ItemEmbeddings,
    reward: impl Fn(ActionId) -> f64,
    proposal: &MixtureProposal,
    s: usize,
    rng: &mut impl Rng,
) -> Result<GradientEstimate> {
    if proposal.catalog_size() != beta.n_items() {
        return Err(Error::DimensionMismatch(format!(
            "proposal catalog {} vs embeddings {}",
            proposal.catalog_size(),
            beta.n_items()
        )));
    }
    let h = theta.user_embedding(x)?;
    if beta.dim() != h.len() {
        return Err(Error::DimensionMismatch(format!(
            "embeddings dim {} vs policy dim {}",
            beta.dim(),
            h.len()
        )));
    }

    let draws = proposal.sample(s, rng)?;

    let mut log_weights = Vec::with_capacity(s);
    for &a in &draws {
        let f = h.dot(&beta.matrix().row(a as usize));
        if !f.is_finite() {
            return Err(Error::NonFinite(format!("score f({a}, x) = {f}")));
        }
        log_weights.push(f - proposal.log_prob(a)?);
    }
    let weights = normalize_log_weights(&log_weights);
    debug_assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);

    let rewards: Vec<f64> = draws.iter().map(|&a| reward(a)).collect();

    let l = beta.dim();
    let mut r_bar = 0.0;
    let mut beta_bar = Array1::<f64>::zeros(l);
    for ((&a, &w), &r) in draws.iter().zip(&weights).zip(&rewards) {
        r_bar += w * r;
        beta_bar.scaled_add(w, &beta.matrix().row(a as usize));
    }

    let mut v = Array1::<f64>::zeros(l);
    for ((&a, &w), &r) in draws.iter().zip(&weights).zip(&rewards) {
        let c = w * (r - r_bar);
        for (vi, (&b, &bb)) in v
            .iter_mut()
            .zip(beta.matrix().row(a as usize).iter().zip(beta_bar.iter()))
        {
            *vi += c * (b - bb);
        }
    }

    let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
    let diag = WeightDiagnostics {
        ess: 1.0 / sum_sq,
        max_weight: weights.iter().cloned().fold(0.0, f64::max),
    };

    Ok(GradientEstimate {
        grad: outer(x.view(), &v),
        kind: EstimatorKind::SnisCovariance,
        samples: s,
        mean_reward: r_bar,
        weight_diag: Some(diag),
        score_evals: s,
        reward_evals: s,
    })
}
