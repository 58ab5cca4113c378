//! Pluggable reward estimators `r̂(a, x)`.
//!
//! The training objective only ever sees rewards through a per-context
//! function of the sampled action, so any offline metric can be plugged in.
//! The estimators here cover the common cases: binary set membership for
//! session completion, clipped inverse-propensity scoring for logged bandit
//! data, and the clipped doubly-robust estimator when a reward model is
//! available.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::policy::{ActionId, LoggedBanditRecord};

/// Binary reward: 1 if the action is in the label set, else 0.
pub fn indicator_reward(a: ActionId, labels: &HashSet<ActionId>) -> f64 {
    if labels.contains(&a) {
        1.0
    } else {
        0.0
    }
}

/// Clipped IPS reward: `r_i / max(τ, p_i)` if `a` is the logged action,
/// else 0. `τ = 0` recovers plain IPS.
pub fn ips_clipped_reward(a: ActionId, rec: &LoggedBanditRecord, tau: f64) -> f64 {
    if a == rec.action {
        rec.reward / tau.max(rec.propensity)
    } else {
        0.0
    }
}

/// Clipped doubly-robust reward: the model prediction plus a
/// propensity-corrected residual on the logged action.
pub fn dr_clipped_reward(
    a: ActionId,
    rec: &LoggedBanditRecord,
    tau: f64,
    reward_model: impl Fn(ActionId) -> f64,
) -> f64 {
    let predicted = reward_model(a);
    if a == rec.action {
        (rec.reward - predicted) / tau.max(rec.propensity) + predicted
    } else {
        predicted
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Config(format!(
            "clipping factor must be in [0, 1], got {tau}"
        )));
    }
    Ok(())
}

/// A reward estimator bound to one context, exposed as `r̂(a)`.
///
/// Rewards are evaluated lazily per sampled action; nothing here is ever
/// materialized over the full catalog.
pub enum RewardEstimator<'a> {
    /// `1[a ∈ Y]` against a per-context label set.
    Indicator { labels: &'a HashSet<ActionId> },
    /// Clipped IPS against one logged record.
    IpsClipped { record: &'a LoggedBanditRecord, tau: f64 },
    /// Clipped doubly-robust against one logged record and a reward model.
    DrClipped {
        record: &'a LoggedBanditRecord,
        tau: f64,
        reward_model: Box<dyn Fn(ActionId) -> f64 + Send + Sync + 'a>,
    },
    /// Any caller-supplied metric.
    Custom(Box<dyn Fn(ActionId) -> f64 + Send + Sync + 'a>),
}

impl<'a> RewardEstimator<'a> {
    pub fn indicator(labels: &'a HashSet<ActionId>) -> Self {
        RewardEstimator::Indicator { labels }
    }

    pub fn ips_clipped(record: &'a LoggedBanditRecord, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(RewardEstimator::IpsClipped { record, tau })
    }

    pub fn dr_clipped(
        record: &'a LoggedBanditRecord,
        tau: f64,
        reward_model: impl Fn(ActionId) -> f64 + Send + Sync + 'a,
    ) -> Result<Self> {
        check_tau(tau)?;
        Ok(RewardEstimator::DrClipped {
            record,
            tau,
            reward_model: Box::new(reward_model),
        })
    }

    pub fn custom(f: impl Fn(ActionId) -> f64 + Send + Sync + 'a) -> Self {
        RewardEstimator::Custom(Box::new(f))
    }

    pub fn evaluate(&self, a: ActionId) -> f64 {
        match self {
            RewardEstimator::Indicator { labels } => indicator_reward(a, labels),
            RewardEstimator::IpsClipped { record, tau } => ips_clipped_reward(a, record, *tau),
            RewardEstimator::DrClipped {
                record,
                tau,
                reward_model,
            } => dr_clipped_reward(a, record, *tau, reward_model),
            RewardEstimator::Custom(f) => f(a),
        }
    }
}
