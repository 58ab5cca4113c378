//! The mixture proposal `q(·|x)`: ε of the mass spread uniformly over the
//! catalog, the rest on a softmax `κ` over the retrieved top-K actions.
//!
//! The proposal is built per context from a [`TopKSet`], is exact to
//! evaluate (piecewise formula, O(log K) membership lookup), and samples in
//! O(1) per draw via an alias table. Full support — `q(a) ≥ ε/P > 0`
//! everywhere — is what keeps the importance weights in [`crate::grad`]
//! well defined, so ε must be strictly positive.

use rand::Rng;

use crate::error::{Error, Result};
use crate::mips::TopKSet;
use crate::policy::{stable_softmax, ActionId};

/// Smallest accepted mixture parameter. ε = 0 would zero out the proposal
/// off the top-K set while the policy keeps positive mass there, making the
/// importance weights undefined.
pub const MIN_EPSILON: f64 = 1e-6;

/// Walker/Vose alias table for O(1) categorical sampling.
#[derive(Debug, Clone, PartialEq)]
struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    /// `weights` must be non-negative and sum to 1.
    fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        let mut prob = vec![0.0; n];
        let mut alias = vec![0u32; n];
        let mut small = Vec::new();
        let mut large = Vec::new();
        let scaled: Vec<f64> = weights.iter().map(|w| w * n as f64).collect();
        let mut scaled = scaled;
        for (i, &s) in scaled.iter().enumerate() {
            if s < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(s), Some(l)) = (small.pop(), large.pop()) {
            prob[s] = scaled[s];
            alias[s] = l as u32;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if scaled[l] < 1.0 {
                small.push(l);
            } else {
                large.push(l);
            }
        }
        for i in large.into_iter().chain(small) {
            prob[i] = 1.0;
        }
        Self { prob, alias }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = rng.random_range(0..self.prob.len());
        if rng.random::<f64>() < self.prob[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }
}

/// The per-context sampling distribution
/// `q(a) = ε/P + (1−ε)·κ(a)` for `a` in the top-K set, `ε/P` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureProposal {
    epsilon: f64,
    catalog_size: usize,
    /// Top-K ids in retrieval order with their κ mass.
    support: Vec<(ActionId, f64)>,
    /// `(id, index into support)` sorted by id for O(log K) membership.
    by_id: Vec<(ActionId, u32)>,
    alias: AliasTable,
}

/// Build the proposal from a retrieved top-K set.
///
/// κ is the max-subtracted softmax of the K retrieved scores. An empty
/// top-K set is accepted only for ε = 1 (the pure uniform arm).
pub fn build_proposal(topk: &TopKSet, epsilon: f64, catalog_size: usize) -> Result<MixtureProposal> {
    if !(MIN_EPSILON..=1.0).contains(&epsilon) {
        return Err(Error::Config(format!(
            "epsilon must lie in [{MIN_EPSILON}, 1], got {epsilon}"
        )));
    }
    if catalog_size == 0 {
        return Err(Error::Config("catalog size must be positive".into()));
    }
    if topk.is_empty() && epsilon < 1.0 {
        return Err(Error::Config(
            "empty top-K set is only valid for the pure uniform proposal (epsilon = 1)".into(),
        ));
    }
    let mut scores = Vec::with_capacity(topk.len());
    for &(id, score) in topk.entries() {
        if (id as usize) >= catalog_size {
            return Err(Error::ActionOutOfRange {
                id,
                catalog: catalog_size,
            });
        }
        if !score.is_finite() {
            return Err(Error::NonFinite(format!("top-K score for action {id}")));
        }
        scores.push(score);
    }

    let kappa = if scores.is_empty() {
        Vec::new()
    } else {
        stable_softmax(&scores)
    };
    let support: Vec<(ActionId, f64)> = topk
        .ids()
        .zip(kappa.iter().copied())
        .collect();
    let mut by_id: Vec<(ActionId, u32)> = support
        .iter()
        .enumerate()
        .map(|(i, &(id, _))| (id, i as u32))
        .collect();
    by_id.sort_unstable_by_key(|&(id, _)| id);
    let alias = AliasTable::new(&kappa);

    Ok(MixtureProposal {
        epsilon,
        catalog_size,
        support,
        by_id,
        alias,
    })
}

impl MixtureProposal {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn catalog_size(&self) -> usize {
        self.catalog_size
    }

    /// Top-K support in retrieval order with κ masses.
    pub fn support(&self) -> &[(ActionId, f64)] {
        &self.support
    }

    /// κ mass of an action, 0 off the support. O(log K).
    pub fn kappa(&self, a: ActionId) -> f64 {
        match self.by_id.binary_search_by_key(&a, |&(id, _)| id) {
            Ok(pos) => self.support[self.by_id[pos].1 as usize].1,
            Err(_) => 0.0,
        }
    }

    /// Exact probability `q(a)` per the piecewise mixture formula.
    pub fn prob(&self, a: ActionId) -> Result<f64> {
        if (a as usize) >= self.catalog_size {
            return Err(Error::ActionOutOfRange {
                id: a,
                catalog: self.catalog_size,
            });
        }
        let uniform = self.epsilon / self.catalog_size as f64;
        Ok(uniform + (1.0 - self.epsilon) * self.kappa(a))
    }

    /// `ln q(a)`; always finite thanks to full support.
    pub fn log_prob(&self, a: ActionId) -> Result<f64> {
        Ok(self.prob(a)?.ln())
    }

    /// Draw `s ≥ 2` i.i.d. actions: with probability ε a uniform catalog
    /// action, otherwise a κ-distributed action from the top-K set.
    pub fn sample<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> Result<Vec<ActionId>> {
        if s < 2 {
            return Err(Error::Config(format!(
                "covariance estimation needs at least 2 samples, got {s}"
            )));
        }
        let mut out = Vec::with_capacity(s);
        for _ in 0..s {
            let a = if rng.random::<f64>() < self.epsilon {
                rng.random_range(0..self.catalog_size) as ActionId
            } else {
                self.support[self.alias.sample(rng)].0
            };
            out.push(a);
        }
        Ok(out)
    }
}
