//! Domain types and exact softmax-policy math.
//!
//! The policy scores an action `a` for a context `x` with the bilinear form
//! `f_θ(a, x) = (θᵀx)·β_a`, where `β` is a frozen `P×L` item-embedding matrix
//! and `θ` is the learned `L×L` policy matrix. Everything here is the exact
//! O(P·L) path; the sublinear machinery lives in [`crate::mips`] and
//! [`crate::grad`].

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};

/// Dense action identifier in `0..P`.
pub type ActionId = u32;

/// A discrete action catalog of size `P` with dense ids `0..P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Catalog {
    size: usize,
}

impl Catalog {
    /// A catalog needs at least two actions to make a decision problem.
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::Config(format!(
                "catalog size must be at least 2, got {size}"
            )));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn contains(&self, a: ActionId) -> bool {
        (a as usize) < self.size
    }
}

/// The frozen `P×L` item-embedding matrix `β`.
///
/// Immutable after construction: the optimizer only ever touches `θ`, so a
/// search index built over these rows stays valid for the whole run.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemEmbeddings {
    rows: Array2<f64>,
}

impl ItemEmbeddings {
    pub fn new(rows: Array2<f64>) -> Result<Self> {
        if rows.nrows() == 0 || rows.ncols() == 0 {
            return Err(Error::Config("item embedding matrix is empty".into()));
        }
        if !rows.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("item embedding matrix".into()));
        }
        Ok(Self { rows })
    }

    /// Catalog size `P`.
    pub fn n_items(&self) -> usize {
        self.rows.nrows()
    }

    /// Embedding dimension `L`.
    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.rows
    }

    /// Embedding row `β_a`.
    pub fn row(&self, a: ActionId) -> Result<ArrayView1<'_, f64>> {
        if (a as usize) >= self.n_items() {
            return Err(Error::ActionOutOfRange {
                id: a,
                catalog: self.n_items(),
            });
        }
        Ok(self.rows.row(a as usize))
    }
}

/// A user context vector of dimension `L` (a mean item embedding in the
/// session-completion pipeline, but any finite vector works).
#[derive(Debug, Clone, PartialEq)]
pub struct ContextVector(Array1<f64>);

impl ContextVector {
    pub fn new(x: Array1<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Config("context vector is empty".into()));
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("context vector".into()));
        }
        Ok(Self(x))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn view(&self) -> ArrayView1<'_, f64> {
        self.0.view()
    }
}

/// The learned `L×L` policy matrix `θ`; the user transform is `h(x) = θᵀx`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    theta: Array2<f64>,
}

impl PolicyParams {
    pub fn new(theta: Array2<f64>) -> Result<Self> {
        if theta.nrows() != theta.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "policy matrix must be square, got {}x{}",
                theta.nrows(),
                theta.ncols()
            )));
        }
        if !theta.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("policy matrix".into()));
        }
        Ok(Self { theta })
    }

    /// The all-zeros initialization; the induced policy is exactly uniform.
    pub fn zeros(dim: usize) -> Self {
        Self {
            theta: Array2::zeros((dim, dim)),
        }
    }

    pub fn dim(&self) -> usize {
        self.theta.nrows()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.theta
    }

    /// Mutable access is reserved for the optimizer.
    pub(crate) fn matrix_mut(&mut self) -> &mut Array2<f64> {
        &mut self.theta
    }

    /// The user embedding `h = θᵀx`.
    pub fn user_embedding(&self, x: &ContextVector) -> Result<Array1<f64>> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "context dim {} vs policy dim {}",
                x.dim(),
                self.dim()
            )));
        }
        Ok(self.theta.t().dot(&x.view()))
    }
}

/// A probability distribution over the catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution {
    probs: Vec<f64>,
}

impl ActionDistribution {
    /// Validates non-negativity and normalization to within 1e-9.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::NonFinite("action distribution".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "action probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, a: ActionId) -> f64 {
        self.probs[a as usize]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }
}

/// One logged bandit observation: the action taken, the propensity with
/// which the logging policy took it, and the reward observed.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedBanditRecord {
    pub context: ContextVector,
    pub action: ActionId,
    pub propensity: f64,
    pub reward: f64,
}

impl LoggedBanditRecord {
    pub fn new(context: ContextVector, action: ActionId, propensity: f64, reward: f64) -> Result<Self> {
        if !(propensity > 0.0 && propensity <= 1.0) {
            return Err(Error::Config(format!(
                "propensity must be in (0, 1], got {propensity}"
            )));
        }
        if !reward.is_finite() {
            return Err(Error::NonFinite("logged reward".into()));
        }
        Ok(Self {
            context,
            action,
            propensity,
            reward,
        })
    }
}

fn check_dims(theta: &PolicyParams, x: &ContextVector, beta: &ItemEmbeddings) -> Result<()> {
    if theta.dim() != beta.dim() || x.dim() != beta.dim() {
        return Err(Error::DimensionMismatch(format!(
            "theta {}x{}, context {}, embeddings {}x{}",
            theta.dim(),
            theta.dim(),
            x.dim(),
            beta.n_items(),
            beta.dim()
        )));
    }
    Ok(())
}

/// Relevance score `f_θ(a, x) = (θᵀx)·β_a`.
pub fn relevance_score(
    theta: &PolicyParams,
    x: &ContextVector,
    beta: &ItemEmbeddings,
    a: ActionId,
) -> Result<f64> {
    check_dims(theta, x, beta)?;
    let h = theta.user_embedding(x)?;
    let row = beta.row(a)?;
    Ok(h.dot(&row))
}

/// All `P` relevance scores at once: `β·(θᵀx)`.
pub fn policy_scores(
    theta: &PolicyParams,
    x: &ContextVector,
    beta: &ItemEmbeddings,
) -> Result<Array1<f64>> {
    check_dims(theta, x, beta)?;
    let h = theta.user_embedding(x)?;
    Ok(beta.matrix().dot(&h))
}

/// Numerically stable softmax: exponentials are taken after subtracting the
/// maximum score, so the result is invariant to adding a constant to every
/// score and never overflows for finite inputs.
pub fn stable_softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = out.iter().sum();
    for p in &mut out {
        *p /= total;
    }
    out
}

/// Exact policy distribution `π_θ(·|x)` by full enumeration, O(P·L).
pub fn policy_probabilities_exact(
    theta: &PolicyParams,
    x: &ContextVector,
    beta: &ItemEmbeddings,
) -> Result<ActionDistribution> {
    let scores = policy_scores(theta, x, beta)?;
    if !scores.iter().all(|s| s.is_finite()) {
        return Err(Error::NonFinite("policy scores".into()));
    }
    ActionDistribution::new(stable_softmax(scores.as_slice().expect("contiguous")))
}

/// Exact argmax of the relevance scores; ties break to the lowest action id.
pub fn policy_argmax_exact(
    theta: &PolicyParams,
    x: &ContextVector,
    beta: &ItemEmbeddings,
) -> Result<ActionId> {
    let scores = policy_scores(theta, x, beta)?;
    Ok(argmax_slice(scores.as_slice().expect("contiguous")) as ActionId)
}

/// Argmax over a raw score slice with the same lowest-id tie-break.
pub(crate) fn argmax_slice(scores: &[f64]) -> usize {
    let mut best = 0usize;
    let mut best_score = f64::NEG_INFINITY;
    for (i, &s) in scores.iter().enumerate() {
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    best
}
