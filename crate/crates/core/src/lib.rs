//! Offline policy optimization for softmax recommendation policies over
//! large discrete catalogs.
//!
//! The crate trains a softmax policy `π_θ(a|x) ∝ exp((θᵀx)·β_a)` from logged
//! interaction data without ever paying the O(P) cost of the normalizing
//! constant on the fast path. The pieces:
//!
//! - [`policy`]: domain types and the exact softmax math (the O(P·L) oracle).
//! - [`mips`]: maximum inner product search over the frozen item embeddings,
//!   exact scan and an HNSW-style graph index.
//! - [`proposal`]: the mixture proposal (uniform + softmax over the retrieved
//!   top-K) used for importance sampling.
//! - [`rewards`]: pluggable reward estimators (indicator, clipped IPS,
//!   clipped doubly-robust).
//! - [`grad`]: gradient estimators — exact enumeration oracles, Monte-Carlo
//!   score-function baseline, and the self-normalized importance-sampling
//!   covariance estimator.
//! - [`optim`]: SGD and Adam steps over the policy matrix.
//! - [`data`]: ingestion, session split, SVD item embeddings, mean-embedding
//!   contexts, and the prepared-dataset disk format.
//! - [`synth`]: planted synthetic interaction generator for benchmarks.
//! - [`trainer`]: the training loop, test-time evaluation, and the benchmark
//!   harness.

pub mod data;
pub mod error;
pub mod grad;
pub mod mips;
pub mod optim;
pub mod policy;
pub mod proposal;
pub mod rewards;
pub mod rng;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
pub use policy::{
    ActionDistribution, ActionId, Catalog, ContextVector, ItemEmbeddings, LoggedBanditRecord,
    PolicyParams,
};
