//! Maximum inner product search over the frozen item embeddings.
//!
//! Two interchangeable index variants answer `argmax_a q·β_a` style top-K
//! queries: an exact brute-force scan (the reference) and an HNSW-style
//! navigable graph whose query time is empirically sublinear in the catalog
//! size. Both are built once over the frozen `β` and are immutable
//! afterwards, so concurrent queries need no synchronization.
//!
//! Scores returned for retrieved ids are always exact inner products; the
//! graph variant approximates *which* ids are found, never their scores.

mod hnsw;
mod io;

pub use hnsw::HnswIndex;

use crate::error::{Error, Result};
use crate::policy::{ActionId, ItemEmbeddings};

/// Graph-index build and query parameters.
///
/// The defaults (`m = 16`, `ef_construction = 200`, `ef_search = 128`)
/// are a robust operating point; retrieval quality is tuned at query time
/// through `ef_search` alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MipsConfig {
    /// Max neighbors per node on layers above 0 (layer 0 keeps `2m`).
    pub m: usize,
    /// Beam width while building the graph.
    pub ef_construction: usize,
    /// Beam width while querying; clamped up to K per query.
    pub ef_search: usize,
    /// Seed for the level-assignment stream; fixes the graph bit-for-bit.
    pub seed: u64,
}

impl Default for MipsConfig {
    fn default() -> Self {
        Self {
            m: 16,
            ef_construction: 200,
            ef_search: 128,
            seed: 0,
        }
    }
}

impl MipsConfig {
    fn validate(&self) -> Result<()> {
        if self.m == 0 || self.ef_construction == 0 || self.ef_search == 0 {
            return Err(Error::Config(
                "index parameters m, ef_construction, ef_search must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A scored action used in heaps and result lists. Ordering is total:
/// higher score wins, ties go to the lower action id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Scored {
    pub score: f64,
    pub id: ActionId,
}

impl Eq for Scored {}

impl Ord for Scored {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// The K highest-scoring actions for one query, descending by score.
#[derive(Debug, Clone, PartialEq)]
pub struct TopKSet {
    entries: Vec<(ActionId, f64)>,
}

impl TopKSet {
    /// Build from `(id, score)` pairs; they must be sorted by descending
    /// score with distinct ids.
    pub fn new(entries: Vec<(ActionId, f64)>) -> Result<Self> {
        if entries.windows(2).any(|w| w[0].1 < w[1].1) {
            return Err(Error::Config(
                "top-k entries must be sorted by descending score".into(),
            ));
        }
        let mut ids: Vec<ActionId> = entries.iter().map(|(id, _)| *id).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != entries.len() {
            return Err(Error::Config("top-k entries must have distinct ids".into()));
        }
        Ok(Self { entries })
    }

    pub(crate) fn from_descending(entries: Vec<(ActionId, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].1 >= w[1].1));
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(action id, exact inner product)` pairs, best first.
    pub fn entries(&self) -> &[(ActionId, f64)] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = ActionId> + '_ {
        self.entries.iter().map(|(id, _)| *id)
    }

    /// Best action, if any.
    pub fn top(&self) -> Option<ActionId> {
        self.entries.first().map(|(id, _)| *id)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Flat row-major copy of the embedding matrix shared by both variants.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct VectorStore {
    data: Vec<f64>,
    n: usize,
    dim: usize,
}

impl VectorStore {
    fn from_embeddings(beta: &ItemEmbeddings) -> Self {
        let n = beta.n_items();
        let dim = beta.dim();
        let mut data = Vec::with_capacity(n * dim);
        for row in beta.matrix().rows() {
            data.extend(row.iter());
        }
        Self { data, n, dim }
    }

    pub(crate) fn from_raw(data: Vec<f64>, n: usize, dim: usize) -> Self {
        debug_assert_eq!(data.len(), n * dim);
        Self { data, n, dim }
    }

    pub(crate) fn len(&self) -> usize {
        self.n
    }

    pub(crate) fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn row(&self, id: usize) -> &[f64] {
        &self.data[id * self.dim..(id + 1) * self.dim]
    }

    pub(crate) fn raw(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn score(&self, query: &[f64], id: usize) -> f64 {
        dot(query, self.row(id))
    }
}

/// Exact brute-force index: a full scan per query, O(P·L).
#[derive(Debug, Clone, PartialEq)]
pub struct ExactIndex {
    store: VectorStore,
}

impl ExactIndex {
    fn new(store: VectorStore) -> Self {
        Self { store }
    }

    fn top_k(&self, query: &[f64], k: usize) -> TopKSet {
        let mut heap = std::collections::BinaryHeap::with_capacity(k + 1);
        for id in 0..self.store.len() {
            let cand = Scored {
                score: self.store.score(query, id),
                id: id as ActionId,
            };
            if heap.len() < k {
                heap.push(std::cmp::Reverse(cand));
            } else if let Some(&std::cmp::Reverse(worst)) = heap.peek() {
                if cand > worst {
                    heap.pop();
                    heap.push(std::cmp::Reverse(cand));
                }
            }
        }
        let mut best: Vec<Scored> = heap.into_iter().map(|r| r.0).collect();
        best.sort_unstable_by(|a, b| b.cmp(a));
        TopKSet::from_descending(best.into_iter().map(|s| (s.id, s.score)).collect())
    }
}

/// Which index structure to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexVariant {
    Exact,
    Graph,
}

/// A built MIPS index, frozen after construction.
#[derive(Debug, Clone)]
pub enum MipsIndex {
    Exact(ExactIndex),
    Graph(HnswIndex),
}

/// Build an index over the item embeddings. One-time work, done before
/// training starts; the embeddings are copied in.
pub fn build_index(
    beta: &ItemEmbeddings,
    variant: IndexVariant,
    config: &MipsConfig,
) -> Result<MipsIndex> {
    config.validate()?;
    let store = VectorStore::from_embeddings(beta);
    if store.len() == 0 {
        return Err(Error::Config("cannot index an empty embedding matrix".into()));
    }
    Ok(match variant {
        IndexVariant::Exact => MipsIndex::Exact(ExactIndex::new(store)),
        IndexVariant::Graph => MipsIndex::Graph(HnswIndex::build(store, config)),
    })
}

impl MipsIndex {
    /// Convenience: exact variant with default config.
    pub fn exact(beta: &ItemEmbeddings) -> Result<Self> {
        build_index(beta, IndexVariant::Exact, &MipsConfig::default())
    }

    /// Convenience: graph variant.
    pub fn graph(beta: &ItemEmbeddings, config: &MipsConfig) -> Result<Self> {
        build_index(beta, IndexVariant::Graph, config)
    }

    pub fn n_items(&self) -> usize {
        self.store().len()
    }

    pub fn dim(&self) -> usize {
        self.store().dim()
    }

    pub fn variant(&self) -> IndexVariant {
        match self {
            MipsIndex::Exact(_) => IndexVariant::Exact,
            MipsIndex::Graph(_) => IndexVariant::Graph,
        }
    }

    pub(crate) fn store(&self) -> &VectorStore {
        match self {
            MipsIndex::Exact(idx) => &idx.store,
            MipsIndex::Graph(idx) => idx.store(),
        }
    }

    /// Top-K actions by inner product with `query`.
    ///
    /// `k` larger than the catalog is clamped to the catalog size with a
    /// warning, which keeps parameter sweeps valid on tiny test catalogs.
    pub fn top_k(&self, query: &[f64], k: usize) -> Result<TopKSet> {
        if query.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "query dim {} vs index dim {}",
                query.len(),
                self.dim()
            )));
        }
        if k == 0 {
            return Err(Error::Config("top-k query needs k >= 1".into()));
        }
        let k = if k > self.n_items() {
            log::warn!(
                "top-k request k={} exceeds catalog size {}; clamping",
                k,
                self.n_items()
            );
            self.n_items()
        } else {
            k
        };
        Ok(match self {
            MipsIndex::Exact(idx) => idx.top_k(query, k),
            MipsIndex::Graph(idx) => idx.top_k(query, k),
        })
    }

    /// Persist to a versioned little-endian binary file.
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        io::save(self, path)
    }

    /// Load an index written by [`MipsIndex::save`]; rejects any other
    /// format version.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        io::load(path)
    }
}
