//! HNSW-style navigable graph for approximate inner-product search.
//!
//! A multi-layer proximity graph: every node lives on layer 0, and each
//! higher layer keeps an exponentially thinner subset for long-range
//! routing. Queries descend greedily through the sparse layers and finish
//! with a beam search on layer 0.
//!
//! Similarity is the raw inner product; higher is better and no reduction
//! to a metric space is performed. Neighbor ties always break to the lower
//! id, and level assignment draws from a seeded stream, so a build is
//! bit-reproducible from `(β, config)`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;

use super::{MipsConfig, Scored, TopKSet, VectorStore};
use crate::policy::ActionId;

/// Per-node adjacency: `connections[level]` lists neighbor ids at that level.
#[derive(Debug, Clone, PartialEq)]
struct Node {
    connections: Vec<Vec<ActionId>>,
}

#[derive(Debug, Clone)]
pub struct HnswIndex {
    store: VectorStore,
    nodes: Vec<Node>,
    entry_point: ActionId,
    max_level: usize,
    m: usize,
    m0: usize,
    ef_construction: usize,
    ef_search: usize,
    seed: u64,
}

/// Reusable visited-set; a plain bitset over node ids.
struct Visited {
    words: Vec<u64>,
}

impl Visited {
    fn new(n: usize) -> Self {
        Self {
            words: vec![0; n.div_ceil(64)],
        }
    }

    /// Marks `id` and reports whether it was fresh.
    fn insert(&mut self, id: usize) -> bool {
        let (word, bit) = (id / 64, id % 64);
        let fresh = self.words[word] & (1 << bit) == 0;
        self.words[word] |= 1 << bit;
        fresh
    }
}

impl HnswIndex {
    pub(crate) fn build(store: VectorStore, config: &MipsConfig) -> Self {
        let n = store.len();
        let level_mult = 1.0 / (config.m as f64).ln().max(f64::MIN_POSITIVE);
        let mut level_rng = crate::rng::stream_rng(config.seed, &[0x484e_5357]);

        let mut index = Self {
            store,
            nodes: Vec::with_capacity(n),
            entry_point: 0,
            max_level: 0,
            m: config.m,
            m0: config.m * 2,
            ef_construction: config.ef_construction,
            ef_search: config.ef_search,
            seed: config.seed,
        };

        for id in 0..n {
            let u: f64 = level_rng.random::<f64>().max(f64::MIN_POSITIVE);
            let level = (-u.ln() * level_mult).floor() as usize;
            index.insert(id as ActionId, level);
        }
        index
    }

    pub(crate) fn store(&self) -> &VectorStore {
        &self.store
    }

    pub(crate) fn params(&self) -> MipsConfig {
        MipsConfig {
            m: self.m,
            ef_construction: self.ef_construction,
            ef_search: self.ef_search,
            seed: self.seed,
        }
    }

    pub(crate) fn entry_point(&self) -> ActionId {
        self.entry_point
    }

    pub(crate) fn max_level(&self) -> usize {
        self.max_level
    }

    pub(crate) fn adjacency(&self) -> impl Iterator<Item = &[Vec<ActionId>]> {
        self.nodes.iter().map(|n| n.connections.as_slice())
    }

    /// Rebuild from deserialized parts; used by the binary loader.
    pub(crate) fn from_parts(
        store: VectorStore,
        connections: Vec<Vec<Vec<ActionId>>>,
        entry_point: ActionId,
        max_level: usize,
        config: &MipsConfig,
    ) -> Self {
        Self {
            store,
            nodes: connections
                .into_iter()
                .map(|c| Node { connections: c })
                .collect(),
            entry_point,
            max_level,
            m: config.m,
            m0: config.m * 2,
            ef_construction: config.ef_construction,
            ef_search: config.ef_search,
            seed: config.seed,
        }
    }

    fn cap(&self, level: usize) -> usize {
        if level == 0 {
            self.m0
        } else {
            self.m
        }
    }

    fn insert(&mut self, id: ActionId, level: usize) {
        let node = Node {
            connections: vec![Vec::new(); level + 1],
        };
        self.nodes.push(node);

        if id == 0 {
            self.entry_point = 0;
            self.max_level = level;
            return;
        }

        let query: Vec<f64> = self.store.row(id as usize).to_vec();
        let mut ep = vec![Scored {
            score: self.store.score(&query, self.entry_point as usize),
            id: self.entry_point,
        }];

        // Greedy single-path descent through layers above the node's level.
        for layer in ((level + 1)..=self.max_level).rev() {
            ep = self.search_layer(&query, &ep, 1, layer, Some(id));
        }

        // Beam search and connect on every layer the node lives on.
        for layer in (0..=level.min(self.max_level)).rev() {
            let candidates = self.search_layer(&query, &ep, self.ef_construction, layer, Some(id));
            let selected = self.select_neighbors(&candidates, self.m);
            self.nodes[id as usize].connections[layer] = selected.clone();
            for &neighbor in &selected {
                self.connect(neighbor, id, layer);
                self.prune(neighbor, layer);
            }
            ep = candidates;
        }

        if level > self.max_level {
            self.max_level = level;
            self.entry_point = id;
        }
    }

    fn connect(&mut self, from: ActionId, to: ActionId, layer: usize) {
        let conns = &mut self.nodes[from as usize].connections;
        if layer < conns.len() && !conns[layer].contains(&to) {
            conns[layer].push(to);
        }
    }

    /// Re-select a node's neighbor list when it overflows its cap.
    fn prune(&mut self, id: ActionId, layer: usize) {
        let cap = self.cap(layer);
        if self.nodes[id as usize].connections[layer].len() <= cap {
            return;
        }
        let own: Vec<f64> = self.store.row(id as usize).to_vec();
        let current: Vec<Scored> = self.nodes[id as usize].connections[layer]
            .iter()
            .map(|&nb| Scored {
                score: self.store.score(&own, nb as usize),
                id: nb,
            })
            .collect();
        let kept = self.select_neighbors(&current, cap);
        self.nodes[id as usize].connections[layer] = kept;
    }

    /// Diversity-aware neighbor selection: a candidate is taken when it is
    /// more similar to the query (its score) than to any already-selected
    /// neighbor; remaining slots are filled from the pruned list in score
    /// order.
    fn select_neighbors(&self, candidates: &[Scored], m: usize) -> Vec<ActionId> {
        let mut ordered = candidates.to_vec();
        ordered.sort_unstable_by(|a, b| b.cmp(a));
        ordered.dedup_by_key(|c| c.id);

        let mut selected: Vec<Scored> = Vec::with_capacity(m);
        let mut pruned: Vec<Scored> = Vec::new();
        for cand in ordered {
            if selected.len() >= m {
                break;
            }
            let cand_row = self.store.row(cand.id as usize);
            let diverse = selected.iter().all(|s| {
                let sim_to_selected = super::dot(cand_row, self.store.row(s.id as usize));
                cand.score > sim_to_selected
            });
            if diverse {
                selected.push(cand);
            } else {
                pruned.push(cand);
            }
        }
        for cand in pruned {
            if selected.len() >= m {
                break;
            }
            selected.push(cand);
        }
        selected.into_iter().map(|s| s.id).collect()
    }

    /// Beam search restricted to one layer. `skip` excludes the node being
    /// inserted so it never links to itself.
    fn search_layer(
        &self,
        query: &[f64],
        entry_points: &[Scored],
        ef: usize,
        layer: usize,
        skip: Option<ActionId>,
    ) -> Vec<Scored> {
        let mut visited = Visited::new(self.nodes.len());
        let mut frontier: BinaryHeap<Scored> = BinaryHeap::new();
        let mut best: BinaryHeap<Reverse<Scored>> = BinaryHeap::new();

        for &ep in entry_points {
            if visited.insert(ep.id as usize) {
                frontier.push(ep);
                best.push(Reverse(ep));
            }
        }
        if let Some(id) = skip {
            visited.insert(id as usize);
        }

        while let Some(current) = frontier.pop() {
            let worst = best.peek().map(|r| r.0.score).unwrap_or(f64::NEG_INFINITY);
            if current.score < worst && best.len() >= ef {
                break;
            }
            let conns = &self.nodes[current.id as usize].connections;
            if layer >= conns.len() {
                continue;
            }
            for &nb in &conns[layer] {
                if !visited.insert(nb as usize) {
                    continue;
                }
                let cand = Scored {
                    score: self.store.score(query, nb as usize),
                    id: nb,
                };
                let worst = best.peek().map(|r| r.0).unwrap_or(Scored {
                    score: f64::NEG_INFINITY,
                    id: ActionId::MAX,
                });
                if best.len() < ef || cand > worst {
                    frontier.push(cand);
                    best.push(Reverse(cand));
                    if best.len() > ef {
                        best.pop();
                    }
                }
            }
        }

        let mut out: Vec<Scored> = best.into_iter().map(|r| r.0).collect();
        out.sort_unstable_by(|a, b| b.cmp(a));
        out
    }

    pub(crate) fn top_k(&self, query: &[f64], k: usize) -> TopKSet {
        let ef = self.ef_search.max(k);
        let mut ep = vec![Scored {
            score: self.store.score(query, self.entry_point as usize),
            id: self.entry_point,
        }];
        for layer in (1..=self.max_level).rev() {
            ep = self.search_layer(query, &ep, 1, layer, None);
        }
        let mut found = self.search_layer(query, &ep, ef, 0, None);
        found.truncate(k);
        TopKSet::from_descending(found.into_iter().map(|s| (s.id, s.score)).collect())
    }
}
