//! Query-cost scaling study for the MIPS variants.
//!
//! Ignored by default: building the larger graphs takes minutes and the
//! measurements only mean something on an otherwise idle machine. Run with
//!
//! ```sh
//! cargo test -p polopt --test mips_scaling -- --ignored --nocapture
//! ```

use std::time::Instant;

use ndarray::Array2;
use polopt::mips::{build_index, IndexVariant, MipsConfig, MipsIndex};
use polopt::policy::ItemEmbeddings;
use polopt::rng::stream_rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = stream_rng(seed, &[0]);
    Array2::from_shape_fn((rows, cols), |_| StandardNormal.sample(&mut rng))
}

fn mean_query_seconds(index: &MipsIndex, dim: usize, k: usize, queries: usize) -> f64 {
    // Warm up caches, then time.
    for q in 0..5u64 {
        let query = gaussian(1, dim, 900 + q).row(0).to_vec();
        index.top_k(&query, k).unwrap();
    }
    let started = Instant::now();
    for q in 0..queries as u64 {
        let query = gaussian(1, dim, 1000 + q).row(0).to_vec();
        index.top_k(&query, k).unwrap();
    }
    started.elapsed().as_secs_f64() / queries as f64
}

/// Graph query time grows sublinearly over P ∈ {1e4, 1e5, 1e6}; the exact
/// scan grows linearly.
#[test]
#[ignore = "builds a 1e6-node graph; takes minutes"]
fn graph_query_time_sublinear_in_catalog_size() {
    let dim = 10;
    let k = 64;
    let sizes = [10_000usize, 100_000, 1_000_000];
    let mut graph_times = Vec::new();
    let mut exact_times = Vec::new();
    for (i, &p) in sizes.iter().enumerate() {
        let beta = ItemEmbeddings::new(gaussian(p, dim, 7 + i as u64)).unwrap();
        let build_started = Instant::now();
        let graph = build_index(&beta, IndexVariant::Graph, &MipsConfig::default()).unwrap();
        println!(
            "P = {p}: graph build {:.1}s",
            build_started.elapsed().as_secs_f64()
        );
        let exact = MipsIndex::exact(&beta).unwrap();
        let tg = mean_query_seconds(&graph, dim, k, 200);
        let te = mean_query_seconds(&exact, dim, k, 20);
        println!("P = {p}: graph {:.3}ms/query, exact {:.3}ms/query", tg * 1e3, te * 1e3);
        graph_times.push(tg);
        exact_times.push(te);
    }

    // 10x catalog growth per step: sublinear means well under 10x per step;
    // allow generous slack for machine noise.
    for w in graph_times.windows(2) {
        let ratio = w[1] / w[0];
        assert!(ratio < 4.0, "graph query time grew {ratio:.1}x over a 10x catalog step");
    }
    // The exact scan is linear: across 1e4 -> 1e6 it must grow far more
    // than the graph does.
    let exact_growth = exact_times[2] / exact_times[0];
    let graph_growth = graph_times[2] / graph_times[0];
    assert!(
        exact_growth > 20.0,
        "exact scan grew only {exact_growth:.1}x over a 100x catalog"
    );
    assert!(
        graph_growth < exact_growth / 4.0,
        "graph growth {graph_growth:.1}x not clearly sublinear vs exact {exact_growth:.1}x"
    );
}
