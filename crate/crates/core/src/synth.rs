//! Synthetic interaction data with planted cluster structure.
//!
//! Items and users are assigned round-robin to clusters; a user mostly
//! interacts with their own cluster's items under a mild popularity skew,
//! with a configurable fraction of uniform noise. After the session split,
//! a user's observed half is predictive of the held-out half, so a policy
//! that recovers the cluster geometry scores well on session completion.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_items: usize,
    pub n_clusters: usize,
    /// Distinct items drawn per user.
    pub interactions_per_user: usize,
    /// Probability of an interaction ignoring the user's cluster.
    pub noise: f64,
    /// Popularity decay within a cluster: weight ∝ (1 + rank)^(−skew).
    pub popularity_skew: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_users: 1000,
            n_items: 2000,
            n_clusters: 20,
            interactions_per_user: 24,
            noise: 0.15,
            popularity_skew: 0.7,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.n_clusters == 0 || self.n_items < self.n_clusters {
            return Err(Error::Config(
                "need at least one item per cluster".into(),
            ));
        }
        if self.interactions_per_user < 2 {
            return Err(Error::Config(
                "users need at least 2 interactions for a session split".into(),
            ));
        }
        if self.interactions_per_user > self.n_items {
            return Err(Error::Config(
                "cannot draw more distinct items than the catalog holds".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::Config("noise must be in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Items of one cluster in popularity order (round-robin assignment:
/// cluster c owns items c, c+C, c+2C, ...).
fn cluster_items(cluster: usize, config: &SynthConfig) -> Vec<u32> {
    (cluster..config.n_items)
        .step_by(config.n_clusters)
        .map(|i| i as u32)
        .collect()
}

fn popularity_cdf(len: usize, skew: f64) -> Vec<f64> {
    let mut cdf = Vec::with_capacity(len);
    let mut total = 0.0;
    for rank in 0..len {
        total += (1.0 + rank as f64).powf(-skew);
        cdf.push(total);
    }
    for v in &mut cdf {
        *v /= total;
    }
    cdf
}

/// Generate interactions as TSV rows (`user<TAB>item`) ready for
/// [`crate::data::ingest_interactions`].
pub fn generate_tsv(config: &SynthConfig) -> Result<String> {
    config.validate()?;
    let clusters: Vec<Vec<u32>> = (0..config.n_clusters)
        .map(|c| cluster_items(c, config))
        .collect();
    let cdfs: Vec<Vec<f64>> = clusters
        .iter()
        .map(|items| popularity_cdf(items.len(), config.popularity_skew))
        .collect();

    let mut out = String::with_capacity(config.n_users * config.interactions_per_user * 12);
    for user in 0..config.n_users {
        let cluster = user % config.n_clusters;
        let mut rng = crate::rng::stream_rng(config.seed, &[0x5359_4e54, user as u64]);
        let mut chosen: Vec<u32> = Vec::with_capacity(config.interactions_per_user);
        // Rejection loop over distinct items; bounded to keep pathological
        // configs from spinning.
        let mut attempts = 0usize;
        while chosen.len() < config.interactions_per_user {
            attempts += 1;
            if attempts > 200 * config.interactions_per_user {
                return Err(Error::Config(
                    "could not draw enough distinct items; catalog too small for the settings"
                        .into(),
                ));
            }
            let item = if rng.random::<f64>() < config.noise {
                rng.random_range(0..config.n_items) as u32
            } else {
                let u: f64 = rng.random();
                let pos = cdfs[cluster].partition_point(|&c| c < u);
                clusters[cluster][pos.min(clusters[cluster].len() - 1)]
            };
            if !chosen.contains(&item) {
                chosen.push(item);
            }
        }
        for item in chosen {
            out.push_str(&format!("{user}\t{item}\n"));
        }
    }
    Ok(out)
}
