//! Dataset ingestion and the preparation pipeline.
//!
//! The flow from a raw interaction file to a trainable dataset:
//!
//! 1. [`ingest_interactions`] — parse `user<TAB>item` rows, dedup, drop
//!    users below the minimum interaction count, remap everything to dense
//!    ids.
//! 2. [`session_split`] — per user, randomly partition the items into an
//!    observed half `X` and a held-out half `Y`.
//! 3. [`train_test_split`] — a user-level train/test assignment.
//! 4. [`compute_item_embeddings`] — rank-L randomized SVD of the binary
//!    user-item matrix built from the *train users' X halves only*; the
//!    item factors, scaled by the singular values, become the frozen `β`.
//! 5. [`mean_embedding_contexts`] — each user's context is the mean of the
//!    `β` rows of their observed items.
//!
//! Test users and every `Y` half stay out of step 4, so the embeddings and
//! any index built over them carry no information about what evaluation
//! will ask. `meta.json` records fingerprints to make that auditable.

pub mod io;
pub mod svd;

use std::collections::HashMap;
use std::io::BufRead;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::ItemEmbeddings;
pub use svd::{randomized_svd, CsrBinaryMatrix, TruncatedSvd};

/// Oversampling used by the pipeline's randomized SVD.
pub const SVD_OVERSAMPLE: usize = 10;
/// Power iterations used by the pipeline's randomized SVD.
pub const SVD_POWER_ITERS: usize = 2;

/// Deduplicated interactions with dense user and item ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionDataset {
    /// Items per user, dense ids, each list sorted and duplicate-free.
    items_by_user: Vec<Vec<u32>>,
    n_items: usize,
    /// Dense id → raw id maps.
    user_ids: Vec<String>,
    item_ids: Vec<String>,
    /// Users removed by the minimum-interactions filter.
    dropped_users: usize,
}

impl InteractionDataset {
    pub fn n_users(&self) -> usize {
        self.items_by_user.len()
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_interactions(&self) -> usize {
        self.items_by_user.iter().map(|v| v.len()).sum()
    }

    pub fn items_of(&self, user: usize) -> &[u32] {
        &self.items_by_user[user]
    }

    pub fn dropped_users(&self) -> usize {
        self.dropped_users
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }
}

fn looks_numeric(field: &str) -> bool {
    !field.is_empty() && field.parse::<f64>().is_ok()
}

/// Parse tab-separated `user_id<TAB>item_id` rows.
///
/// A non-numeric first row is treated as a header and skipped. Duplicate
/// pairs are removed, users with fewer than `min_interactions` distinct
/// items are dropped (the count is retained on the result), and the
/// surviving raw ids are remapped to dense ids in order of first
/// appearance.
pub fn ingest_interactions(
    source: impl BufRead,
    min_interactions: usize,
) -> Result<InteractionDataset> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    let mut seen: std::collections::HashSet<(String, String)> = std::collections::HashSet::new();

    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (user, item) = match (fields.next(), fields.next(), fields.next()) {
            (Some(u), Some(i), None) => (u.trim().to_string(), i.trim().to_string()),
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected exactly two tab-separated fields, got {line:?}"),
                })
            }
        };
        if user.is_empty() || item.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                msg: "empty user or item id".into(),
            });
        }
        if line_no == 1 && !(looks_numeric(&user) && looks_numeric(&item)) {
            // Header row.
            continue;
        }
        let key = (user, item);
        if seen.insert(key.clone()) {
            pairs.push(key);
        }
    }

    if pairs.is_empty() {
        return Err(Error::Config("no interactions after parsing".into()));
    }

    // Count distinct items per raw user to apply the minimum filter.
    let mut per_user: HashMap<&str, usize> = HashMap::new();
    for (user, _) in &pairs {
        *per_user.entry(user.as_str()).or_insert(0) += 1;
    }
    let dropped_users = per_user
        .values()
        .filter(|&&count| count < min_interactions)
        .count();

    let mut user_index: HashMap<String, u32> = HashMap::new();
    let mut item_index: HashMap<String, u32> = HashMap::new();
    let mut user_ids = Vec::new();
    let mut item_ids = Vec::new();
    let mut items_by_user: Vec<Vec<u32>> = Vec::new();

    for (user, item) in &pairs {
        if per_user[user.as_str()] < min_interactions {
            continue;
        }
        let uid = *user_index.entry(user.clone()).or_insert_with(|| {
            user_ids.push(user.clone());
            items_by_user.push(Vec::new());
            (user_ids.len() - 1) as u32
        });
        let iid = *item_index.entry(item.clone()).or_insert_with(|| {
            item_ids.push(item.clone());
            (item_ids.len() - 1) as u32
        });
        items_by_user[uid as usize].push(iid);
    }

    if items_by_user.is_empty() {
        return Err(Error::Config(format!(
            "no users left after dropping those with fewer than {min_interactions} interactions"
        )));
    }
    for items in &mut items_by_user {
        items.sort_unstable();
    }

    Ok(InteractionDataset {
        items_by_user,
        n_items: item_ids.len(),
        user_ids,
        item_ids,
        dropped_users,
    })
}

/// One user's session partition: observed items `X` and held-out items `Y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionUser {
    pub observed: Vec<u32>,
    pub held_out: Vec<u32>,
}

/// Per-user session partitions over the whole dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionSplit {
    pub users: Vec<SessionUser>,
    pub n_items: usize,
    pub seed: u64,
}

/// Partition every user's items uniformly at random into `X` and `Y`, with
/// `|X| = ⌈n/2⌉` (the observed half gets the extra item when n is odd).
pub fn session_split(ds: &InteractionDataset, seed: u64) -> Result<SessionSplit> {
    let mut users = Vec::with_capacity(ds.n_users());
    for (u, items) in ds.items_by_user.iter().enumerate() {
        if items.len() < 2 {
            return Err(Error::Config(format!(
                "user {u} has {} items; the session split needs at least 2",
                items.len()
            )));
        }
        let mut shuffled = items.clone();
        let mut rng = crate::rng::stream_rng(seed, &[0x533551, u as u64]);
        // Fisher-Yates, driven by the per-user stream.
        for i in (1..shuffled.len()).rev() {
            let j = rand::Rng::random_range(&mut rng, 0..=i);
            shuffled.swap(i, j);
        }
        let observed_len = shuffled.len().div_ceil(2);
        let mut observed = shuffled[..observed_len].to_vec();
        let mut held_out = shuffled[observed_len..].to_vec();
        observed.sort_unstable();
        held_out.sort_unstable();
        users.push(SessionUser { observed, held_out });
    }
    Ok(SessionSplit {
        users,
        n_items: ds.n_items(),
        seed,
    })
}

/// User-level train/test assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainTestSplit {
    pub train_users: Vec<usize>,
    pub test_users: Vec<usize>,
}

/// Assign each user entirely to train or test; `test_fraction` of users
/// (rounded, at least one on each side) go to test.
pub fn train_test_split(
    split: &SessionSplit,
    test_fraction: f64,
    seed: u64,
) -> Result<TrainTestSplit> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let n = split.users.len();
    if n < 2 {
        return Err(Error::Config("need at least 2 users to split".into()));
    }
    let n_test = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = crate::rng::stream_rng(seed, &[0x7E57]);
    for i in (1..n).rev() {
        let j = rand::Rng::random_range(&mut rng, 0..=i);
        order.swap(i, j);
    }
    let mut test_users: Vec<usize> = order[..n_test].to_vec();
    let mut train_users: Vec<usize> = order[n_test..].to_vec();
    train_users.sort_unstable();
    test_users.sort_unstable();
    Ok(TrainTestSplit {
        train_users,
        test_users,
    })
}

/// The binary user-item matrix of the train users' observed halves.
pub fn train_interaction_matrix(
    split: &SessionSplit,
    train_users: &[usize],
) -> Result<CsrBinaryMatrix> {
    let rows: Vec<Vec<u32>> = train_users
        .iter()
        .map(|&u| split.users[u].observed.clone())
        .collect();
    CsrBinaryMatrix::from_rows(&rows, split.n_items)
}

/// Frozen item embeddings `β = V·diag(σ)` from the rank-`dim` randomized
/// SVD of the train interaction matrix.
///
/// Scaling `V` by the singular values keeps the inner-product geometry of
/// the interaction matrix's row space, which is what the bilinear scorer
/// consumes.
pub fn compute_item_embeddings(
    split: &SessionSplit,
    train_users: &[usize],
    dim: usize,
    seed: u64,
) -> Result<ItemEmbeddings> {
    if train_users.is_empty() {
        return Err(Error::Config("no train users".into()));
    }
    let matrix = train_interaction_matrix(split, train_users)?;
    if dim > matrix.n_rows().min(matrix.n_cols()) {
        return Err(Error::Config(format!(
            "embedding dim {dim} exceeds min(train users, items) = {}",
            matrix.n_rows().min(matrix.n_cols())
        )));
    }
    let svd = randomized_svd(&matrix, dim, SVD_OVERSAMPLE, SVD_POWER_ITERS, seed)?;
    let p = split.n_items;
    let beta = Array2::from_shape_fn((p, dim), |(item, j)| {
        svd.vt[[j, item]] * svd.singular_values[j]
    });
    ItemEmbeddings::new(beta)
}

/// Contexts and labels for one user group, ready for training or
/// evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedDataset {
    /// Row `i` is the mean embedding of user `users[i]`'s observed items.
    pub contexts: Array2<f64>,
    /// Held-out item sets, aligned with `contexts` rows.
    pub labels: Vec<Vec<u32>>,
    /// Dense user ids aligned with rows.
    pub users: Vec<usize>,
    /// Fingerprint of the `β` the contexts were derived from.
    pub beta_fingerprint: u64,
}

impl EmbeddedDataset {
    pub fn len(&self) -> usize {
        self.contexts.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.contexts.ncols()
    }

    pub fn context(&self, row: usize) -> crate::policy::ContextVector {
        crate::policy::ContextVector::new(self.contexts.row(row).to_owned())
            .expect("stored contexts are finite")
    }
}

/// Mean-embedding contexts: `x_i = (1/|X_i|) Σ_{a ∈ X_i} β_a`.
pub fn mean_embedding_contexts(
    split: &SessionSplit,
    users: &[usize],
    beta: &ItemEmbeddings,
) -> Result<EmbeddedDataset> {
    if beta.n_items() != split.n_items {
        return Err(Error::DimensionMismatch(format!(
            "embeddings cover {} items, split has {}",
            beta.n_items(),
            split.n_items
        )));
    }
    let l = beta.dim();
    let mut contexts = Array2::zeros((users.len(), l));
    let mut labels = Vec::with_capacity(users.len());
    for (row, &u) in users.iter().enumerate() {
        let session = &split.users[u];
        let mut acc = Array1::<f64>::zeros(l);
        for &item in &session.observed {
            acc += &beta.row(item)?;
        }
        acc /= session.observed.len() as f64;
        contexts.row_mut(row).assign(&acc);
        labels.push(session.held_out.clone());
    }
    Ok(EmbeddedDataset {
        contexts,
        labels,
        users: users.to_vec(),
        beta_fingerprint: io::fingerprint_matrix(beta.matrix()),
    })
}

/// Pipeline configuration for [`prepare`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrepareConfig {
    /// Embedding dimension L.
    pub dim: usize,
    /// Master seed for the session split, the train/test assignment and
    /// the SVD sketch.
    pub seed: u64,
    pub min_interactions: usize,
    pub test_fraction: f64,
}

impl Default for PrepareConfig {
    fn default() -> Self {
        Self {
            dim: 32,
            seed: 0,
            min_interactions: 2,
            test_fraction: 0.2,
        }
    }
}

/// Summary and provenance of one prepared dataset, stored as `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub format_version: u32,
    pub n_items: usize,
    pub n_users: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub dim: usize,
    pub seed: u64,
    pub min_interactions: usize,
    pub test_fraction: f64,
    pub dropped_users: usize,
    /// Fingerprint of `β`; `β` is a function of the train users' observed
    /// halves only.
    pub beta_fingerprint: String,
    /// Fingerprint of the train interaction matrix that produced `β`.
    pub train_matrix_fingerprint: String,
}

/// A fully prepared dataset: frozen embeddings plus embedded train and
/// test splits.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDataset {
    pub meta: DatasetMeta,
    pub beta: ItemEmbeddings,
    pub train: EmbeddedDataset,
    pub test: EmbeddedDataset,
}

/// Run the full preparation pipeline on an ingested dataset.
pub fn prepare(ds: &InteractionDataset, config: &PrepareConfig) -> Result<PreparedDataset> {
    let split = session_split(ds, config.seed)?;
    let assignment = train_test_split(&split, config.test_fraction, config.seed)?;
    let beta = compute_item_embeddings(&split, &assignment.train_users, config.dim, config.seed)?;
    let train = mean_embedding_contexts(&split, &assignment.train_users, &beta)?;
    let test = mean_embedding_contexts(&split, &assignment.test_users, &beta)?;

    let train_matrix = train_interaction_matrix(&split, &assignment.train_users)?;
    let meta = DatasetMeta {
        format_version: io::PREPARED_FORMAT_VERSION,
        n_items: ds.n_items(),
        n_users: ds.n_users(),
        n_train: assignment.train_users.len(),
        n_test: assignment.test_users.len(),
        dim: config.dim,
        seed: config.seed,
        min_interactions: config.min_interactions,
        test_fraction: config.test_fraction,
        dropped_users: ds.dropped_users(),
        beta_fingerprint: format!("{:016x}", io::fingerprint_matrix(beta.matrix())),
        train_matrix_fingerprint: format!("{:016x}", io::fingerprint_csr(&train_matrix)),
    };

    Ok(PreparedDataset {
        meta,
        beta,
        train,
        test,
    })
}
