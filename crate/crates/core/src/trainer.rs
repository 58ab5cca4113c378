//! The end-to-end training loop, test-time evaluation and the benchmark
//! harness.
//!
//! One training step draws a minibatch of contexts, estimates a per-context
//! gradient with the configured method, averages the batch in a fixed order
//! and applies one optimizer update:
//!
//! - `exact` — full enumeration (no index use at all).
//! - `reinforce` — Monte-Carlo score-function baseline with Gumbel-max
//!   sampling over the whole catalog.
//! - `snis` — query the index for the top-K actions, build the mixture
//!   proposal, and run the self-normalized covariance estimator. The only
//!   catalog-size-dependent work left on this path is the index query.
//!
//! Everything is reproducible: batch order and the per-context sampling
//! streams derive from the run seed, and batch members fan out to worker
//! threads whose results are reduced in slot order.

use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use crate::data::EmbeddedDataset;
use crate::error::{Error, Result};
use crate::grad::{self, GradientEstimate};
use crate::mips::MipsIndex;
use crate::optim::{OptimizerKind, OptimizerState};
use crate::policy::{ActionId, ItemEmbeddings, PolicyParams};
use crate::proposal::build_proposal;
use crate::rng;

const STREAM_SHUFFLE: u64 = 0x5348;
const STREAM_CONTEXT: u64 = 0x4354;

/// ESS below this fraction of S counts as a degenerate-weights event.
pub const ESS_WARN_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    Reinforce,
    Snis,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Reinforce => "reinforce",
            Method::Snis => "snis",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Method::Exact),
            "reinforce" => Ok(Method::Reinforce),
            "snis" => Ok(Method::Snis),
            other => Err(Error::Config(format!(
                "unknown method {other:?}; expected exact, reinforce or snis"
            ))),
        }
    }
}

/// Full configuration of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub method: Method,
    /// Mixture parameter (snis only).
    pub epsilon: f64,
    /// Retrieved top-K size (snis only).
    pub top_k: usize,
    /// Monte-Carlo samples per context (reinforce and snis).
    pub samples: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Master seed for batch order and sampling streams.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            method: Method::Snis,
            epsilon: 0.8,
            top_k: 256,
            samples: 1000,
            batch_size: 32,
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-4,
            epochs: 1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        match self.method {
            Method::Exact => {}
            Method::Reinforce => {
                if self.samples == 0 {
                    return Err(Error::Config("reinforce needs samples >= 1".into()));
                }
            }
            Method::Snis => {
                if self.samples < 2 {
                    return Err(Error::Config("snis needs samples >= 2".into()));
                }
                if self.top_k == 0 {
                    return Err(Error::Config("snis needs top_k >= 1".into()));
                }
                if !(crate::proposal::MIN_EPSILON..=1.0).contains(&self.epsilon) {
                    return Err(Error::Config(format!(
                        "snis epsilon {} outside [{}, 1]",
                        self.epsilon,
                        crate::proposal::MIN_EPSILON
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Per-epoch record (or per-checkpoint in budget mode).
#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    /// Mean of the estimator's own reward estimate over the epoch's
    /// contexts.
    pub train_reward: f64,
    /// Hit rate of the index-served argmax on the held-out sets.
    pub test_reward: f64,
    /// Training wall time for this epoch; evaluation and index build
    /// excluded.
    pub wall_seconds: f64,
    /// Mean SNIS effective sample size; NaN for methods without weights.
    pub ess_mean: f64,
}

/// Everything a finished run reports.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub method: Method,
    pub epsilon: Option<f64>,
    pub top_k: Option<usize>,
    pub samples: Option<usize>,
    pub seed: u64,
    pub epochs: Vec<EpochReport>,
    pub total_wall_seconds: f64,
    /// Steps whose mean ESS dropped below [`ESS_WARN_FRACTION`]·S.
    pub ess_warnings: u64,
    /// Exact score evaluations outside the index (K rescores + S weight
    /// scores per context on the snis path; P per context on exact paths).
    pub score_evals: u64,
    /// Reward-estimator invocations.
    pub reward_evals: u64,
    /// O(P) full-catalog passes (enumeration or Gumbel scans); must stay 0
    /// on the snis path.
    pub full_catalog_passes: u64,
}

impl RunReport {
    /// Mean per-epoch training wall time.
    pub fn mean_epoch_seconds(&self) -> f64 {
        if self.epochs.is_empty() {
            return 0.0;
        }
        self.epochs.iter().map(|e| e.wall_seconds).sum::<f64>() / self.epochs.len() as f64
    }

    pub fn final_test_reward(&self) -> f64 {
        self.epochs.last().map(|e| e.test_reward).unwrap_or(0.0)
    }
}

/// Per-context reward plug-in used by the trainer.
pub trait RewardProvider: Sync {
    fn reward(&self, context_row: usize, action: ActionId) -> f64;
}

/// Binary session-completion reward against sorted per-row label lists.
pub struct IndicatorLabels<'a>(pub &'a [Vec<u32>]);

impl RewardProvider for IndicatorLabels<'_> {
    fn reward(&self, context_row: usize, action: ActionId) -> f64 {
        if self.0[context_row].binary_search(&action).is_ok() {
            1.0
        } else {
            0.0
        }
    }
}

/// The sampling stream a context at `(epoch, step, slot)` receives; exposed
/// so estimates made by the trainer can be replayed exactly.
pub fn context_stream(seed: u64, epoch: usize, step: usize, slot: usize) -> rand_chacha::ChaCha8Rng {
    rng::stream_rng(
        seed,
        &[STREAM_CONTEXT, epoch as u64, step as u64, slot as u64],
    )
}

/// The context visit order for one epoch; exposed for exact replays.
pub fn epoch_order(seed: u64, epoch: usize, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng::stream_rng(seed, &[STREAM_SHUFFLE, epoch as u64]);
    for i in (1..n).rev() {
        let j = rand::Rng::random_range(&mut rng, 0..=i);
        order.swap(i, j);
    }
    order
}

struct StepOutcome {
    grad_sum: ndarray::Array2<f64>,
    reward_sum: f64,
    ess_sum: f64,
    ess_count: u64,
    contexts: u64,
    score_evals: u64,
    reward_evals: u64,
    full_catalog_passes: u64,
    ess_warning: bool,
}

struct Engine<'a> {
    config: &'a TrainConfig,
    train: &'a EmbeddedDataset,
    beta: &'a ItemEmbeddings,
    index: &'a MipsIndex,
    rewards: &'a dyn RewardProvider,
    theta: PolicyParams,
    optimizer: OptimizerState,
    score_evals: u64,
    reward_evals: u64,
    full_catalog_passes: u64,
    ess_warnings: u64,
}

impl<'a> Engine<'a> {
    fn new(
        config: &'a TrainConfig,
        train: &'a EmbeddedDataset,
        beta: &'a ItemEmbeddings,
        index: &'a MipsIndex,
        rewards: &'a dyn RewardProvider,
    ) -> Result<Self> {
        config.validate()?;
        if train.is_empty() {
            return Err(Error::Config("training split is empty".into()));
        }
        if train.dim() != beta.dim() {
            return Err(Error::DimensionMismatch(format!(
                "contexts dim {} vs embeddings dim {}",
                train.dim(),
                beta.dim()
            )));
        }
        if index.n_items() != beta.n_items() || index.dim() != beta.dim() {
            return Err(Error::DimensionMismatch(format!(
                "index {}x{} vs embeddings {}x{}",
                index.n_items(),
                index.dim(),
                beta.n_items(),
                beta.dim()
            )));
        }
        let dim = beta.dim();
        Ok(Self {
            config,
            train,
            beta,
            index,
            rewards,
            theta: PolicyParams::zeros(dim),
            optimizer: OptimizerState::new(config.optimizer, config.learning_rate, dim)?,
            score_evals: 0,
            reward_evals: 0,
            full_catalog_passes: 0,
            ess_warnings: 0,
        })
    }

    fn shuffled_rows(&self, epoch: usize) -> Vec<usize> {
        epoch_order(self.config.seed, epoch, self.train.len())
    }

    fn context_gradient(
        &self,
        epoch: usize,
        step: usize,
        slot: usize,
        row: usize,
    ) -> Result<(GradientEstimate, u64)> {
        let x = self.train.context(row);
        let reward = |a: ActionId| self.rewards.reward(row, a);
        let mut stream = context_stream(self.config.seed, epoch, step, slot);
        match self.config.method {
            Method::Exact => {
                let est = grad::exact_gradient(&self.theta, &x, self.beta, reward)?;
                Ok((est, 0))
            }
            Method::Reinforce => {
                let est = grad::reinforce_mc_gradient(
                    &self.theta,
                    &x,
                    self.beta,
                    reward,
                    self.config.samples,
                    &mut stream,
                )?;
                Ok((est, 0))
            }
            Method::Snis => {
                let h = self.theta.user_embedding(&x)?;
                let topk = self
                    .index
                    .top_k(h.as_slice().expect("contiguous"), self.config.top_k)?;
                let rescored = topk.len() as u64;
                let q = build_proposal(&topk, self.config.epsilon, self.beta.n_items())?;
                let est = grad::snis_covariance_gradient(
                    &self.theta,
                    &x,
                    self.beta,
                    reward,
                    &q,
                    self.config.samples,
                    &mut stream,
                )?;
                Ok((est, rescored))
            }
        }
    }

    /// Run one minibatch: fan contexts out to workers, reduce in slot
    /// order, apply the optimizer.
    fn step(&mut self, epoch: usize, step: usize, rows: &[usize]) -> Result<StepOutcome> {
        let results: Vec<Result<(GradientEstimate, u64)>> = rows
            .par_iter()
            .enumerate()
            .map(|(slot, &row)| self.context_gradient(epoch, step, slot, row))
            .collect();

        let dim = self.beta.dim();
        let mut outcome = StepOutcome {
            grad_sum: ndarray::Array2::zeros((dim, dim)),
            reward_sum: 0.0,
            ess_sum: 0.0,
            ess_count: 0,
            contexts: rows.len() as u64,
            score_evals: 0,
            reward_evals: 0,
            full_catalog_passes: 0,
            ess_warning: false,
        };

        for (slot, result) in results.into_iter().enumerate() {
            let (est, rescored) = result.map_err(|e| {
                Error::NonFinite(format!(
                    "gradient failed at epoch {epoch} step {step} context {}: {e}",
                    rows[slot]
                ))
            })?;
            outcome.grad_sum += &est.grad;
            outcome.reward_sum += est.mean_reward;
            outcome.score_evals += est.score_evals as u64 + rescored;
            outcome.reward_evals += est.reward_evals as u64;
            match self.config.method {
                // One softmax/score pass, plus one Gumbel scan per sample.
                Method::Reinforce => {
                    outcome.full_catalog_passes += 1 + self.config.samples as u64
                }
                Method::Exact => outcome.full_catalog_passes += 1,
                Method::Snis => {}
            }
            if let Some(diag) = est.weight_diag {
                outcome.ess_sum += diag.ess;
                outcome.ess_count += 1;
                if diag.ess < ESS_WARN_FRACTION * est.samples as f64 {
                    outcome.ess_warning = true;
                }
            }
        }

        let mean_grad = &outcome.grad_sum / rows.len() as f64;
        self.optimizer
            .step(&mut self.theta, &mean_grad)
            .map_err(|e| {
                let ess = if outcome.ess_count > 0 {
                    outcome.ess_sum / outcome.ess_count as f64
                } else {
                    f64::NAN
                };
                Error::NonFinite(format!(
                    "optimizer rejected update at epoch {epoch} step {step} \
                     (first context {}, mean ESS {ess}): {e}",
                    rows.first().copied().unwrap_or(0)
                ))
            })?;

        self.score_evals += outcome.score_evals;
        self.reward_evals += outcome.reward_evals;
        self.full_catalog_passes += outcome.full_catalog_passes;
        if outcome.ess_warning {
            self.ess_warnings += 1;
        }
        Ok(outcome)
    }

    fn report(&self, epochs: Vec<EpochReport>) -> RunReport {
        let total_wall_seconds = epochs.iter().map(|e| e.wall_seconds).sum();
        RunReport {
            method: self.config.method,
            epsilon: match self.config.method {
                Method::Snis => Some(self.config.epsilon),
                _ => None,
            },
            top_k: match self.config.method {
                Method::Snis => Some(self.config.top_k),
                _ => None,
            },
            samples: match self.config.method {
                Method::Exact => None,
                _ => Some(self.config.samples),
            },
            seed: self.config.seed,
            epochs,
            total_wall_seconds,
            ess_warnings: self.ess_warnings,
            score_evals: self.score_evals,
            reward_evals: self.reward_evals,
            full_catalog_passes: self.full_catalog_passes,
        }
    }
}

/// Train a policy with the session-completion indicator reward.
pub fn train(
    config: &TrainConfig,
    train_ds: &EmbeddedDataset,
    test_ds: &EmbeddedDataset,
    beta: &ItemEmbeddings,
    index: &MipsIndex,
) -> Result<(PolicyParams, RunReport)> {
    train_with_rewards(
        config,
        train_ds,
        test_ds,
        beta,
        index,
        &IndicatorLabels(&train_ds.labels),
    )
}

/// Train with a caller-supplied reward plug-in.
pub fn train_with_rewards(
    config: &TrainConfig,
    train_ds: &EmbeddedDataset,
    test_ds: &EmbeddedDataset,
    beta: &ItemEmbeddings,
    index: &MipsIndex,
    rewards: &dyn RewardProvider,
) -> Result<(PolicyParams, RunReport)> {
    let mut engine = Engine::new(config, train_ds, beta, index, rewards)?;
    let mut epochs = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let order = engine.shuffled_rows(epoch);
        let started = Instant::now();
        let mut reward_sum = 0.0;
        let mut ess_sum = 0.0;
        let mut ess_count = 0u64;
        let mut contexts = 0u64;
        for (step, rows) in order.chunks(config.batch_size).enumerate() {
            let outcome = engine.step(epoch, step, rows)?;
            reward_sum += outcome.reward_sum;
            ess_sum += outcome.ess_sum;
            ess_count += outcome.ess_count;
            contexts += outcome.contexts;
        }
        let wall_seconds = started.elapsed().as_secs_f64();
        let test_reward = evaluate(&engine.theta, beta, index, test_ds)?;
        epochs.push(EpochReport {
            epoch,
            train_reward: reward_sum / contexts.max(1) as f64,
            test_reward,
            wall_seconds,
            ess_mean: if ess_count > 0 {
                ess_sum / ess_count as f64
            } else {
                f64::NAN
            },
        });
    }

    let report = engine.report(epochs);
    Ok((engine.theta, report))
}

/// Train under a wall-clock budget, evaluating at every 5% checkpoint.
/// Steps cycle through reshuffled epochs until time runs out.
pub fn train_with_budget(
    config: &TrainConfig,
    train_ds: &EmbeddedDataset,
    test_ds: &EmbeddedDataset,
    beta: &ItemEmbeddings,
    index: &MipsIndex,
    budget_seconds: f64,
) -> Result<(PolicyParams, RunReport)> {
    if !(budget_seconds > 0.0) {
        return Err(Error::Config("budget must be positive".into()));
    }
    let rewards = IndicatorLabels(&train_ds.labels);
    let mut engine = Engine::new(config, train_ds, beta, index, &rewards)?;
    let mut epochs = Vec::new();
    let checkpoint_every = budget_seconds / 20.0;
    let started = Instant::now();
    let mut trained = 0.0f64; // training-only wall time
    let mut next_checkpoint = checkpoint_every;
    let mut pass = 0usize;

    'outer: loop {
        let order = engine.shuffled_rows(pass);
        for (step, rows) in order.chunks(config.batch_size).enumerate() {
            let step_started = Instant::now();
            let mut reward_sum = 0.0;
            let outcome = engine.step(pass, step, rows)?;
            reward_sum += outcome.reward_sum / outcome.contexts.max(1) as f64;
            trained += step_started.elapsed().as_secs_f64();
            if trained >= next_checkpoint || trained >= budget_seconds {
                let test_reward = evaluate(&engine.theta, beta, index, test_ds)?;
                epochs.push(EpochReport {
                    epoch: epochs.len(),
                    train_reward: reward_sum,
                    test_reward,
                    wall_seconds: trained
                        - epochs
                            .iter()
                            .map(|e: &EpochReport| e.wall_seconds)
                            .sum::<f64>(),
                    ess_mean: if outcome.ess_count > 0 {
                        outcome.ess_sum / outcome.ess_count as f64
                    } else {
                        f64::NAN
                    },
                });
                next_checkpoint += checkpoint_every;
            }
            if trained >= budget_seconds {
                break 'outer;
            }
        }
        pass += 1;
    }
    let _ = started;

    let report = engine.report(epochs);
    Ok((engine.theta, report))
}

/// `R_test`: the fraction of held-out users whose top-1 index-served action
/// lands in their held-out set. The same index used in training serves
/// evaluation.
pub fn evaluate(
    theta: &PolicyParams,
    beta: &ItemEmbeddings,
    index: &MipsIndex,
    test: &EmbeddedDataset,
) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Config("evaluation split is empty".into()));
    }
    if index.n_items() != beta.n_items() || index.dim() != beta.dim() {
        return Err(Error::DimensionMismatch(
            "index does not match the embeddings".into(),
        ));
    }
    let hits: usize = (0..test.len())
        .into_par_iter()
        .map(|row| {
            let x = test.context(row);
            let h = theta.user_embedding(&x).expect("dims checked");
            let top = index
                .top_k(h.as_slice().expect("contiguous"), 1)
                .expect("dims checked");
            match top.top() {
                Some(a) if test.labels[row].binary_search(&a).is_ok() => 1,
                _ => 0,
            }
        })
        .sum();
    Ok(hits as f64 / test.len() as f64)
}

/// One named configuration inside a benchmark comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRun {
    pub name: String,
    pub config: TrainConfig,
}

/// Result of a benchmark sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub runs: Vec<(String, RunReport)>,
    /// Name of the run whose epoch time is the speedup denominator — the
    /// first `reinforce` run when present, otherwise the first run.
    pub baseline: String,
    /// `(name, baseline mean epoch time / run mean epoch time)`.
    pub speedups: Vec<(String, f64)>,
}

/// Run every configuration on the same data and report per-epoch times,
/// rewards and relative speedups.
pub fn benchmark(
    runs: &[BenchRun],
    train_ds: &EmbeddedDataset,
    test_ds: &EmbeddedDataset,
    beta: &ItemEmbeddings,
    index: &MipsIndex,
    budget_seconds: Option<f64>,
) -> Result<BenchReport> {
    if runs.len() < 2 {
        return Err(Error::Config(
            "benchmark needs at least two configurations".into(),
        ));
    }
    // Spin the worker pool up front so the first run does not pay for it.
    let _: u64 = (0..rayon::current_num_threads().max(1) as u64)
        .into_par_iter()
        .sum();
    let mut reports = Vec::with_capacity(runs.len());
    for run in runs {
        log::info!("benchmark: running {}", run.name);
        let (_, report) = match budget_seconds {
            Some(budget) => {
                train_with_budget(&run.config, train_ds, test_ds, beta, index, budget)?
            }
            None => train(&run.config, train_ds, test_ds, beta, index)?,
        };
        reports.push((run.name.clone(), report));
    }

    let baseline = reports
        .iter()
        .find(|(_, r)| r.method == Method::Reinforce)
        .map(|(n, _)| n.clone())
        .unwrap_or_else(|| reports[0].0.clone());
    let baseline_time = reports
        .iter()
        .find(|(n, _)| *n == baseline)
        .map(|(_, r)| r.mean_epoch_seconds())
        .unwrap_or(0.0);
    let speedups = reports
        .iter()
        .map(|(n, r)| {
            let t = r.mean_epoch_seconds();
            (n.clone(), if t > 0.0 { baseline_time / t } else { f64::NAN })
        })
        .collect();

    Ok(BenchReport {
        runs: reports,
        baseline,
        speedups,
    })
}

/// Fixed CSV schema shared by `train --report` and `bench --report`.
pub const REPORT_CSV_HEADER: &str =
    "epoch,method,epsilon,topk,samples,reward_test,wall_seconds,ess_mean";

fn csv_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Render one run as CSV rows under [`REPORT_CSV_HEADER`].
pub fn report_to_csv(report: &RunReport) -> String {
    let mut out = String::new();
    for epoch in &report.epochs {
        let ess = if epoch.ess_mean.is_nan() {
            String::new()
        } else {
            format!("{:.3}", epoch.ess_mean)
        };
        out.push_str(&format!(
            "{},{},{},{},{},{:.6},{:.6},{}\n",
            epoch.epoch,
            report.method.as_str(),
            csv_opt(report.epsilon),
            csv_opt(report.top_k),
            csv_opt(report.samples),
            epoch.test_reward,
            epoch.wall_seconds,
            ess,
        ));
    }
    out
}

/// Write a full benchmark comparison as one CSV file.
pub fn write_bench_csv(path: &std::path::Path, report: &BenchReport) -> Result<()> {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for (_, run) in &report.runs {
        out.push_str(&report_to_csv(run));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Versioned TOML benchmark specification.
///
/// ```toml
/// version = 1
/// data = "prepared/"
/// index = "index.bin"
/// seed = 7
/// epochs = 5
/// batch = 32
/// lr = 1e-4
/// optimizer = "adam"
/// # budget_seconds = 30.0   # optional: fixed-time mode
///
/// [[run]]
/// name = "baseline"
/// method = "reinforce"
/// samples = 1000
///
/// [[run]]
/// name = "snis-e0.8"
/// method = "snis"
/// epsilon = 0.8
/// topk = 256
/// samples = 1000
/// ```
///
/// Per-run keys override the globals; `data` and `index` tell the CLI what
/// to load.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct BenchSpec {
    pub version: u32,
    pub data: Option<String>,
    pub index: Option<String>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub batch: Option<usize>,
    pub lr: Option<f64>,
    pub optimizer: Option<String>,
    pub budget_seconds: Option<f64>,
    #[serde(default)]
    pub run: Vec<BenchSpecRun>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct BenchSpecRun {
    pub name: String,
    pub method: String,
    pub epsilon: Option<f64>,
    pub topk: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub batch: Option<usize>,
    pub lr: Option<f64>,
    pub optimizer: Option<String>,
}

fn parse_optimizer(name: &str) -> Result<OptimizerKind> {
    match name {
        "sgd" => Ok(OptimizerKind::Sgd),
        "adam" => Ok(OptimizerKind::Adam),
        other => Err(Error::Config(format!(
            "unknown optimizer {other:?}; expected sgd or adam"
        ))),
    }
}

impl BenchSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: BenchSpec = toml::from_str(text)
            .map_err(|e| Error::Format(format!("benchmark spec: {e}")))?;
        if spec.version != 1 {
            return Err(Error::Format(format!(
                "benchmark spec version {} unsupported (expected 1)",
                spec.version
            )));
        }
        if spec.run.len() < 2 {
            return Err(Error::Config(
                "benchmark spec needs at least two [[run]] entries".into(),
            ));
        }
        Ok(spec)
    }

    /// Materialize the runs, applying global defaults.
    pub fn runs(&self) -> Result<Vec<BenchRun>> {
        let defaults = TrainConfig::default();
        self.run
            .iter()
            .map(|entry| {
                let method: Method = entry.method.parse()?;
                let optimizer = match entry.optimizer.as_deref().or(self.optimizer.as_deref()) {
                    Some(name) => parse_optimizer(name)?,
                    None => defaults.optimizer,
                };
                let config = TrainConfig {
                    method,
                    epsilon: entry.epsilon.unwrap_or(defaults.epsilon),
                    top_k: entry.topk.unwrap_or(defaults.top_k),
                    samples: entry.samples.unwrap_or(defaults.samples),
                    batch_size: entry.batch.or(self.batch).unwrap_or(defaults.batch_size),
                    optimizer,
                    learning_rate: entry.lr.or(self.lr).unwrap_or(defaults.learning_rate),
                    epochs: entry.epochs.or(self.epochs).unwrap_or(defaults.epochs),
                    seed: entry.seed.or(self.seed).unwrap_or(defaults.seed),
                };
                config.validate()?;
                Ok(BenchRun {
                    name: entry.name.clone(),
                    config,
                })
            })
            .collect()
    }
}
