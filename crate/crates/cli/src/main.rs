//! Command-line interface: dataset preparation, index building, training,
//! evaluation and benchmarking of softmax recommendation policies.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use polopt::data::{self, io as data_io, PrepareConfig};
use polopt::mips::{build_index, IndexVariant, MipsConfig, MipsIndex};
use polopt::optim::OptimizerKind;
use polopt::synth::{generate_tsv, SynthConfig};
use polopt::trainer::{self, BenchSpec, Method, TrainConfig, REPORT_CSV_HEADER};

#[derive(Parser)]
#[command(
    name = "polopt",
    about = "Offline policy optimization for softmax recommendation policies over large catalogs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Graph,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Reinforce,
    Snis,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Exact => Method::Exact,
            MethodArg::Reinforce => Method::Reinforce,
            MethodArg::Snis => Method::Snis,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OptimizerArg {
    Sgd,
    Adam,
}

impl From<OptimizerArg> for OptimizerKind {
    fn from(o: OptimizerArg) -> Self {
        match o {
            OptimizerArg::Sgd => OptimizerKind::Sgd,
            OptimizerArg::Adam => OptimizerKind::Adam,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Prepare a dataset: ingest, session split, SVD embeddings, contexts.
    Prepare {
        /// Tab-separated interactions, one `user<TAB>item` per row.
        #[arg(long)]
        input: PathBuf,
        /// Output directory for the prepared dataset.
        #[arg(long)]
        out: PathBuf,
        /// Embedding dimension L.
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        seed: u64,
        /// Drop users with fewer distinct items than this.
        #[arg(long, default_value_t = 2)]
        min_interactions: usize,
        /// Fraction of users held out for evaluation.
        #[arg(long, default_value_t = 0.2)]
        test_frac: f64,
    },
    /// Build a MIPS index over a prepared dataset's embeddings.
    Index {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Max graph neighbors per node.
        #[arg(long, default_value_t = 16)]
        m: usize,
        /// Build-time beam width.
        #[arg(long, default_value_t = 200)]
        ef_construction: usize,
        /// Query-time beam width.
        #[arg(long, default_value_t = 128)]
        ef_search: usize,
        #[arg(long, value_enum, default_value_t = VariantArg::Graph)]
        variant: VariantArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train a policy on a prepared dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Mixture parameter for the snis method.
        #[arg(long, default_value_t = 0.8)]
        epsilon: f64,
        /// Retrieved top-K size for the snis method.
        #[arg(long, default_value_t = 256)]
        topk: usize,
        /// Monte-Carlo samples per context.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 32)]
        batch: usize,
        #[arg(long, default_value_t = 1e-4)]
        lr: f64,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long)]
        seed: u64,
        /// Per-epoch CSV report destination.
        #[arg(long)]
        report: PathBuf,
        #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
        optimizer: OptimizerArg,
        /// Where to store the trained policy matrix.
        #[arg(long)]
        params_out: Option<PathBuf>,
    },
    /// Evaluate stored policy parameters on the test split.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        params: PathBuf,
    },
    /// Run a benchmark spec comparing several configurations.
    Bench {
        /// TOML benchmark specification.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Fixed-time mode: train each config for this long, evaluating at
        /// 5% checkpoints (overrides the spec's value).
        #[arg(long)]
        budget_seconds: Option<f64>,
    },
    /// Generate planted synthetic interactions.
    Synth {
        #[arg(long)]
        users: usize,
        #[arg(long)]
        items: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        clusters: usize,
        #[arg(long, default_value_t = 24)]
        interactions: usize,
        #[arg(long, default_value_t = 0.15)]
        noise: f64,
        #[arg(long, default_value_t = 0.7)]
        skew: f64,
        #[arg(long)]
        seed: u64,
    },
}

fn load_data(dir: &PathBuf) -> Result<data::PreparedDataset> {
    data_io::load_prepared(dir)
        .with_context(|| format!("loading prepared dataset from {}", dir.display()))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();

    match cli.command {
        Command::Prepare {
            input,
            out,
            dim,
            seed,
            min_interactions,
            test_frac,
        } => {
            let reader = BufReader::new(
                File::open(&input).with_context(|| format!("opening {}", input.display()))?,
            );
            let ds = data::ingest_interactions(reader, min_interactions)?;
            println!(
                "ingested {} users, {} items, {} interactions ({} users dropped)",
                ds.n_users(),
                ds.n_items(),
                ds.n_interactions(),
                ds.dropped_users()
            );
            let prepared = data::prepare(
                &ds,
                &PrepareConfig {
                    dim,
                    seed,
                    min_interactions,
                    test_fraction: test_frac,
                },
            )?;
            data_io::save_prepared(&out, &prepared, &ds)?;
            println!(
                "prepared dataset written to {} ({} train / {} test users, L={})",
                out.display(),
                prepared.meta.n_train,
                prepared.meta.n_test,
                dim
            );
        }

        Command::Index {
            data,
            out,
            m,
            ef_construction,
            ef_search,
            variant,
            seed,
        } => {
            let prepared = load_data(&data)?;
            let config = MipsConfig {
                m,
                ef_construction,
                ef_search,
                seed,
            };
            let variant = match variant {
                VariantArg::Graph => IndexVariant::Graph,
                VariantArg::Exact => IndexVariant::Exact,
            };
            let started = std::time::Instant::now();
            let index = build_index(&prepared.beta, variant, &config)?;
            index.save(&out)?;
            println!(
                "index over {} items (dim {}) built in {:.2}s -> {}",
                index.n_items(),
                index.dim(),
                started.elapsed().as_secs_f64(),
                out.display()
            );
        }

        Command::Train {
            data,
            index,
            method,
            epsilon,
            topk,
            samples,
            batch,
            lr,
            epochs,
            seed,
            report,
            optimizer,
            params_out,
        } => {
            let prepared = load_data(&data)?;
            let index = MipsIndex::load(&index)?;
            let config = TrainConfig {
                method: method.into(),
                epsilon,
                top_k: topk,
                samples,
                batch_size: batch,
                optimizer: optimizer.into(),
                learning_rate: lr,
                epochs,
                seed,
            };
            let (params, run) = trainer::train(
                &config,
                &prepared.train,
                &prepared.test,
                &prepared.beta,
                &index,
            )?;
            let mut csv = String::from(REPORT_CSV_HEADER);
            csv.push('\n');
            csv.push_str(&trainer::report_to_csv(&run));
            std::fs::write(&report, csv)?;
            if let Some(path) = params_out {
                data_io::write_params(&path, &params)?;
                println!("policy parameters written to {}", path.display());
            }
            println!(
                "method={} seed={} data_seed={} epochs={} final R_test={:.4} total {:.2}s (ess warnings: {})",
                run.method.as_str(),
                run.seed,
                prepared.meta.seed,
                run.epochs.len(),
                run.final_test_reward(),
                run.total_wall_seconds,
                run.ess_warnings
            );
        }

        Command::Eval {
            data,
            index,
            params,
        } => {
            let prepared = load_data(&data)?;
            let index = MipsIndex::load(&index)?;
            let params = data_io::read_params(&params)?;
            let r_test = trainer::evaluate(&params, &prepared.beta, &index, &prepared.test)?;
            println!("R_test = {r_test:.6} over {} test users", prepared.test.len());
        }

        Command::Bench {
            spec,
            report,
            budget_seconds,
        } => {
            let text = std::fs::read_to_string(&spec)
                .with_context(|| format!("reading {}", spec.display()))?;
            let parsed = BenchSpec::parse(&text)?;
            let data_dir = parsed
                .data
                .clone()
                .map(PathBuf::from)
                .context("benchmark spec must set `data`")?;
            let index_path = parsed
                .index
                .clone()
                .map(PathBuf::from)
                .context("benchmark spec must set `index`")?;
            let prepared = load_data(&data_dir)?;
            let index = MipsIndex::load(&index_path)?;
            let runs = parsed.runs()?;
            let budget = budget_seconds.or(parsed.budget_seconds);
            let bench = trainer::benchmark(
                &runs,
                &prepared.train,
                &prepared.test,
                &prepared.beta,
                &index,
                budget,
            )?;
            trainer::write_bench_csv(&report, &bench)?;
            println!("baseline: {}", bench.baseline);
            for (name, speedup) in &bench.speedups {
                let run = &bench.runs.iter().find(|(n, _)| n == name).unwrap().1;
                println!(
                    "{name}: mean epoch {:.3}s, final R_test {:.4}, speedup x{:.2}",
                    run.mean_epoch_seconds(),
                    run.final_test_reward(),
                    speedup
                );
            }
            println!("report written to {}", report.display());
        }

        Command::Synth {
            users,
            items,
            out,
            clusters,
            interactions,
            noise,
            skew,
            seed,
        } => {
            if interactions < 2 {
                bail!("users need at least 2 interactions");
            }
            let tsv = generate_tsv(&SynthConfig {
                n_users: users,
                n_items: items,
                n_clusters: clusters,
                interactions_per_user: interactions,
                noise,
                popularity_skew: skew,
                seed,
            })?;
            std::fs::write(&out, tsv)?;
            println!(
                "wrote {users} users x {interactions} interactions over {items} items to {}",
                out.display()
            );
        }
    }
    Ok(())
}
