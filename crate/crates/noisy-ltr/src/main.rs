//! Thin command-line front end over the library.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use noisy_ltr::data::{
    binarize, generate_synthetic, parse_letor, split, write_letor, LabelRule, NormalizeMode,
    SyntheticSpec, ThetaMode,
};
use noisy_ltr::experiments::{
    evaluate_model, run_erm_sweep, run_order_preservation_experiment, OrderPreservationSpec,
    SweepData, SweepSpec,
};
use noisy_ltr::losses::{LossKind, LossMode};
use noisy_ltr::metrics::Metric;
use noisy_ltr::noise::{corrupt_dataset, NoiseSpec};
use noisy_ltr::risk::Objective;
use noisy_ltr::training::{grid_search, AdamConfig, LinearScorer, TrainConfig, TrainObjective};

#[derive(Parser)]
#[command(
    name = "noisy-ltr",
    version,
    about = "Learning-to-rank toolkit for class-conditional label noise"
)]
struct Cli {
    /// Base seed for every random stream.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Directory that receives output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SyntheticArgs {
    /// Number of queries.
    #[arg(long, default_value_t = 50)]
    queries: usize,
    /// Documents per query.
    #[arg(long, default_value_t = 10)]
    docs_per_query: usize,
    /// Feature dimension.
    #[arg(long, default_value_t = 5)]
    dim: usize,
    /// Spread per-query prevalence over `lo,hi` instead of leaving it free.
    #[arg(long, value_parser = parse_range)]
    prevalence: Option<(f64, f64)>,
    /// Deterministic labels (sign of the oracle logit) instead of sampled
    /// ones; with --shared-theta the data becomes linearly separable.
    #[arg(long)]
    thresholded_labels: bool,
    /// One weight vector for all queries instead of a fresh one per query.
    #[arg(long)]
    shared_theta: bool,
}

impl SyntheticArgs {
    fn spec(&self, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            num_queries: self.queries,
            docs_per_query: self.docs_per_query,
            feature_dim: self.dim,
            seed,
            prevalence_range: self.prevalence,
            label_rule: if self.thresholded_labels {
                LabelRule::Thresholded
            } else {
                LabelRule::Sampled
            },
            theta_mode: if self.shared_theta {
                ThetaMode::Shared
            } else {
                ThetaMode::PerQuery
            },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset in LETOR text format.
    GenSynthetic {
        #[command(flatten)]
        synthetic: SyntheticArgs,
        /// Output file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Flip labels class-conditionally and write the noisy copy.
    InjectNoise {
        /// Probability of keeping each label.
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Corrupt a dataset at γ, grid-search a linear model on the noisy
    /// labels, and save the best model plus its training history.
    Train {
        /// Loss kind: zero_one | hinge | l1 | logistic | exponential |
        /// symmetrized_logistic.
        #[arg(long)]
        loss: LossKind,
        /// pointwise | pairwise.
        #[arg(long, default_value = "pointwise")]
        mode: LossMode,
        #[arg(long)]
        gamma: f64,
        /// Comma-separated learning-rate grid.
        #[arg(long, value_delimiter = ',', default_value = "1e-1,1e-2,1e-3,1e-4,1e-5")]
        lr_grid: Vec<f64>,
        /// Comma-separated weight-decay grid.
        #[arg(long, value_delimiter = ',', default_value = "1e-5,1e-4,1e-3")]
        wd_grid: Vec<f64>,
        /// Input dataset (LETOR format).
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out_model: PathBuf,
        #[arg(long)]
        out_history: PathBuf,
        /// Relevance grade at or above which a label counts as relevant.
        #[arg(long, default_value_t = 1)]
        binarize_threshold: u8,
        #[arg(long, default_value_t = 2000)]
        max_epochs: usize,
        /// Fraction of queries used as the noisy early-stopping holdout.
        #[arg(long, default_value_t = 0.2)]
        holdout_frac: f64,
    },
    /// Score a dataset with a saved model and report ranking metrics.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated metrics (auc | map | dcg@K | ndcg@K).
        #[arg(long, value_delimiter = ',', default_value = "ndcg@10,map,auc")]
        metrics: Vec<Metric>,
        #[arg(long, default_value_t = 1)]
        binarize_threshold: u8,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare clean and noisy risks of a graded scorer family and fit the
    /// noisy-vs-clean line per loss/metric.
    SimulateOrderPreservation {
        /// Losses/metrics to simulate (repeatable). Defaults to the five
        /// standard panels: auc, ndcg@10, map, logistic, exponential.
        #[arg(long = "loss")]
        losses: Vec<Objective>,
        #[arg(long, default_value_t = 0.9)]
        gamma: f64,
        /// Family size (even; half the scorers are scaled ×10).
        #[arg(long, default_value_t = 100)]
        scorers: usize,
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        /// Queries sampled per draw.
        #[arg(long, default_value_t = 100)]
        queries: usize,
        /// Query pool to sample from.
        #[arg(long, default_value_t = 250)]
        pool_queries: usize,
        #[arg(long, default_value_t = 10)]
        docs_per_query: usize,
        #[arg(long, default_value_t = 5)]
        dim: usize,
        /// Also write a combined long-format plot file.
        #[arg(long)]
        plot_data: bool,
    },
    /// Train every loss at every noise level and evaluate on clean data.
    ErmSweep {
        /// Comma-separated γ values, each in (0.5, 1].
        #[arg(long, value_delimiter = ',', default_value = "1.0,0.9,0.8,0.7,0.6,0.51")]
        gammas: Vec<f64>,
        /// Comma-separated losses (logistic, ranknet, symmetrized_logistic,
        /// symmetrized_ranknet, pairwise_<loss>, ...).
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "logistic,ranknet,symmetrized_logistic,symmetrized_ranknet"
        )]
        losses: Vec<Objective>,
        /// Comma-separated evaluation metrics.
        #[arg(long, value_delimiter = ',', default_value = "ndcg@10,map,auc")]
        metrics: Vec<Metric>,
        /// Comma-separated sweep seeds.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
        seeds: Vec<u64>,
        /// LETOR dataset; omitted means synthetic data per seed.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        binarize_threshold: u8,
        /// Normalization for LETOR data: per-query-min-max |
        /// global-standardize.
        #[arg(long)]
        normalize: Option<NormalizeMode>,
        #[command(flatten)]
        synthetic: SyntheticArgs,
        #[arg(long, value_delimiter = ',', default_value = "1e-1,1e-2,1e-3,1e-4,1e-5")]
        lr_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1e-5,1e-4,1e-3")]
        wd_grid: Vec<f64>,
        #[arg(long, default_value_t = 2000)]
        max_epochs: usize,
        /// Also write per-metric long-format plot files.
        #[arg(long)]
        plot_data: bool,
    },
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected 'lo,hi', got '{s}'"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
    Ok((lo, hi))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    run(cli)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenSynthetic { synthetic, out } => {
            let ds = generate_synthetic(&synthetic.spec(cli.seed))?;
            write_letor(&ds, &out)?;
            println!(
                "wrote {} queries x {} docs (dim {}) to {}",
                ds.queries.len(),
                synthetic.docs_per_query,
                ds.feature_dim,
                out.display()
            );
        }

        Command::InjectNoise {
            gamma,
            input,
            output,
        } => {
            let ds = parse_letor(&input)?;
            let spec = NoiseSpec::new(gamma, cli.seed)?;
            let noisy = corrupt_dataset(&ds, &spec)?.adopt_noisy_labels()?;
            write_letor(&noisy, &output)?;
            let flips: usize = ds
                .queries
                .iter()
                .zip(&noisy.queries)
                .map(|(a, b)| {
                    a.documents
                        .iter()
                        .zip(&b.documents)
                        .filter(|(x, y)| x.label != y.label)
                        .count()
                })
                .sum();
            println!(
                "flipped {flips}/{} labels at gamma {gamma}; wrote {}",
                ds.total_docs(),
                output.display()
            );
        }

        Command::Train {
            loss,
            mode,
            gamma,
            lr_grid,
            wd_grid,
            data,
            out_model,
            out_history,
            binarize_threshold,
            max_epochs,
            holdout_frac,
        } => {
            let ds = binarize(&parse_letor(&data)?, binarize_threshold);
            let (train_ds, holdout) = split(&ds, 1.0 - holdout_frac, cli.seed)?;
            let noise = NoiseSpec::new(gamma, cli.seed)?;
            let noisy_train = corrupt_dataset(&train_ds, &noise)?.adopt_noisy_labels()?;
            let noisy_holdout = corrupt_dataset(&holdout, &noise)?.adopt_noisy_labels()?;

            let config = TrainConfig {
                max_epochs,
                seed: cli.seed,
                ..TrainConfig::new(TrainObjective::new(loss, mode))
            };
            let outcome = grid_search(
                &noisy_train,
                &noisy_holdout,
                &config,
                &AdamConfig::default(),
                &lr_grid,
                &wd_grid,
            )?;
            outcome.model.save(&out_model)?;

            let mut w = csv::Writer::from_path(&out_history)?;
            w.write_record(["epoch", "train_loss", "holdout_loss"])?;
            for e in &outcome.history {
                w.write_record([
                    e.epoch.to_string(),
                    e.train_loss.to_string(),
                    e.holdout_loss.to_string(),
                ])?;
            }
            w.flush()?;
            println!(
                "best cell lr={} wd={} holdout_loss={}; model -> {}, history -> {}",
                outcome.learning_rate,
                outcome.weight_decay,
                outcome.holdout_loss,
                out_model.display(),
                out_history.display()
            );
        }

        Command::Evaluate {
            model,
            data,
            metrics,
            binarize_threshold,
            out,
        } => {
            let model = LinearScorer::load(&model)?;
            let ds = binarize(&parse_letor(&data)?, binarize_threshold);
            let results = evaluate_model(&model, &ds, &metrics)?;
            let mut records = vec![vec![
                "metric".to_string(),
                "value".to_string(),
                "queries_used".to_string(),
                "queries_skipped".to_string(),
            ]];
            for (m, mv) in &results {
                records.push(vec![
                    m.name(),
                    mv.value.to_string(),
                    mv.queries_used.to_string(),
                    mv.queries_skipped.to_string(),
                ]);
            }
            match out {
                Some(path) => {
                    let mut w = csv::Writer::from_path(&path)?;
                    for r in &records {
                        w.write_record(r)?;
                    }
                    w.flush()?;
                    println!("wrote {}", path.display());
                }
                None => {
                    for r in &records {
                        println!("{}", r.join(","));
                    }
                }
            }
        }

        Command::SimulateOrderPreservation {
            losses,
            gamma,
            scorers,
            draws,
            queries,
            pool_queries,
            docs_per_query,
            dim,
            plot_data,
        } => {
            let mut spec = OrderPreservationSpec::default_panels(cli.seed);
            if !losses.is_empty() {
                spec.objectives = losses;
            }
            spec.gamma = gamma;
            spec.family_size = scorers;
            spec.draws = draws;
            spec.queries_per_draw = queries;
            spec.pool_queries = pool_queries;
            spec.docs_per_query = docs_per_query;
            spec.feature_dim = dim;

            let reports = run_order_preservation_experiment(&spec, &cli.out_dir, plot_data)?;
            println!(
                "{:<22} {:>9} {:>10} {:>6} {:>9}",
                "objective", "slope", "intercept", "r2", "spearman"
            );
            for (objective, r) in &reports {
                println!(
                    "{:<22} {:>9.4} {:>10.4} {:>6.3} {:>9.4}",
                    objective.name(),
                    r.slope,
                    r.intercept,
                    r.r_squared,
                    r.spearman_rho
                );
            }
            println!("files in {}", cli.out_dir.display());
        }

        Command::ErmSweep {
            gammas,
            losses,
            metrics,
            seeds,
            data,
            binarize_threshold,
            normalize,
            synthetic,
            lr_grid,
            wd_grid,
            max_epochs,
            plot_data,
        } => {
            let data = match data {
                Some(path) => SweepData::Letor {
                    path,
                    binarize_threshold,
                    normalize,
                },
                None => SweepData::Synthetic(synthetic.spec(cli.seed)),
            };
            let losses = losses
                .into_iter()
                .map(|o| match o {
                    Objective::Loss { kind, mode } => Ok(TrainObjective::new(kind, mode)),
                    Objective::Metric(m) => {
                        bail!("'{}' is a metric; sweep losses must be trainable losses", m)
                    }
                })
                .collect::<Result<Vec<_>>>()?;

            let spec = SweepSpec {
                gammas,
                losses,
                metrics,
                seeds,
                data,
                lr_grid,
                wd_grid,
                max_epochs,
                ..SweepSpec::desk_default(SweepData::Synthetic(SyntheticSpec::desk_default(0)))
            };
            let result = run_erm_sweep(&spec, &cli.out_dir, plot_data)?;
            let failed = result.rows.iter().filter(|r| r.status != "ok").count();
            println!(
                "{} rows ({} failed cells) -> {}",
                result.rows.len(),
                failed,
                cli.out_dir.join("sweep.csv").display()
            );
        }
    }
    Ok(())
}
