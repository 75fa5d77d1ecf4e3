//! End-to-end studies: the order-preservation simulation and the ERM noise
//! sweep, with RFC-4180 CSV outputs.
//!
//! Both runs are deterministic given their spec: cells and draws execute in
//! parallel on derived seeds and results are merged in a fixed order, so
//! repeated runs produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::data::{
    generate_synthetic, parse_letor, split, Dataset, LabelSet, NormalizeMode, Normalizer,
    SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::losses::{LossKind, LossMode};
use crate::metrics::{mean_metric, Metric, MetricValue, RankedQuery};
use crate::noise::{corrupt_dataset, NoiseSpec};
use crate::risk::{
    affinity_analysis, build_scorer_family, AffinityReport, Objective, ScorerFamilySpec,
};
use crate::seeding::{self, derive_seed};
use crate::training::{grid_search, AdamConfig, LinearScorer, TrainConfig, TrainObjective};

/// Turns an objective or metric name into a filename-friendly token.
fn file_token(name: &str) -> String {
    name.replace('@', "_at_")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

// ============================================================================
// Order-preservation simulation
// ============================================================================

/// Shape of the order-preservation simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderPreservationSpec {
    /// Losses and metrics to run, one output panel each.
    pub objectives: Vec<Objective>,
    pub gamma: f64,
    pub draws: usize,
    pub queries_per_draw: usize,
    /// Total scorers in the family (even; half get the ×`scale_factor`).
    pub family_size: usize,
    pub max_perturbation: f64,
    pub scale_factor: f64,
    pub pool_queries: usize,
    pub docs_per_query: usize,
    pub feature_dim: usize,
    pub prevalence_range: (f64, f64),
    pub seed: u64,
}

impl OrderPreservationSpec {
    /// The default study: 100 scorers over 1000 draws of 100 queries at
    /// flip rate `1−γ = 0.1`, with per-query prevalence spread over
    /// `[0.1, 0.9]`, for the five standard panels (AUC, NDCG@10, MAP, and
    /// the pointwise logistic and exponential losses).
    pub fn default_panels(seed: u64) -> Self {
        Self {
            objectives: vec![
                Objective::Metric(Metric::Auc),
                Objective::Metric(Metric::NdcgAt(10)),
                Objective::Metric(Metric::Map),
                Objective::loss(LossKind::Logistic, LossMode::Pointwise),
                Objective::loss(LossKind::Exponential, LossMode::Pointwise),
            ],
            gamma: 0.9,
            draws: 1000,
            queries_per_draw: 100,
            family_size: 100,
            max_perturbation: 2.0,
            scale_factor: 10.0,
            pool_queries: 250,
            docs_per_query: 10,
            feature_dim: 5,
            prevalence_range: (0.1, 0.9),
            seed,
        }
    }
}

/// Draws below this leave the fit without a usable standard error; the
/// summary marks such rows.
const LOW_CONFIDENCE_DRAWS: usize = 30;

/// Runs the affinity analysis for every configured objective, writing one
/// points file per objective plus a combined `summary.csv` (and, when
/// `plot_data` is set, one long-format file over all panels).
pub fn run_order_preservation_experiment(
    spec: &OrderPreservationSpec,
    out_dir: &Path,
    plot_data: bool,
) -> Result<Vec<(Objective, AffinityReport)>> {
    if spec.objectives.is_empty() {
        return Err(Error::invalid("no objectives configured"));
    }
    fs::create_dir_all(out_dir)?;

    let pool = generate_synthetic(&SyntheticSpec {
        num_queries: spec.pool_queries,
        docs_per_query: spec.docs_per_query,
        feature_dim: spec.feature_dim,
        seed: spec.seed,
        prevalence_range: Some(spec.prevalence_range),
        label_rule: crate::data::LabelRule::Sampled,
        theta_mode: crate::data::ThetaMode::PerQuery,
    })?;
    let family = build_scorer_family(
        &ScorerFamilySpec::evenly_spaced(
            spec.family_size,
            spec.max_perturbation,
            spec.scale_factor,
            spec.seed,
        )?,
        &pool,
    )?;

    let mut reports = Vec::with_capacity(spec.objectives.len());
    for objective in &spec.objectives {
        let report = affinity_analysis(
            &family,
            &pool,
            objective,
            spec.gamma,
            spec.draws,
            spec.queries_per_draw,
            spec.seed,
        )?;

        let mut w =
            csv::Writer::from_path(out_dir.join(format!("points_{}.csv", file_token(&objective.name()))))?;
        w.write_record(["scorer_id", "perturbation", "scale", "clean_risk", "noisy_risk"])?;
        for p in &report.points {
            w.write_record([
                p.scorer_id.to_string(),
                p.perturbation.to_string(),
                p.scale.to_string(),
                p.clean.to_string(),
                p.noisy.to_string(),
            ])?;
        }
        w.flush()?;

        reports.push((*objective, report));
    }

    let mut w = csv::Writer::from_path(out_dir.join("summary.csv"))?;
    w.write_record([
        "objective",
        "gamma",
        "draws",
        "slope",
        "intercept",
        "r_squared",
        "spearman_rho",
        "predicted_slope",
        "predicted_intercept",
        "slope_se",
        "intercept_se",
        "low_confidence",
    ])?;
    for (objective, r) in &reports {
        w.write_record([
            objective.name(),
            spec.gamma.to_string(),
            r.draws.to_string(),
            r.slope.to_string(),
            r.intercept.to_string(),
            r.r_squared.to_string(),
            r.spearman_rho.to_string(),
            r.predicted_slope.to_string(),
            fmt_opt(r.predicted_intercept),
            fmt_opt(r.slope_se),
            fmt_opt(r.intercept_se),
            (r.draws < LOW_CONFIDENCE_DRAWS).to_string(),
        ])?;
    }
    w.flush()?;

    if plot_data {
        let mut w = csv::Writer::from_path(out_dir.join("plot_order_preservation.csv"))?;
        w.write_record([
            "objective",
            "scorer_id",
            "perturbation",
            "scale",
            "clean_risk",
            "noisy_risk",
        ])?;
        for (objective, r) in &reports {
            for p in &r.points {
                w.write_record([
                    objective.name(),
                    p.scorer_id.to_string(),
                    p.perturbation.to_string(),
                    p.scale.to_string(),
                    p.clean.to_string(),
                    p.noisy.to_string(),
                ])?;
            }
        }
        w.flush()?;
    }

    Ok(reports)
}

// ============================================================================
// ERM noise sweep
// ============================================================================

/// Where the sweep's documents come from.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepData {
    /// Fresh synthetic data per sweep seed (the template's own seed field is
    /// re-derived).
    Synthetic(SyntheticSpec),
    /// A LETOR file, binarized and optionally normalized with statistics fit
    /// on each seed's training split.
    Letor {
        path: PathBuf,
        binarize_threshold: u8,
        normalize: Option<NormalizeMode>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Noise levels; all must exceed 1/2.
    pub gammas: Vec<f64>,
    pub losses: Vec<TrainObjective>,
    pub metrics: Vec<Metric>,
    pub seeds: Vec<u64>,
    pub data: SweepData,
    pub lr_grid: Vec<f64>,
    pub wd_grid: Vec<f64>,
    /// Fraction of queries held out (with clean labels) for evaluation.
    pub test_frac: f64,
    /// Fraction of the remaining queries used as the noisy early-stopping
    /// holdout.
    pub holdout_frac: f64,
    pub max_epochs: usize,
}

impl SweepSpec {
    /// The standard sweep: γ over `[1, 0.9, 0.8, 0.7, 0.6, 0.51]`, the four
    /// losses (logistic, ranknet, and their symmetrized analogs), NDCG@10 /
    /// MAP / AUC on clean test data, five seeds, and the full
    /// learning-rate × weight-decay grid.
    pub fn desk_default(data: SweepData) -> Self {
        Self {
            gammas: vec![1.0, 0.9, 0.8, 0.7, 0.6, 0.51],
            losses: vec![
                TrainObjective::new(LossKind::Logistic, LossMode::Pointwise),
                TrainObjective::new(LossKind::Logistic, LossMode::Pairwise),
                TrainObjective::new(LossKind::SymmetrizedLogistic, LossMode::Pointwise),
                TrainObjective::new(LossKind::SymmetrizedLogistic, LossMode::Pairwise),
            ],
            metrics: vec![Metric::NdcgAt(10), Metric::Map, Metric::Auc],
            seeds: vec![0, 1, 2, 3, 4],
            data,
            lr_grid: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5],
            wd_grid: vec![1e-5, 1e-4, 1e-3],
            test_frac: 0.2,
            holdout_frac: 0.2,
            max_epochs: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub loss: String,
    pub seed: u64,
    pub metric: String,
    /// Clean-test metric value; absent when every grid cell failed.
    pub value: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Values for one (loss, metric) pair at one γ, across seeds.
    pub fn values_for(&self, gamma: f64, loss: &str, metric: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.gamma == gamma && r.loss == loss && r.metric == metric)
            .filter_map(|r| r.value)
            .collect()
    }
}

/// Score every document with the model and average the metrics over queries
/// (clean labels).
pub fn evaluate_model(
    model: &LinearScorer,
    ds: &Dataset,
    metrics: &[Metric],
) -> Result<Vec<(Metric, MetricValue)>> {
    let queries: Vec<RankedQuery> = ds
        .queries
        .iter()
        .map(|g| {
            let scores = g
                .documents
                .iter()
                .map(|d| model.score(&d.features))
                .collect::<Result<Vec<_>>>()?;
            RankedQuery::new(g.query_id.clone(), scores, g.labels(LabelSet::Clean)?)
        })
        .collect::<Result<_>>()?;
    metrics
        .iter()
        .map(|&m| Ok((m, mean_metric(&queries, m)?)))
        .collect()
}

struct SeedData {
    train: Dataset,
    holdout: Dataset,
    test: Dataset,
}

fn prepare_seed_data(spec: &SweepSpec, sweep_seed: u64, letor_base: Option<&Dataset>) -> Result<SeedData> {
    let base = match (&spec.data, letor_base) {
        (SweepData::Synthetic(template), _) => generate_synthetic(&SyntheticSpec {
            seed: derive_seed(sweep_seed, &[seeding::DOMAIN_SWEEP, 0]),
            ..template.clone()
        })?,
        (SweepData::Letor { .. }, Some(ds)) => ds.clone(),
        (SweepData::Letor { .. }, None) => unreachable!("letor data parsed upfront"),
    };
    let (rest, test) = split(
        &base,
        1.0 - spec.test_frac,
        derive_seed(sweep_seed, &[seeding::DOMAIN_SWEEP, 1]),
    )?;
    let (train, holdout) = split(
        &rest,
        1.0 - spec.holdout_frac,
        derive_seed(sweep_seed, &[seeding::DOMAIN_SWEEP, 2]),
    )?;

    // LETOR features are normalized with statistics fit on the training
    // split only; synthetic features are already standardized by design.
    if let SweepData::Letor {
        normalize: Some(mode),
        ..
    } = &spec.data
    {
        let normalizer = Normalizer::fit(&train, *mode);
        return Ok(SeedData {
            train: normalizer.apply(&train),
            holdout: normalizer.apply(&holdout),
            test: normalizer.apply(&test),
        });
    }
    Ok(SeedData {
        train,
        holdout,
        test,
    })
}

fn validate_sweep(spec: &SweepSpec) -> Result<()> {
    if spec.gammas.is_empty() || spec.losses.is_empty() || spec.seeds.is_empty() || spec.metrics.is_empty() {
        return Err(Error::invalid(
            "gammas, losses, metrics, and seeds must all be nonempty",
        ));
    }
    if let Some(g) = spec.gammas.iter().find(|g| !(**g > 0.5 && **g <= 1.0)) {
        return Err(Error::invalid(format!(
            "gamma must lie in (0.5, 1]; got {g} (below 1/2 no loss has an ordering guarantee)"
        )));
    }
    for frac in [spec.test_frac, spec.holdout_frac] {
        if !(frac > 0.0 && frac < 1.0) {
            return Err(Error::invalid(format!("split fraction {frac} out of (0, 1)")));
        }
    }
    Ok(())
}

/// Runs the full sweep: for every (γ, loss, seed), corrupt the training and
/// holdout labels, grid-search a linear model on the noisy data, and score
/// the clean test split with every metric. Writes `sweep.csv` (and
/// per-metric plot files when `plot_data` is set).
pub fn run_erm_sweep(spec: &SweepSpec, out_dir: &Path, plot_data: bool) -> Result<SweepResult> {
    validate_sweep(spec)?;
    fs::create_dir_all(out_dir)?;

    let letor_base = match &spec.data {
        SweepData::Letor {
            path,
            binarize_threshold,
            ..
        } => Some(crate::data::binarize(&parse_letor(path)?, *binarize_threshold)),
        SweepData::Synthetic(_) => None,
    };

    let seed_data: Vec<SeedData> = spec
        .seeds
        .iter()
        .map(|&s| prepare_seed_data(spec, s, letor_base.as_ref()))
        .collect::<Result<_>>()?;

    // One cell per (gamma, loss, seed); cells are independent and run in
    // parallel, then rows are merged in a fixed order.
    let mut cells = Vec::new();
    for (gi, &gamma) in spec.gammas.iter().enumerate() {
        for &loss in &spec.losses {
            for (si, &seed) in spec.seeds.iter().enumerate() {
                cells.push((gi, gamma, loss, si, seed));
            }
        }
    }

    let cell_rows: Vec<Result<Vec<SweepRow>>> = cells
        .par_iter()
        .map(|&(gi, gamma, loss, si, seed)| {
            let data = &seed_data[si];
            let loss_name = Objective::loss(loss.kind, loss.mode).name();

            let noise = NoiseSpec::new(gamma, derive_seed(seed, &[seeding::DOMAIN_SWEEP, 3, gi as u64]))?;
            let noisy_train = corrupt_dataset(&data.train, &noise)?.adopt_noisy_labels()?;
            let noisy_holdout = corrupt_dataset(&data.holdout, &noise)?.adopt_noisy_labels()?;

            let config = TrainConfig {
                max_epochs: spec.max_epochs,
                seed: derive_seed(seed, &[seeding::DOMAIN_SWEEP, 4]),
                ..TrainConfig::new(loss)
            };
            let searched = grid_search(
                &noisy_train,
                &noisy_holdout,
                &config,
                &AdamConfig::default(),
                &spec.lr_grid,
                &spec.wd_grid,
            );

            let rows = match searched {
                Ok(outcome) => evaluate_model(&outcome.model, &data.test, &spec.metrics)?
                    .into_iter()
                    .map(|(m, mv)| SweepRow {
                        gamma,
                        loss: loss_name.clone(),
                        seed,
                        metric: m.name(),
                        value: Some(mv.value),
                        status: "ok".into(),
                    })
                    .collect(),
                Err(Error::GridExhausted { .. }) => spec
                    .metrics
                    .iter()
                    .map(|m| SweepRow {
                        gamma,
                        loss: loss_name.clone(),
                        seed,
                        metric: m.name(),
                        value: None,
                        status: "failed".into(),
                    })
                    .collect(),
                Err(other) => return Err(other),
            };
            Ok(rows)
        })
        .collect();

    let mut rows: Vec<SweepRow> = Vec::new();
    for r in cell_rows {
        rows.extend(r?);
    }
    rows.sort_by(|a, b| {
        a.gamma
            .partial_cmp(&b.gamma)
            .unwrap()
            .then_with(|| a.loss.cmp(&b.loss))
            .then_with(|| a.seed.cmp(&b.seed))
            .then_with(|| a.metric.cmp(&b.metric))
    });

    let mut w = csv::Writer::from_path(out_dir.join("sweep.csv"))?;
    w.write_record(["gamma", "loss", "seed", "metric", "value", "status"])?;
    for r in &rows {
        w.write_record([
            r.gamma.to_string(),
            r.loss.clone(),
            r.seed.to_string(),
            r.metric.clone(),
            fmt_opt(r.value),
            r.status.clone(),
        ])?;
    }
    w.flush()?;

    if plot_data {
        for metric in &spec.metrics {
            let mut w = csv::Writer::from_path(
                out_dir.join(format!("plot_{}.csv", file_token(&metric.name()))),
            )?;
            w.write_record(["gamma", "loss", "seed", "value"])?;
            for r in rows.iter().filter(|r| r.metric == metric.name() && r.value.is_some()) {
                w.write_record([
                    r.gamma.to_string(),
                    r.loss.clone(),
                    r.seed.to_string(),
                    r.value.unwrap().to_string(),
                ])?;
            }
            w.flush()?;
        }
    }

    Ok(SweepResult { rows })
}

/// Median of a sample; `None` when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}
