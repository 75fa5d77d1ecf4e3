//! Linear scoring models and empirical risk minimization.
//!
//! Training minimizes the empirical risk of a margin loss (pointwise over
//! documents, or pairwise over mixed-label pairs within each query) with the
//! Adam optimizer and decoupled weight decay, stopping early on a holdout
//! set. [`grid_search`] sweeps learning rate and weight decay and keeps the
//! model with the best holdout loss.
//!
//! Defaults follow the crate's reproducibility conventions: zero
//! initialization, full-batch gradients unless a query batch size is
//! configured, and seeded shuffles, so identical configs give bit-identical
//! histories.

use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::data::{Dataset, QueryGroup};
use crate::error::{Error, Result};
use crate::losses::{LossKind, LossMode};
use crate::seeding::{self, derive_rng};

/// `f(x) = ⟨w, x⟩ + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScorer {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearScorer {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::invalid(format!(
                "feature dimension {} does not match model dimension {}",
                x.len(),
                self.weights.len()
            )));
        }
        Ok(self.score_unchecked(x))
    }

    pub(crate) fn score_unchecked(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    /// Flat parameter vector, bias last.
    fn to_params(&self) -> Vec<f64> {
        let mut p = self.weights.clone();
        p.push(self.bias);
        p
    }

    fn from_params(params: &[f64]) -> Self {
        let (bias, weights) = params.split_last().expect("params nonempty");
        Self {
            weights: weights.to_vec(),
            bias: *bias,
        }
    }

    /// Plain-text model file: one weight per line, bias last.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for w in &self.weights {
            writeln!(f, "{w}")?;
        }
        writeln!(f, "{}", self.bias)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut values = Vec::new();
        for (i, line) in f.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let v: f64 = t.parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("bad parameter value '{t}'"),
            })?;
            values.push(v);
        }
        if values.is_empty() {
            return Err(Error::invalid("model file holds no parameters"));
        }
        Ok(Self::from_params(&values))
    }
}

/// Adam hyperparameters. `weight_decay` is decoupled: applied directly to
/// the parameters before the Adam delta, not folded into the gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// Optimizer state: bias-corrected first/second moment estimates.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step_count: u64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
}

impl AdamState {
    pub fn new(config: AdamConfig, dim: usize) -> Self {
        Self {
            config,
            step_count: 0,
            first_moment: vec![0.0; dim],
            second_moment: vec![0.0; dim],
        }
    }

    /// One Adam update in place. Decay first, then the bias-corrected step.
    pub fn step(&mut self, params: &mut [f64], gradient: &[f64]) -> Result<()> {
        if params.len() != self.first_moment.len() || gradient.len() != params.len() {
            return Err(Error::invalid(format!(
                "parameter/gradient dimension mismatch: {} vs {} (state {})",
                params.len(),
                gradient.len(),
                self.first_moment.len()
            )));
        }
        if gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::invalid("non-finite gradient"));
        }
        let c = self.config;
        self.step_count += 1;
        let t = self.step_count as i32;
        let m_corr = 1.0 - c.beta1.powi(t);
        let v_corr = 1.0 - c.beta2.powi(t);
        for i in 0..params.len() {
            params[i] *= 1.0 - c.learning_rate * c.weight_decay;
            let g = gradient[i];
            self.first_moment[i] = c.beta1 * self.first_moment[i] + (1.0 - c.beta1) * g;
            self.second_moment[i] = c.beta2 * self.second_moment[i] + (1.0 - c.beta2) * g * g;
            let m_hat = self.first_moment[i] / m_corr;
            let v_hat = self.second_moment[i] / v_corr;
            params[i] -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
        }
        Ok(())
    }
}

/// Loss kind plus application mode; the thing a model is trained against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrainObjective {
    pub kind: LossKind,
    pub mode: LossMode,
}

impl TrainObjective {
    pub fn new(kind: LossKind, mode: LossMode) -> Self {
        Self { kind, mode }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub objective: TrainObjective,
    pub max_epochs: usize,
    /// Consecutive epochs without a `min_delta` holdout improvement before
    /// stopping.
    pub patience: usize,
    pub min_delta: f64,
    /// Queries per mini-batch; `None` runs full-batch epochs.
    pub batch_queries: Option<usize>,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(objective: TrainObjective) -> Self {
        Self {
            objective,
            max_epochs: 2000,
            patience: 10,
            min_delta: 1e-5,
            batch_queries: None,
            seed: 0,
        }
    }
}

/// Empirical gradient of a batch, flat layout with the bias derivative last.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchGradient {
    pub gradient: Vec<f64>,
    /// Documents (pointwise) or mixed-label pairs (pairwise) contributing.
    /// Zero means the batch carried no signal and should be skipped.
    pub terms: usize,
}

/// Gradient of the batch empirical risk with respect to (weights, bias).
///
/// Pointwise averages over documents. Pairwise averages over mixed-label
/// pairs within each query, then over the queries that had at least one
/// such pair; a pairwise batch with no mixed pairs reports `terms = 0`.
pub fn empirical_gradient(
    model: &LinearScorer,
    batch: &[QueryGroup],
    objective: TrainObjective,
) -> Result<BatchGradient> {
    let dim = model.dim();
    let mut grad = vec![0.0; dim + 1];
    match objective.mode {
        LossMode::Pointwise => {
            let mut docs = 0usize;
            for group in batch {
                for doc in &group.documents {
                    let s = model.score(&doc.features)?;
                    let sign = f64::from(doc.label) * 2.0 - 1.0;
                    let d = objective.kind.derivative(s * sign)?;
                    for (g, x) in grad.iter_mut().zip(&doc.features) {
                        *g += d * sign * x;
                    }
                    grad[dim] += d * sign;
                    docs += 1;
                }
            }
            if docs > 0 {
                for g in &mut grad {
                    *g /= docs as f64;
                }
            }
            Ok(BatchGradient {
                gradient: grad,
                terms: docs,
            })
        }
        LossMode::Pairwise => {
            let mut queries_used = 0usize;
            let mut pairs_total = 0usize;
            for group in batch {
                let scores: Vec<f64> = group
                    .documents
                    .iter()
                    .map(|d| model.score(&d.features))
                    .collect::<Result<_>>()?;
                let mut qgrad = vec![0.0; dim];
                let mut pairs = 0usize;
                for i in 0..group.documents.len() {
                    for j in (i + 1)..group.documents.len() {
                        let (yi, yj) = (group.documents[i].label, group.documents[j].label);
                        if yi == yj {
                            continue;
                        }
                        let sign = if yi > yj { 1.0 } else { -1.0 };
                        let margin = (scores[i] - scores[j]) * sign;
                        let d = objective.kind.derivative(margin)?;
                        let (xi, xj) = (&group.documents[i].features, &group.documents[j].features);
                        for k in 0..dim {
                            qgrad[k] += d * sign * (xi[k] - xj[k]);
                        }
                        pairs += 1;
                    }
                }
                if pairs > 0 {
                    for (g, q) in grad.iter_mut().zip(&qgrad) {
                        *g += q / pairs as f64;
                    }
                    queries_used += 1;
                    pairs_total += pairs;
                }
            }
            if queries_used > 0 {
                for g in &mut grad {
                    *g /= queries_used as f64;
                }
            }
            // Score differences carry no bias term; grad[dim] stays 0.
            Ok(BatchGradient {
                gradient: grad,
                terms: pairs_total,
            })
        }
    }
}

/// Batch empirical risk under the same aggregation as [`empirical_gradient`].
pub fn empirical_objective(
    model: &LinearScorer,
    batch: &[QueryGroup],
    objective: TrainObjective,
) -> Result<f64> {
    match objective.mode {
        LossMode::Pointwise => {
            let mut sum = 0.0;
            let mut docs = 0usize;
            for group in batch {
                for doc in &group.documents {
                    let s = model.score(&doc.features)?;
                    let sign = f64::from(doc.label) * 2.0 - 1.0;
                    sum += objective.kind.eval(s * sign)?;
                    docs += 1;
                }
            }
            if docs == 0 {
                return Err(Error::Undefined("no documents in batch".into()));
            }
            Ok(sum / docs as f64)
        }
        LossMode::Pairwise => {
            let mut query_sum = 0.0;
            let mut queries_used = 0usize;
            for group in batch {
                let scores: Vec<f64> = group
                    .documents
                    .iter()
                    .map(|d| model.score(&d.features))
                    .collect::<Result<_>>()?;
                let mut sum = 0.0;
                let mut pairs = 0usize;
                for i in 0..group.documents.len() {
                    for j in (i + 1)..group.documents.len() {
                        let (yi, yj) = (group.documents[i].label, group.documents[j].label);
                        if yi == yj {
                            continue;
                        }
                        let sign = if yi > yj { 1.0 } else { -1.0 };
                        sum += objective.kind.eval((scores[i] - scores[j]) * sign)?;
                        pairs += 1;
                    }
                }
                if pairs > 0 {
                    query_sum += sum / pairs as f64;
                    queries_used += 1;
                }
            }
            if queries_used == 0 {
                return Err(Error::Undefined(
                    "pairwise risk undefined: no mixed-label pairs".into(),
                ));
            }
            Ok(query_sum / queries_used as f64)
        }
    }
}

/// One epoch's record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub holdout_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: LinearScorer,
    pub history: Vec<EpochStats>,
    /// Epoch whose parameters the returned model carries; `None` when no
    /// epoch ran.
    pub best_epoch: Option<usize>,
}

fn has_mixed_pair(ds: &Dataset) -> bool {
    ds.queries.iter().any(|g| {
        let first = g.documents[0].label;
        g.documents.iter().any(|d| d.label != first)
    })
}

/// Runs Adam over epochs of (full or query-mini-) batches, evaluating the
/// objective on `holdout` after each epoch, and returns the parameters from
/// the epoch with the lowest holdout loss. Stops after `patience`
/// consecutive epochs without a `min_delta` improvement.
pub fn train(
    train_ds: &Dataset,
    holdout: &Dataset,
    config: &TrainConfig,
    adam: &AdamConfig,
) -> Result<TrainOutcome> {
    if config.patience == 0 {
        return Err(Error::invalid("patience must be ≥ 1"));
    }
    if train_ds.feature_dim != holdout.feature_dim {
        return Err(Error::invalid(format!(
            "train dimension {} != holdout dimension {}",
            train_ds.feature_dim, holdout.feature_dim
        )));
    }
    if config.objective.kind == LossKind::ZeroOne {
        return Err(Error::Unsupported(
            "gradient training with the zero-one loss".into(),
        ));
    }
    if config.objective.mode == LossMode::Pairwise {
        if !has_mixed_pair(train_ds) {
            return Err(Error::invalid(
                "pairwise training requires at least one mixed-label query in the training data",
            ));
        }
        if !has_mixed_pair(holdout) {
            return Err(Error::invalid(
                "pairwise training requires at least one mixed-label query in the holdout data",
            ));
        }
    }

    let dim = train_ds.feature_dim;
    let mut params = LinearScorer::zeros(dim).to_params();
    let mut opt = AdamState::new(*adam, dim + 1);
    let mut history: Vec<EpochStats> = Vec::new();

    let mut best_loss = f64::INFINITY;
    let mut best_params = params.clone();
    let mut best_epoch = None;
    // Early stopping tracks min_delta improvements separately from the
    // best checkpoint, which is the plain argmin.
    let mut stall_reference = f64::INFINITY;
    let mut stall = 0usize;

    let diverged = |epoch: usize, history: &[EpochStats]| Error::Diverged {
        epoch,
        history: history.to_vec(),
    };

    for epoch in 1..=config.max_epochs {
        let batches: Vec<Vec<usize>> = match config.batch_queries {
            None => vec![(0..train_ds.queries.len()).collect()],
            Some(size) => {
                let size = size.max(1);
                let mut idx: Vec<usize> = (0..train_ds.queries.len()).collect();
                rand::seq::SliceRandom::shuffle(
                    &mut idx[..],
                    &mut derive_rng(config.seed, &[seeding::DOMAIN_BATCH_SHUFFLE, epoch as u64]),
                );
                idx.chunks(size).map(<[usize]>::to_vec).collect()
            }
        };

        let mut stepped = false;
        for batch_idx in &batches {
            let batch: Vec<QueryGroup> =
                batch_idx.iter().map(|&i| train_ds.queries[i].clone()).collect();
            let model = LinearScorer::from_params(&params);
            let bg = empirical_gradient(&model, &batch, config.objective)?;
            if bg.terms == 0 {
                continue;
            }
            opt.step(&mut params, &bg.gradient)
                .map_err(|_| diverged(epoch, &history))?;
            stepped = true;
        }
        if !stepped {
            return Err(Error::Undefined(
                "every batch was skipped: no mixed-label pairs anywhere".into(),
            ));
        }

        let model = LinearScorer::from_params(&params);
        let train_loss = empirical_objective(&model, &train_ds.queries, config.objective)?;
        let holdout_loss = empirical_objective(&model, &holdout.queries, config.objective)?;
        if !train_loss.is_finite() || !holdout_loss.is_finite() {
            return Err(diverged(epoch, &history));
        }
        history.push(EpochStats {
            epoch,
            train_loss,
            holdout_loss,
        });

        if holdout_loss < best_loss {
            best_loss = holdout_loss;
            best_params = params.clone();
            best_epoch = Some(epoch);
        }
        if holdout_loss < stall_reference - config.min_delta {
            stall_reference = holdout_loss;
            stall = 0;
        } else {
            stall += 1;
            if stall >= config.patience {
                break;
            }
        }
    }

    Ok(TrainOutcome {
        model: LinearScorer::from_params(&best_params),
        history,
        best_epoch,
    })
}

/// One grid cell's outcome, kept for diagnostics.
#[derive(Debug, Clone)]
pub struct CellSummary {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub holdout_loss: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct GridSearchOutcome {
    pub model: LinearScorer,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub holdout_loss: f64,
    /// Epoch history of the winning cell.
    pub history: Vec<EpochStats>,
    pub cells: Vec<CellSummary>,
}

fn dedup_sorted(grid: &[f64]) -> Vec<f64> {
    let mut g = grid.to_vec();
    g.sort_by(|a, b| a.partial_cmp(b).unwrap());
    g.dedup();
    g
}

/// Trains one model per (learning rate, weight decay) cell and returns the
/// one with the smallest holdout loss; ties break toward the smaller
/// learning rate, then the smaller weight decay. Cells run in parallel and
/// the selection is independent of completion order.
pub fn grid_search(
    train_ds: &Dataset,
    holdout: &Dataset,
    config: &TrainConfig,
    adam_template: &AdamConfig,
    lr_grid: &[f64],
    wd_grid: &[f64],
) -> Result<GridSearchOutcome> {
    if lr_grid.is_empty() || wd_grid.is_empty() {
        return Err(Error::invalid("learning-rate and weight-decay grids must be nonempty"));
    }
    let lrs = dedup_sorted(lr_grid);
    let wds = dedup_sorted(wd_grid);

    let cells: Vec<(f64, f64)> = lrs
        .iter()
        .flat_map(|&lr| wds.iter().map(move |&wd| (lr, wd)))
        .collect();

    let results: Vec<(CellSummary, Option<TrainOutcome>)> = cells
        .par_iter()
        .map(|&(lr, wd)| {
            let adam = AdamConfig {
                learning_rate: lr,
                weight_decay: wd,
                ..*adam_template
            };
            match train(train_ds, holdout, config, &adam) {
                Ok(outcome) => {
                    let loss = outcome
                        .best_epoch
                        .and_then(|best| {
                            outcome.history.iter().find(|e| e.epoch == best)
                        })
                        .map(|e| e.holdout_loss);
                    (
                        CellSummary {
                            learning_rate: lr,
                            weight_decay: wd,
                            holdout_loss: loss,
                            error: None,
                        },
                        Some(outcome),
                    )
                }
                Err(e) => (
                    CellSummary {
                        learning_rate: lr,
                        weight_decay: wd,
                        holdout_loss: None,
                        error: Some(e.to_string()),
                    },
                    None,
                ),
            }
        })
        .collect();

    let mut best: Option<(f64, usize)> = None;
    for (i, (cell, outcome)) in results.iter().enumerate() {
        if let (Some(loss), Some(_)) = (cell.holdout_loss, outcome.as_ref()) {
            // Cells are ordered by (lr, wd) ascending, so a strict `<` scan
            // realizes the smaller-lr, smaller-wd tie-break.
            if best.is_none_or(|(b, _)| loss < b) {
                best = Some((loss, i));
            }
        }
    }

    let cells_summary: Vec<CellSummary> = results.iter().map(|(c, _)| c.clone()).collect();
    match best {
        Some((loss, i)) => {
            let (cell, outcome) = &results[i];
            let outcome = outcome.as_ref().unwrap();
            Ok(GridSearchOutcome {
                model: outcome.model.clone(),
                learning_rate: cell.learning_rate,
                weight_decay: cell.weight_decay,
                holdout_loss: loss,
                history: outcome.history.clone(),
                cells: cells_summary,
            })
        }
        None => Err(Error::GridExhausted {
            diagnostics: cells_summary
                .iter()
                .map(|c| {
                    format!(
                        "lr={} wd={}: {}",
                        c.learning_rate,
                        c.weight_decay,
                        c.error.as_deref().unwrap_or("no epochs ran")
                    )
                })
                .collect(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, split, LabelRule, SyntheticSpec, ThetaMode};

    fn separable_data(seed: u64) -> (Dataset, Dataset) {
        let ds = generate_synthetic(&SyntheticSpec {
            num_queries: 50,
            docs_per_query: 10,
            feature_dim: 5,
            seed,
            prevalence_range: None,
            label_rule: LabelRule::Thresholded,
            theta_mode: ThetaMode::Shared,
        })
        .unwrap();
        split(&ds, 0.8, seed).unwrap()
    }

    #[test]
    fn score_hand_values() {
        let zero = LinearScorer::zeros(3);
        assert_eq!(zero.score(&[4.0, 5.0, 6.0]).unwrap(), 0.0);

        let m = LinearScorer {
            weights: vec![1.0, 0.0],
            bias: 0.0,
        };
        assert_eq!(m.score(&[0.5, 9.0]).unwrap(), 0.5);

        let m = LinearScorer {
            weights: vec![1.0, 1.0],
            bias: 1.0,
        };
        assert_eq!(m.score(&[1.0, 1.0]).unwrap(), 3.0);
        assert!(m.score(&[1.0]).is_err());
    }

    #[test]
    fn model_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        let m = LinearScorer {
            weights: vec![0.25, -1.5e-7, 3.0],
            bias: -0.125,
        };
        m.save(&path).unwrap();
        assert_eq!(LinearScorer::load(&path).unwrap(), m);
    }

    #[test]
    fn adam_first_step_is_signed_learning_rate() {
        let lr = 0.01;
        let cfg = AdamConfig {
            learning_rate: lr,
            ..AdamConfig::default()
        };
        let mut state = AdamState::new(cfg, 2);
        let mut params = vec![0.0, 0.0];
        state.step(&mut params, &[3.0, -0.5]).unwrap();
        assert!((params[0] - -lr).abs() < 1e-6);
        assert!((params[1] - lr).abs() < 1e-6);
        assert_eq!(state.step_count, 1);
    }

    #[test]
    fn adam_zero_gradient_branches() {
        let mut state = AdamState::new(AdamConfig::default(), 2);
        let mut params = vec![1.0, -2.0];
        state.step(&mut params, &[0.0, 0.0]).unwrap();
        assert_eq!(params, vec![1.0, -2.0]);
        assert_eq!(state.step_count, 1);

        let cfg = AdamConfig {
            learning_rate: 0.1,
            weight_decay: 1e-3,
            ..AdamConfig::default()
        };
        let mut state = AdamState::new(cfg, 2);
        let mut params = vec![1.0, -2.0];
        state.step(&mut params, &[0.0, 0.0]).unwrap();
        assert_eq!(params, vec![1.0 * 0.9999, -2.0 * 0.9999]);
    }

    #[test]
    fn adam_rejects_bad_input() {
        let mut state = AdamState::new(AdamConfig::default(), 2);
        let mut params = vec![0.0, 0.0];
        assert!(state.step(&mut params, &[1.0]).is_err());
        assert!(state.step(&mut params, &[f64::NAN, 0.0]).is_err());
    }

    /// Central finite difference of the batch risk, coordinate by coordinate.
    fn fd_gradient(
        params: &[f64],
        batch: &[QueryGroup],
        objective: TrainObjective,
    ) -> Vec<f64> {
        let h = 1e-6;
        (0..params.len())
            .map(|i| {
                let mut plus = params.to_vec();
                plus[i] += h;
                let mut minus = params.to_vec();
                minus[i] -= h;
                let fp = empirical_objective(&LinearScorer::from_params(&plus), batch, objective)
                    .unwrap();
                let fm = empirical_objective(&LinearScorer::from_params(&minus), batch, objective)
                    .unwrap();
                (fp - fm) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradients_match_finite_differences() {
        let ds = generate_synthetic(&SyntheticSpec {
            num_queries: 6,
            docs_per_query: 8,
            feature_dim: 4,
            seed: 3,
            prevalence_range: None,
            label_rule: LabelRule::Sampled,
            theta_mode: ThetaMode::PerQuery,
        })
        .unwrap();
        let mut rng = derive_rng(5, &[1]);
        for kind in [
            LossKind::Hinge,
            LossKind::Logistic,
            LossKind::Exponential,
            LossKind::SymmetrizedLogistic,
        ] {
            for mode in [LossMode::Pointwise, LossMode::Pairwise] {
                let objective = TrainObjective::new(kind, mode);
                for _ in 0..5 {
                    let params: Vec<f64> = (0..5)
                        .map(|_| rand::Rng::gen_range(&mut rng, -0.4..0.4))
                        .collect();
                    let model = LinearScorer::from_params(&params);
                    let bg = empirical_gradient(&model, &ds.queries, objective).unwrap();
                    let fd = fd_gradient(&params, &ds.queries, objective);
                    for (g, f) in bg.gradient.iter().zip(&fd) {
                        let tol = 1e-5 * g.abs().max(1.0);
                        assert!(
                            (g - f).abs() <= tol,
                            "{kind} {mode:?}: analytic {g} vs fd {f}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn mirrored_batch_gradient_is_analytic() {
        // Two documents (x, 1) and (−x, 0) under the symmetrized logistic
        // loss at a zero model: both margins are 0, ℓ'(0) = −1/4, and the
        // mean gradient is −x/4 with zero bias derivative.
        let x = vec![0.8, -0.6, 1.5];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let group = QueryGroup {
            query_id: "q".into(),
            documents: vec![
                crate::data::Document {
                    features: x.clone(),
                    label: 1,
                    noisy_label: None,
                    doc_id: None,
                },
                crate::data::Document {
                    features: neg,
                    label: 0,
                    noisy_label: None,
                    doc_id: None,
                },
            ],
            oracle: None,
        };
        let model = LinearScorer::zeros(3);
        let bg = empirical_gradient(
            &model,
            &[group],
            TrainObjective::new(LossKind::SymmetrizedLogistic, LossMode::Pointwise),
        )
        .unwrap();
        for (g, v) in bg.gradient.iter().zip(&x) {
            assert!((g - -0.25 * v).abs() < 1e-15);
        }
        assert_eq!(bg.gradient[3], 0.0);
    }

    #[test]
    fn equal_score_pair_gradient_magnitude() {
        // One mixed pair at equal scores under the pairwise symmetrized
        // logistic loss: gradient = −(x₁−x₂)/4.
        let x1 = vec![1.0, 2.0];
        let x2 = vec![0.0, -1.0];
        let group = QueryGroup {
            query_id: "q".into(),
            documents: vec![
                crate::data::Document {
                    features: x1.clone(),
                    label: 1,
                    noisy_label: None,
                    doc_id: None,
                },
                crate::data::Document {
                    features: x2.clone(),
                    label: 0,
                    noisy_label: None,
                    doc_id: None,
                },
            ],
            oracle: None,
        };
        let bg = empirical_gradient(
            &LinearScorer::zeros(2),
            &[group],
            TrainObjective::new(LossKind::SymmetrizedLogistic, LossMode::Pairwise),
        )
        .unwrap();
        let expect: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| -0.25 * (a - b)).collect();
        assert_eq!(&bg.gradient[..2], &expect[..]);
        let norm: f64 = bg.gradient[..2].iter().map(|g| g * g).sum::<f64>().sqrt();
        let diff_norm: f64 = x1
            .iter()
            .zip(&x2)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!((norm - 0.25 * diff_norm).abs() < 1e-12);
    }

    #[test]
    fn training_recovers_separable_data() {
        let (train_ds, holdout) = separable_data(11);
        let config = TrainConfig {
            seed: 7,
            ..TrainConfig::new(TrainObjective::new(LossKind::Logistic, LossMode::Pointwise))
        };
        let adam = AdamConfig {
            learning_rate: 0.1,
            ..AdamConfig::default()
        };
        let outcome = train(&train_ds, &holdout, &config, &adam).unwrap();

        // Final training 0-1 risk below 5%.
        let mut errors = 0usize;
        let mut docs = 0usize;
        for g in &train_ds.queries {
            for d in &g.documents {
                let s = outcome.model.score(&d.features).unwrap();
                let sign = f64::from(d.label) * 2.0 - 1.0;
                if s * sign < 0.0 {
                    errors += 1;
                }
                docs += 1;
            }
        }
        let risk = errors as f64 / docs as f64;
        assert!(risk < 0.05, "training zero-one risk {risk}");
    }

    #[test]
    fn every_differentiable_loss_recovers_separable_data() {
        // Noise-free run: each trainable kind should reach near-perfect
        // holdout ranking on separable data.
        let (train_ds, holdout) = separable_data(43);
        for kind in [
            LossKind::Hinge,
            LossKind::Logistic,
            LossKind::Exponential,
            LossKind::SymmetrizedLogistic,
        ] {
            let config = TrainConfig {
                seed: 3,
                ..TrainConfig::new(TrainObjective::new(kind, LossMode::Pointwise))
            };
            let adam = AdamConfig {
                learning_rate: 0.1,
                ..AdamConfig::default()
            };
            let outcome = train(&train_ds, &holdout, &config, &adam).unwrap();
            let ndcg = crate::experiments::evaluate_model(
                &outcome.model,
                &holdout,
                &[crate::metrics::Metric::NdcgAt(10)],
            )
            .unwrap()[0]
                .1
                .value;
            assert!(ndcg <= -0.9, "{kind}: holdout ndcg@10 {ndcg}");
        }
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let (train_ds, holdout) = separable_data(13);
        let config = TrainConfig {
            max_epochs: 0,
            ..TrainConfig::new(TrainObjective::new(LossKind::Logistic, LossMode::Pointwise))
        };
        let outcome = train(&train_ds, &holdout, &config, &AdamConfig::default()).unwrap();
        assert!(outcome.history.is_empty());
        assert_eq!(outcome.best_epoch, None);
        assert_eq!(outcome.model, LinearScorer::zeros(5));
    }

    #[test]
    fn training_is_deterministic() {
        let (train_ds, holdout) = separable_data(17);
        let config = TrainConfig {
            max_epochs: 60,
            batch_queries: Some(8),
            seed: 5,
            ..TrainConfig::new(TrainObjective::new(
                LossKind::SymmetrizedLogistic,
                LossMode::Pairwise,
            ))
        };
        let a = train(&train_ds, &holdout, &config, &AdamConfig::default()).unwrap();
        let b = train(&train_ds, &holdout, &config, &AdamConfig::default()).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn best_epoch_is_the_holdout_argmin() {
        let (train_ds, holdout) = separable_data(19);
        let config = TrainConfig {
            max_epochs: 80,
            ..TrainConfig::new(TrainObjective::new(LossKind::Logistic, LossMode::Pointwise))
        };
        let outcome = train(&train_ds, &holdout, &config, &AdamConfig::default()).unwrap();
        let best = outcome.best_epoch.unwrap();
        let best_loss = outcome
            .history
            .iter()
            .find(|e| e.epoch == best)
            .unwrap()
            .holdout_loss;
        for e in &outcome.history {
            assert!(best_loss <= e.holdout_loss, "epoch {}", e.epoch);
        }
        let model_loss =
            empirical_objective(&outcome.model, &holdout.queries, config.objective).unwrap();
        assert_eq!(model_loss, best_loss);
    }

    #[test]
    fn divergence_reports_history() {
        let (train_ds, holdout) = separable_data(23);
        let config =
            TrainConfig::new(TrainObjective::new(LossKind::Exponential, LossMode::Pointwise));
        let adam = AdamConfig {
            learning_rate: 1e4,
            ..AdamConfig::default()
        };
        match train(&train_ds, &holdout, &config, &adam) {
            Err(Error::Diverged { epoch, .. }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn zero_one_training_is_rejected() {
        let (train_ds, holdout) = separable_data(29);
        let config = TrainConfig::new(TrainObjective::new(LossKind::ZeroOne, LossMode::Pointwise));
        assert!(matches!(
            train(&train_ds, &holdout, &config, &AdamConfig::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn grid_search_runs_every_cell_and_dedups() {
        let (train_ds, holdout) = separable_data(31);
        let config = TrainConfig {
            max_epochs: 30,
            ..TrainConfig::new(TrainObjective::new(LossKind::Logistic, LossMode::Pointwise))
        };
        let out = grid_search(
            &train_ds,
            &holdout,
            &config,
            &AdamConfig::default(),
            &[1e-1, 1e-2, 1e-3, 1e-4, 1e-5],
            &[1e-5, 1e-4, 1e-3],
        )
        .unwrap();
        assert_eq!(out.cells.len(), 15);

        let dup = grid_search(
            &train_ds,
            &holdout,
            &config,
            &AdamConfig::default(),
            &[1e-2, 1e-2, 1e-3],
            &[1e-4, 1e-4],
        )
        .unwrap();
        assert_eq!(dup.cells.len(), 2);
    }

    #[test]
    fn single_cell_grid_matches_plain_train() {
        let (train_ds, holdout) = separable_data(37);
        let config = TrainConfig {
            max_epochs: 40,
            ..TrainConfig::new(TrainObjective::new(LossKind::Logistic, LossMode::Pointwise))
        };
        let adam = AdamConfig::default();
        let grid = grid_search(&train_ds, &holdout, &config, &adam, &[1e-2], &[1e-3]).unwrap();
        let plain = train(
            &train_ds,
            &holdout,
            &config,
            &AdamConfig {
                learning_rate: 1e-2,
                weight_decay: 1e-3,
                ..adam
            },
        )
        .unwrap();
        assert_eq!(grid.model, plain.model);
    }

    #[test]
    fn grid_search_reports_total_failure() {
        let (train_ds, holdout) = separable_data(41);
        let config =
            TrainConfig::new(TrainObjective::new(LossKind::Exponential, LossMode::Pointwise));
        let err = grid_search(
            &train_ds,
            &holdout,
            &config,
            &AdamConfig::default(),
            &[1e5],
            &[0.0],
        )
        .unwrap_err();
        match err {
            Error::GridExhausted { diagnostics } => assert_eq!(diagnostics.len(), 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
