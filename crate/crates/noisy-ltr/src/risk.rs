//! Clean/noisy risk estimation and the order-preservation laboratory.
//!
//! The central question: when labels are flipped with probability `1−γ`,
//! does the noisy risk still rank scoring functions the way the clean risk
//! does? For a label-symmetric loss the expected noisy risk is the affine
//! map `(2γ−1)·clean + c(1−γ)`, so the answer is yes whenever `γ > 1/2`.
//! [`affinity_analysis`] estimates that line empirically over a family of
//! scorers of graded quality; [`counterexample_check`] probes the failure
//! mode of non-symmetric losses (scaling up an accurate scorer until the
//! noisy risk prefers a bounded random one); [`dcg_affinity_check`] verifies
//! the analogous affine identity for discounted cumulative gain, whose
//! intercept `Σ_{i≤k} (1−γ)/D_i` is known in closed form.
//!
//! [`deviation_bound`] and [`expected_excess_bound`] evaluate the
//! finite-sample ERM guarantees that order preservation buys: the clean-case
//! rates with `ε` replaced by `ε(2γ−1)`.

use rand::distributions::{Bernoulli, Distribution};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::data::{Dataset, LabelSet, QueryGroup};
use crate::error::{Error, Result};
use crate::losses::{LossKind, LossMode};
use crate::metrics::{self, Metric};
use crate::seeding::{self, derive_rng, derive_seed};
use crate::training::LinearScorer;

// ============================================================================
// Scorers
// ============================================================================

/// Anything that can score a document in the context of its query group.
///
/// The query and document indices give deterministic scorers (perturbed or
/// random ones) a stable identity for their per-document noise streams.
pub trait Scorer: Sync {
    fn score_doc(&self, group: &QueryGroup, query_idx: usize, doc_idx: usize) -> f64;
}

impl Scorer for LinearScorer {
    fn score_doc(&self, group: &QueryGroup, _query_idx: usize, doc_idx: usize) -> f64 {
        self.score_unchecked(&group.documents[doc_idx].features)
    }
}

fn oracle_centered(group: &QueryGroup, doc_idx: usize) -> f64 {
    group
        .oracle
        .as_ref()
        .expect("scorer requires a dataset with stored oracles")
        .centered_score(&group.documents[doc_idx].features)
}

/// The true class-probability scorer, centered: `P(Y=1|x) − 1/2`.
pub struct OracleScorer;

impl Scorer for OracleScorer {
    fn score_doc(&self, group: &QueryGroup, _query_idx: usize, doc_idx: usize) -> f64 {
        oracle_centered(group, doc_idx)
    }
}

/// `f_a(x) = a·(P(Y=1|x) − 1/2)`: the oracle ranking at an arbitrary output
/// scale. Centering keeps pointwise margins sign-bearing while leaving the
/// induced ranking identical to the oracle's.
pub struct ScaledOracleScorer {
    pub scale: f64,
}

impl Scorer for ScaledOracleScorer {
    fn score_doc(&self, group: &QueryGroup, _query_idx: usize, doc_idx: usize) -> f64 {
        self.scale * oracle_centered(group, doc_idx)
    }
}

/// Bounded random scores, uniform on `[−1, 1]`, fixed per (query, document).
pub struct BoundedRandomScorer {
    pub seed: u64,
}

impl Scorer for BoundedRandomScorer {
    fn score_doc(&self, _group: &QueryGroup, query_idx: usize, doc_idx: usize) -> f64 {
        derive_rng(
            self.seed,
            &[seeding::DOMAIN_RANDOM_SCORER, query_idx as u64, doc_idx as u64],
        )
        .gen_range(-1.0..=1.0)
    }
}

/// One member of the graded-quality family:
/// `scale · (oracle_centered(x) + perturbation · z)` with `z ~ N(0, 1)`
/// drawn once per (scorer, document).
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyScorer {
    pub id: usize,
    pub perturbation: f64,
    pub scale: f64,
    seed: u64,
}

impl Scorer for FamilyScorer {
    fn score_doc(&self, group: &QueryGroup, query_idx: usize, doc_idx: usize) -> f64 {
        let base = oracle_centered(group, doc_idx);
        let z: f64 = StandardNormal.sample(&mut derive_rng(
            self.seed,
            &[
                seeding::DOMAIN_SCORER_NOISE,
                self.id as u64,
                query_idx as u64,
                doc_idx as u64,
            ],
        ));
        (base + self.perturbation * z) * self.scale
    }
}

/// Recipe for the scorer family: each perturbation level yields two scorers,
/// one at unit scale and one multiplied by `scale_factor`, so exactly half
/// the family is scaled.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorerFamilySpec {
    pub perturbation_levels: Vec<f64>,
    pub scale_factor: f64,
    pub seed: u64,
}

impl ScorerFamilySpec {
    /// 100 scorers: 50 perturbation levels spaced evenly over `[0, 2]`,
    /// each at scales 1 and 10.
    pub fn default_hundred(seed: u64) -> Self {
        Self::evenly_spaced(100, 2.0, 10.0, seed).expect("static sizes are valid")
    }

    /// `family_size` scorers (must be even): `family_size/2` perturbation
    /// levels spaced evenly over `[0, max_perturbation]`.
    pub fn evenly_spaced(
        family_size: usize,
        max_perturbation: f64,
        scale_factor: f64,
        seed: u64,
    ) -> Result<Self> {
        if family_size < 2 || !family_size.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "family size must be even and ≥ 2, got {family_size}"
            )));
        }
        let m = family_size / 2;
        let levels = (0..m)
            .map(|i| {
                if m == 1 {
                    0.0
                } else {
                    max_perturbation * i as f64 / (m - 1) as f64
                }
            })
            .collect();
        Ok(Self {
            perturbation_levels: levels,
            scale_factor,
            seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScorerFamily {
    pub scorers: Vec<FamilyScorer>,
}

/// Materializes the family against a synthetic dataset.
pub fn build_scorer_family(spec: &ScorerFamilySpec, ds: &Dataset) -> Result<ScorerFamily> {
    if !ds.has_oracle() {
        return Err(Error::invalid(
            "scorer family requires a synthetic dataset with stored oracles",
        ));
    }
    if spec.perturbation_levels.is_empty() {
        return Err(Error::invalid("perturbation_levels must be nonempty"));
    }
    if spec
        .perturbation_levels
        .iter()
        .any(|p| !p.is_finite() || *p < 0.0)
    {
        return Err(Error::invalid("perturbation levels must be finite and ≥ 0"));
    }
    let m = spec.perturbation_levels.len();
    let mut scorers = Vec::with_capacity(2 * m);
    for (i, &eta) in spec.perturbation_levels.iter().enumerate() {
        scorers.push(FamilyScorer {
            id: i,
            perturbation: eta,
            scale: 1.0,
            seed: spec.seed,
        });
    }
    for (i, &eta) in spec.perturbation_levels.iter().enumerate() {
        scorers.push(FamilyScorer {
            id: m + i,
            perturbation: eta,
            scale: spec.scale_factor,
            seed: spec.seed,
        });
    }
    Ok(ScorerFamily { scorers })
}

// ============================================================================
// Empirical risk
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskKind {
    PointwiseClean,
    PointwiseNoisy,
    PairwiseClean,
    PairwiseNoisy,
}

impl RiskKind {
    fn from_parts(mode: LossMode, labels: LabelSet) -> Self {
        match (mode, labels) {
            (LossMode::Pointwise, LabelSet::Clean) => RiskKind::PointwiseClean,
            (LossMode::Pointwise, LabelSet::Noisy) => RiskKind::PointwiseNoisy,
            (LossMode::Pairwise, LabelSet::Clean) => RiskKind::PairwiseClean,
            (LossMode::Pairwise, LabelSet::Noisy) => RiskKind::PairwiseNoisy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskEstimate {
    pub value: f64,
    pub kind: RiskKind,
    /// Documents (pointwise) or mixed-label pairs (pairwise) in the estimate.
    pub n_terms: usize,
}

/// Scores of every document, per query, validated finite.
fn score_table(scorer: &dyn Scorer, ds: &Dataset) -> Result<Vec<Vec<f64>>> {
    ds.queries
        .iter()
        .enumerate()
        .map(|(qi, group)| {
            (0..group.documents.len())
                .map(|di| {
                    let s = scorer.score_doc(group, qi, di);
                    if s.is_finite() {
                        Ok(s)
                    } else {
                        Err(Error::invalid(format!(
                            "scorer produced non-finite score {s} (query {}, doc {di})",
                            group.query_id
                        )))
                    }
                })
                .collect()
        })
        .collect()
}

fn pointwise_from_table(kind: LossKind, scores: &[Vec<f64>], labels: &[Vec<u8>]) -> (f64, usize) {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (qs, ql) in scores.iter().zip(labels) {
        for (&s, &y) in qs.iter().zip(ql) {
            let sign = f64::from(y) * 2.0 - 1.0;
            sum += kind.value(s * sign);
            n += 1;
        }
    }
    (sum, n)
}

/// Per-query mean over mixed-label pairs, then the count of queries used and
/// total pairs. `None` when no query has a mixed pair.
fn pairwise_from_table(
    kind: LossKind,
    scores: &[Vec<f64>],
    labels: &[Vec<u8>],
) -> Option<(f64, usize, usize)> {
    let mut query_sum = 0.0;
    let mut queries = 0usize;
    let mut pairs_total = 0usize;
    for (qs, ql) in scores.iter().zip(labels) {
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for i in 0..qs.len() {
            for j in (i + 1)..qs.len() {
                if ql[i] == ql[j] {
                    continue;
                }
                let sign = if ql[i] > ql[j] { 1.0 } else { -1.0 };
                sum += kind.value((qs[i] - qs[j]) * sign);
                pairs += 1;
            }
        }
        if pairs > 0 {
            query_sum += sum / pairs as f64;
            queries += 1;
            pairs_total += pairs;
        }
    }
    (queries > 0).then_some((query_sum / queries as f64, queries, pairs_total))
}

fn dataset_labels(ds: &Dataset, set: LabelSet) -> Result<Vec<Vec<u8>>> {
    ds.queries
        .iter()
        .map(|g| {
            let l = g.labels(set)?;
            if let Some(bad) = l.iter().find(|&&y| y > 1) {
                return Err(Error::invalid(format!("non-binary label {bad}")));
            }
            Ok(l)
        })
        .collect()
}

/// Mean loss of `scorer` on `ds` under the chosen label set.
///
/// Pointwise averages over all documents; pairwise averages over mixed-label
/// pairs within each query and then over the queries that have at least one
/// such pair.
pub fn empirical_risk(
    scorer: &dyn Scorer,
    ds: &Dataset,
    loss: LossKind,
    mode: LossMode,
    labels: LabelSet,
) -> Result<RiskEstimate> {
    let table = score_table(scorer, ds)?;
    let label_table = dataset_labels(ds, labels)?;
    let kind = RiskKind::from_parts(mode, labels);
    match mode {
        LossMode::Pointwise => {
            let (sum, n) = pointwise_from_table(loss, &table, &label_table);
            if n == 0 {
                return Err(Error::Undefined("no documents to estimate over".into()));
            }
            Ok(RiskEstimate {
                value: sum / n as f64,
                kind,
                n_terms: n,
            })
        }
        LossMode::Pairwise => match pairwise_from_table(loss, &table, &label_table) {
            Some((value, _queries, pairs)) => Ok(RiskEstimate {
                value,
                kind,
                n_terms: pairs,
            }),
            None => Err(Error::Undefined(
                "pairwise risk undefined: no mixed-label pairs".into(),
            )),
        },
    }
}

// ============================================================================
// Objectives (losses and metrics under one name)
// ============================================================================

/// A loss applied in a mode, or a ranking metric: the things whose clean and
/// noisy values the simulations compare.
///
/// Names: loss names are pointwise by default; `ranknet` is the pairwise
/// logistic loss and `symmetrized_ranknet` the pairwise symmetrized
/// logistic; any other pairwise loss spells as `pairwise_<loss>`; metric
/// names parse as metrics (`auc`, `map`, `dcg@K`, `ndcg@K`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    Loss { kind: LossKind, mode: LossMode },
    Metric(Metric),
}

impl Objective {
    pub fn loss(kind: LossKind, mode: LossMode) -> Self {
        Objective::Loss { kind, mode }
    }

    pub fn name(&self) -> String {
        match self {
            Objective::Loss {
                kind,
                mode: LossMode::Pointwise,
            } => kind.name().to_string(),
            Objective::Loss {
                kind: LossKind::Logistic,
                mode: LossMode::Pairwise,
            } => "ranknet".into(),
            Objective::Loss {
                kind: LossKind::SymmetrizedLogistic,
                mode: LossMode::Pairwise,
            } => "symmetrized_ranknet".into(),
            Objective::Loss {
                kind,
                mode: LossMode::Pairwise,
            } => format!("pairwise_{}", kind.name()),
            Objective::Metric(m) => m.name(),
        }
    }

    /// Symmetry constant of the underlying loss, when there is one.
    pub fn symmetry_constant(&self) -> Option<f64> {
        match self {
            Objective::Loss { kind, .. } => kind.symmetry_constant(),
            Objective::Metric(_) => None,
        }
    }
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if let Ok(m) = s.parse::<Metric>() {
            return Ok(Objective::Metric(m));
        }
        match s {
            "ranknet" => {
                return Ok(Objective::loss(LossKind::Logistic, LossMode::Pairwise));
            }
            "symmetrized_ranknet" => {
                return Ok(Objective::loss(
                    LossKind::SymmetrizedLogistic,
                    LossMode::Pairwise,
                ));
            }
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("pairwise_") {
            let kind: LossKind = rest.parse()?;
            return Ok(Objective::loss(kind, LossMode::Pairwise));
        }
        if let Ok(kind) = s.parse::<LossKind>() {
            return Ok(Objective::loss(kind, LossMode::Pointwise));
        }
        Err(Error::invalid(format!("unknown loss or metric '{s}'")))
    }
}

// ============================================================================
// Affinity analysis
// ============================================================================

/// One scorer's averaged (clean, noisy) objective values.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityPoint {
    pub scorer_id: usize,
    pub perturbation: f64,
    pub scale: f64,
    pub clean: f64,
    pub noisy: f64,
}

/// Ordinary-least-squares fit of noisy values against clean values across a
/// scorer family, with Monte-Carlo standard errors and rank correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityReport {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub spearman_rho: f64,
    /// Standard errors from the across-draw spread of per-draw line fits;
    /// absent when only one draw ran.
    pub slope_se: Option<f64>,
    pub intercept_se: Option<f64>,
    /// `2γ−1`, the slope an order-preserving objective should show.
    pub predicted_slope: f64,
    /// Closed-form intercept where one exists: `c(1−γ)` for label-symmetric
    /// losses, `Σ_{i≤k}(1−γ)/D_i` for the DCG check.
    pub predicted_intercept: Option<f64>,
    pub draws: usize,
    pub points: Vec<AffinityPoint>,
}

#[derive(Clone, Copy)]
enum EvalKind {
    Loss { kind: LossKind, mode: LossMode },
    Metric(Metric),
    /// Un-negated discounted gain; its affine noise identity has the
    /// closed-form additive constant.
    DcgGain { k: usize },
}

impl EvalKind {
    fn needs_order(self) -> bool {
        matches!(self, EvalKind::Metric(_) | EvalKind::DcgGain { .. })
    }
}

/// Objective value over one draw's sampled queries for one scorer.
/// `labels[slot]` are the labels (clean or noisy) of the sampled queries.
fn eval_draw(
    eval: EvalKind,
    scores: &[Vec<f64>],
    orders: Option<&[Vec<usize>]>,
    slots: &[usize],
    labels: &[Vec<u8>],
) -> Option<f64> {
    match eval {
        EvalKind::Loss {
            kind,
            mode: LossMode::Pointwise,
        } => {
            let mut sum = 0.0;
            let mut n = 0usize;
            for (slot, &q) in slots.iter().enumerate() {
                for (&s, &y) in scores[q].iter().zip(&labels[slot]) {
                    sum += kind.value(s * (f64::from(y) * 2.0 - 1.0));
                    n += 1;
                }
            }
            (n > 0).then(|| sum / n as f64)
        }
        EvalKind::Loss {
            kind,
            mode: LossMode::Pairwise,
        } => {
            let mut query_sum = 0.0;
            let mut queries = 0usize;
            for (slot, &q) in slots.iter().enumerate() {
                let qs = &scores[q];
                let ql = &labels[slot];
                let mut sum = 0.0;
                let mut pairs = 0usize;
                for i in 0..qs.len() {
                    for j in (i + 1)..qs.len() {
                        if ql[i] == ql[j] {
                            continue;
                        }
                        let sign = if ql[i] > ql[j] { 1.0 } else { -1.0 };
                        sum += kind.value((qs[i] - qs[j]) * sign);
                        pairs += 1;
                    }
                }
                if pairs > 0 {
                    query_sum += sum / pairs as f64;
                    queries += 1;
                }
            }
            (queries > 0).then(|| query_sum / queries as f64)
        }
        EvalKind::Metric(metric) => {
            let orders = orders.expect("metric evaluation precomputes orders");
            let mut sum = 0.0;
            let mut used = 0usize;
            for (slot, &q) in slots.iter().enumerate() {
                if let Some(v) =
                    metrics::eval_metric_ordered(metric, &orders[q], &scores[q], &labels[slot])
                {
                    sum += v;
                    used += 1;
                }
            }
            (used > 0).then(|| sum / used as f64)
        }
        EvalKind::DcgGain { k } => {
            let orders = orders.expect("dcg evaluation precomputes orders");
            let mut sum = 0.0;
            for (slot, &q) in slots.iter().enumerate() {
                sum += metrics::dcg_gain_ordered(&orders[q], &labels[slot], k);
            }
            Some(sum / slots.len() as f64)
        }
    }
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j < idx.len() && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        // Average 1-based rank over the tie group.
        let avg = (i + 1 + j) as f64 / 2.0;
        for &v in &idx[i..j] {
            ranks[v] = avg;
        }
        i = j;
    }
    ranks
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman_rho(xs: &[f64], ys: &[f64]) -> f64 {
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

fn affinity_core(
    family: &ScorerFamily,
    ds: &Dataset,
    eval: EvalKind,
    gamma: f64,
    draws: usize,
    queries_per_draw: usize,
    seed: u64,
) -> Result<AffinityReport> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    if draws == 0 || queries_per_draw == 0 {
        return Err(Error::invalid("draws and queries_per_draw must be ≥ 1"));
    }
    if family.scorers.len() < 3 {
        return Err(Error::invalid(
            "affinity fit needs at least 3 scorers in the family",
        ));
    }
    if !ds.has_oracle() {
        return Err(Error::invalid(
            "affinity analysis requires the synthetic dataset the family was built for",
        ));
    }
    let clean_labels = dataset_labels(ds, LabelSet::Clean)?;
    if let EvalKind::DcgGain { k } = eval {
        if k == 0 {
            return Err(Error::invalid("dcg cutoff k must be ≥ 1"));
        }
        if let Some(short) = ds.queries.iter().find(|g| g.documents.len() < k) {
            return Err(Error::invalid(format!(
                "query {} has fewer than k = {k} documents; the closed-form intercept needs k ranked positions in every query",
                short.query_id
            )));
        }
    }

    // Scores (and rankings, when needed) are fixed across draws; precompute.
    let tables: Vec<Vec<Vec<f64>>> = family
        .scorers
        .par_iter()
        .map(|s| score_table(s, ds))
        .collect::<Result<_>>()?;
    let orders: Option<Vec<Vec<Vec<usize>>>> = eval.needs_order().then(|| {
        tables
            .par_iter()
            .map(|t| t.iter().map(|qs| metrics::ranked_indices(qs)).collect())
            .collect()
    });

    let n_queries = ds.queries.len();
    let n_scorers = family.scorers.len();
    let keep = Bernoulli::new(gamma).expect("gamma validated");

    // One (clean, noisy) pair per scorer per draw; draws run in parallel on
    // derived seeds and are reduced in draw order.
    let per_draw: Vec<Vec<(Option<f64>, Option<f64>)>> = (0..draws)
        .into_par_iter()
        .map(|d| {
            let mut rng = derive_rng(seed, &[seeding::DOMAIN_DRAW, d as u64]);
            let slots: Vec<usize> = (0..queries_per_draw)
                .map(|_| rng.gen_range(0..n_queries))
                .collect();
            let clean_slot_labels: Vec<Vec<u8>> =
                slots.iter().map(|&q| clean_labels[q].clone()).collect();
            let noisy_slot_labels: Vec<Vec<u8>> = clean_slot_labels
                .iter()
                .map(|ql| {
                    ql.iter()
                        .map(|&y| if keep.sample(&mut rng) { y } else { 1 - y })
                        .collect()
                })
                .collect();
            (0..n_scorers)
                .map(|j| {
                    let order = orders.as_ref().map(|o| o[j].as_slice());
                    let clean = eval_draw(eval, &tables[j], order, &slots, &clean_slot_labels);
                    let noisy = eval_draw(eval, &tables[j], order, &slots, &noisy_slot_labels);
                    (clean, noisy)
                })
                .collect()
        })
        .collect();

    let mut clean_sum = vec![0.0; n_scorers];
    let mut clean_n = vec![0usize; n_scorers];
    let mut noisy_sum = vec![0.0; n_scorers];
    let mut noisy_n = vec![0usize; n_scorers];
    for draw in &per_draw {
        for (j, (clean, noisy)) in draw.iter().enumerate() {
            if let Some(c) = clean {
                clean_sum[j] += c;
                clean_n[j] += 1;
            }
            if let Some(v) = noisy {
                noisy_sum[j] += v;
                noisy_n[j] += 1;
            }
        }
    }
    for j in 0..n_scorers {
        if clean_n[j] == 0 || noisy_n[j] == 0 {
            return Err(Error::Undefined(format!(
                "objective was undefined in every draw for scorer {j}"
            )));
        }
    }

    let xs: Vec<f64> = (0..n_scorers).map(|j| clean_sum[j] / clean_n[j] as f64).collect();
    let ys: Vec<f64> = (0..n_scorers).map(|j| noisy_sum[j] / noisy_n[j] as f64).collect();

    let m = n_scorers as f64;
    let x_bar = xs.iter().sum::<f64>() / m;
    let y_bar = ys.iter().sum::<f64>() / m;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - x_bar) * (x - x_bar);
        syy += (y - y_bar) * (y - y_bar);
        sxy += (x - x_bar) * (y - y_bar);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateFit(
            "all scorers have identical clean values".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        ((sxy * sxy) / (sxx * syy)).clamp(0.0, 1.0)
    };

    // Standard errors come from the across-draw spread of per-draw fits.
    // Label flips are shared by every scorer within a draw, so per-point
    // error propagation would understate the intercept's uncertainty; the
    // per-draw fit spread captures those correlations.
    let (slope_se, intercept_se) = if draws >= 2 {
        let mut slopes = Vec::with_capacity(draws);
        let mut intercepts = Vec::with_capacity(draws);
        for draw in &per_draw {
            let pts: Vec<(f64, f64)> = draw.iter().filter_map(|(c, n)| c.zip(*n)).collect();
            if pts.len() < 3 {
                continue;
            }
            let dm = pts.len() as f64;
            let xb = pts.iter().map(|(x, _)| x).sum::<f64>() / dm;
            let yb = pts.iter().map(|(_, y)| y).sum::<f64>() / dm;
            let dsxx: f64 = pts.iter().map(|(x, _)| (x - xb) * (x - xb)).sum();
            if dsxx == 0.0 {
                continue;
            }
            let dsxy: f64 = pts.iter().map(|(x, y)| (x - xb) * (y - yb)).sum();
            let s = dsxy / dsxx;
            slopes.push(s);
            intercepts.push(yb - s * xb);
        }
        let se_of_mean = |v: &[f64]| {
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        };
        if slopes.len() >= 2 {
            (Some(se_of_mean(&slopes)), Some(se_of_mean(&intercepts)))
        } else {
            (None, None)
        }
    } else {
        (None, None)
    };

    let points = family
        .scorers
        .iter()
        .enumerate()
        .map(|(j, s)| AffinityPoint {
            scorer_id: s.id,
            perturbation: s.perturbation,
            scale: s.scale,
            clean: xs[j],
            noisy: ys[j],
        })
        .collect();

    Ok(AffinityReport {
        slope,
        intercept,
        r_squared,
        spearman_rho: spearman_rho(&xs, &ys),
        slope_se,
        intercept_se,
        predicted_slope: 2.0 * gamma - 1.0,
        predicted_intercept: None,
        draws,
        points,
    })
}

/// Estimates the noisy-vs-clean affine relationship of a loss or metric over
/// a scorer family.
///
/// Each draw samples `queries_per_draw` queries (with replacement) from the
/// dataset, corrupts their labels at level `γ`, and evaluates every scorer's
/// clean and noisy objective; the regression runs over the per-scorer means
/// across draws.
pub fn affinity_analysis(
    family: &ScorerFamily,
    ds: &Dataset,
    objective: &Objective,
    gamma: f64,
    draws: usize,
    queries_per_draw: usize,
    seed: u64,
) -> Result<AffinityReport> {
    let eval = match objective {
        Objective::Loss { kind, mode } => EvalKind::Loss {
            kind: *kind,
            mode: *mode,
        },
        Objective::Metric(m) => EvalKind::Metric(*m),
    };
    let mut report = affinity_core(family, ds, eval, gamma, draws, queries_per_draw, seed)?;
    report.predicted_intercept = objective.symmetry_constant().map(|c| c * (1.0 - gamma));
    Ok(report)
}

/// Sum of inverse discounts over the top-k ranks: `Σ_{i≤k} 1/log₂(1+i)`.
pub fn dcg_intercept_factor(k: usize) -> f64 {
    (1..=k).map(|i| 1.0 / (1.0 + i as f64).log2()).sum()
}

/// Affinity analysis of the discounted gain at cutoff `k`, with the
/// closed-form predicted intercept `Σ_{i≤k} (1−γ)/D_i` attached.
///
/// The regression runs on raw (un-negated) gains so the fitted intercept is
/// directly comparable to the formula.
pub fn dcg_affinity_check(
    family: &ScorerFamily,
    ds: &Dataset,
    k: usize,
    gamma: f64,
    draws: usize,
    queries_per_draw: usize,
    seed: u64,
) -> Result<AffinityReport> {
    let mut report = affinity_core(
        family,
        ds,
        EvalKind::DcgGain { k },
        gamma,
        draws,
        queries_per_draw,
        seed,
    )?;
    report.predicted_intercept = Some((1.0 - gamma) * dcg_intercept_factor(k));
    Ok(report)
}

// ============================================================================
// Non-order-preservation counterexample
// ============================================================================

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleConfig {
    /// Noise level; must exceed 1/2 (below that no ordering guarantee exists
    /// for any loss).
    pub gamma: f64,
    /// Output scales `a` to try for the scaled oracle scorer.
    pub scale_grid: Vec<f64>,
    /// Corruption draws for the pairwise Monte-Carlo estimate.
    pub draws: usize,
    pub seed: u64,
}

impl CounterexampleConfig {
    pub fn new(gamma: f64, scale_grid: Vec<f64>) -> Result<Self> {
        if !(gamma > 0.5 && gamma <= 1.0) {
            return Err(Error::invalid(format!(
                "gamma must lie in (0.5, 1], got {gamma}"
            )));
        }
        if scale_grid.is_empty() || scale_grid.iter().any(|a| !a.is_finite() || *a <= 0.0) {
            return Err(Error::invalid("scale grid must be nonempty and positive"));
        }
        Ok(Self {
            gamma,
            scale_grid,
            draws: 200,
            seed: 0,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleRisk {
    pub scale: f64,
    pub clean: f64,
    pub noisy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleReport {
    /// True when some scale `a` makes the scaled oracle cleaner-but-noisier
    /// than the bounded random scorer: the noisy risk reverses the clean
    /// preference.
    pub order_reversed: bool,
    pub witness_scale: Option<f64>,
    pub oracle_rows: Vec<ScaleRisk>,
    pub random_clean: f64,
    pub random_noisy: f64,
}

/// Expected noisy risk of a scorer.
///
/// Pointwise risks are linear in the per-document labels, so the expectation
/// over flips is the exact mixture `γ·L + (1−γ)·L⁻` with `L⁻` the risk under
/// complemented labels. Pairwise risks condition on mixed noisy pairs, so
/// they are averaged over `draws` corruption draws instead.
fn expected_noisy_risk(
    scorer: &dyn Scorer,
    ds: &Dataset,
    flipped: &Dataset,
    kind: LossKind,
    mode: LossMode,
    config: &CounterexampleConfig,
) -> Result<f64> {
    match mode {
        LossMode::Pointwise => {
            let clean = empirical_risk(scorer, ds, kind, mode, LabelSet::Clean)?.value;
            let mirrored = empirical_risk(scorer, flipped, kind, mode, LabelSet::Clean)?.value;
            Ok(config.gamma * clean + (1.0 - config.gamma) * mirrored)
        }
        LossMode::Pairwise => {
            let mut sum = 0.0;
            for d in 0..config.draws {
                let spec = crate::noise::NoiseSpec::new(
                    config.gamma,
                    derive_seed(config.seed, &[seeding::DOMAIN_DRAW, d as u64]),
                )?;
                let noisy = crate::noise::corrupt_dataset(ds, &spec)?;
                sum += empirical_risk(scorer, &noisy, kind, mode, LabelSet::Noisy)?.value;
            }
            Ok(sum / config.draws as f64)
        }
    }
}

/// Probes whether scaling up the (centered) oracle scorer can make its noisy
/// risk worse than a bounded random scorer's while its clean risk stays
/// better — the signature failure of non-order-preserving losses.
///
/// The reversal mechanism needs the scaled oracle's clean risk to head
/// toward zero as the scale grows, so the dataset should carry
/// deterministic (thresholded) labels; with sampled labels the Bayes errors
/// blow up the clean risk of unbounded losses as well.
pub fn counterexample_check(
    ds: &Dataset,
    kind: LossKind,
    mode: LossMode,
    config: &CounterexampleConfig,
) -> Result<CounterexampleReport> {
    if !ds.has_oracle() {
        return Err(Error::invalid(
            "counterexample check requires a synthetic dataset with stored oracles",
        ));
    }
    if config.draws == 0 {
        return Err(Error::invalid("draws must be ≥ 1"));
    }

    let mut flipped = ds.clone();
    for doc in flipped.queries.iter_mut().flat_map(|g| &mut g.documents) {
        doc.label = 1 - doc.label;
    }

    let random = BoundedRandomScorer {
        seed: derive_seed(config.seed, &[seeding::DOMAIN_RANDOM_SCORER]),
    };
    let random_clean = empirical_risk(&random, ds, kind, mode, LabelSet::Clean)?.value;
    let random_noisy = expected_noisy_risk(&random, ds, &flipped, kind, mode, config)?;

    let mut rows = Vec::with_capacity(config.scale_grid.len());
    let mut witness_scale = None;
    for &a in &config.scale_grid {
        let scorer = ScaledOracleScorer { scale: a };
        let clean = empirical_risk(&scorer, ds, kind, mode, LabelSet::Clean)?.value;
        let noisy = expected_noisy_risk(&scorer, ds, &flipped, kind, mode, config)?;
        if clean < random_clean && noisy > random_noisy && witness_scale.is_none() {
            witness_scale = Some(a);
        }
        rows.push(ScaleRisk {
            scale: a,
            clean,
            noisy,
        });
    }

    Ok(CounterexampleReport {
        order_reversed: witness_scale.is_some(),
        witness_scale,
        oracle_rows: rows,
        random_clean,
        random_noisy,
    })
}

// ============================================================================
// Finite-sample bound calculators
// ============================================================================

fn validate_bound_inputs(n: u64, gamma: f64, shatter_log: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("sample size n must be ≥ 1"));
    }
    if !(gamma > 0.5 && gamma <= 1.0) {
        return Err(Error::invalid(format!(
            "gamma must lie in (0.5, 1], got {gamma}"
        )));
    }
    if !shatter_log.is_finite() {
        return Err(Error::invalid("shatter_log must be finite"));
    }
    Ok(())
}

/// Probability bound on the excess clean risk of noisy ERM exceeding `ε`:
/// `min(1, 8·S(F,n)·exp(−n·ε²·(2γ−1)²/128))` with `shatter_log = log S(F,n)`.
pub fn deviation_bound(n: u64, epsilon: f64, gamma: f64, shatter_log: f64) -> Result<f64> {
    validate_bound_inputs(n, gamma, shatter_log)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let scaled_deviation = epsilon * (2.0 * gamma - 1.0);
    let exponent =
        8.0f64.ln() + shatter_log - n as f64 * scaled_deviation * scaled_deviation / 128.0;
    Ok(exponent.exp().min(1.0))
}

/// Bound on the expected excess clean risk of noisy ERM:
/// `16·√(log(8e·S(F,n)) / (2n(2γ−1)²))`.
pub fn expected_excess_bound(n: u64, gamma: f64, shatter_log: f64) -> Result<f64> {
    validate_bound_inputs(n, gamma, shatter_log)?;
    let noise_term = 2.0 * gamma - 1.0;
    let log_term = (8.0 * std::f64::consts::E).ln() + shatter_log;
    Ok(16.0 * (log_term / (2.0 * n as f64 * noise_term * noise_term)).sqrt())
}

/// Deviation bound when the noisy empirical risk is only almost-minimized:
/// within `epsilon_n` of its infimum with probability ≥ `1−delta_n`. The
/// exponent's deviation shrinks to `ε(2γ−1) − ε_n` and `δ_n` adds on.
pub fn almost_minimizer_deviation_bound(
    n: u64,
    epsilon: f64,
    gamma: f64,
    shatter_log: f64,
    epsilon_n: f64,
    delta_n: f64,
) -> Result<f64> {
    validate_bound_inputs(n, gamma, shatter_log)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    if epsilon_n < 0.0 || !(0.0..=1.0).contains(&delta_n) {
        return Err(Error::invalid(
            "epsilon_n must be ≥ 0 and delta_n must lie in [0, 1]",
        ));
    }
    let margin = epsilon * (2.0 * gamma - 1.0) - epsilon_n;
    if margin <= 0.0 {
        return Ok(1.0);
    }
    let exponent = 8.0f64.ln() + shatter_log - n as f64 * margin * margin / 128.0;
    Ok((delta_n + exponent.exp()).min(1.0))
}
