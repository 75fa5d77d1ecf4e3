//! Ranking metrics, expressed uniformly as losses to be minimized.
//!
//! Every metric here is the negation of its textbook value, so more negative
//! is better and a perfect ranking scores −1 (for the normalized metrics).
//! Metrics are computed per query and averaged across queries by
//! [`mean_metric`]; queries on which a metric is undefined (no relevant
//! documents, or no label diversity for AUC) are skipped and counted rather
//! than imputed.
//!
//! Sorting is deterministic: descending score with ascending original index
//! as the tie-break. The DCG discount is `D_i = log₂(1 + i)` at 1-based rank
//! `i`.

use crate::error::{Error, Result};

/// Scores and binary labels for the documents of one query.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedQuery {
    pub query_id: String,
    pub scores: Vec<f64>,
    pub labels: Vec<u8>,
}

impl RankedQuery {
    /// Validates lengths, label range, and score finiteness.
    pub fn new(query_id: impl Into<String>, scores: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if scores.is_empty() || scores.len() != labels.len() {
            return Err(Error::invalid(format!(
                "scores ({}) and labels ({}) must be nonempty and equal-length",
                scores.len(),
                labels.len()
            )));
        }
        if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("non-finite score {s}")));
        }
        if let Some(l) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::invalid(format!("non-binary label {l}")));
        }
        Ok(Self {
            query_id: query_id.into(),
            scores,
            labels,
        })
    }
}

/// A metric selector, parseable from its CLI/CSV name: `auc`, `map`,
/// `dcg@K`, `ndcg@K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Auc,
    Map,
    DcgAt(usize),
    NdcgAt(usize),
}

impl Metric {
    pub fn name(self) -> String {
        match self {
            Metric::Auc => "auc".into(),
            Metric::Map => "map".into(),
            Metric::DcgAt(k) => format!("dcg@{k}"),
            Metric::NdcgAt(k) => format!("ndcg@{k}"),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auc" => return Ok(Metric::Auc),
            "map" => return Ok(Metric::Map),
            _ => {}
        }
        for (prefix, make) in [
            ("dcg@", Metric::DcgAt as fn(usize) -> Metric),
            ("ndcg@", Metric::NdcgAt as fn(usize) -> Metric),
        ] {
            if let Some(rest) = s.strip_prefix(prefix) {
                let k: usize = rest
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad cutoff in metric '{s}'")))?;
                if k == 0 {
                    return Err(Error::invalid(format!("metric cutoff must be ≥ 1 in '{s}'")));
                }
                return Ok(make(k));
            }
        }
        Err(Error::invalid(format!("unknown metric '{s}'")))
    }
}

/// Mean of a per-query metric over the queries where it is defined.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricValue {
    pub value: f64,
    pub queries_used: usize,
    pub queries_skipped: usize,
}

/// Document indices sorted by descending score, original order breaking ties.
pub fn ranked_indices(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    // Stable sort keeps ascending original index within tie groups.
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    idx
}

fn discount(rank: usize) -> f64 {
    (1.0 + rank as f64).log2()
}

/// Discounted gain `Σ_{i≤k} y_{π(i)} / log₂(1+i)` for a precomputed ranking.
pub(crate) fn dcg_gain_ordered(order: &[usize], labels: &[u8], k: usize) -> f64 {
    order
        .iter()
        .take(k)
        .enumerate()
        .map(|(pos, &doc)| f64::from(labels[doc]) / discount(pos + 1))
        .sum()
}

/// Discounted gain `Σ_{i≤k} y_{π(i)} / log₂(1+i)` of the induced ranking.
pub(crate) fn dcg_gain_raw(scores: &[f64], labels: &[u8], k: usize) -> f64 {
    dcg_gain_ordered(&ranked_indices(scores), labels, k)
}

/// Best achievable discounted gain: all relevant documents ranked first.
pub(crate) fn max_dcg_gain_raw(labels: &[u8], k: usize) -> f64 {
    let relevant = labels.iter().filter(|&&l| l == 1).count();
    (1..=relevant.min(k)).map(|pos| 1.0 / discount(pos)).sum()
}

pub(crate) fn dcg_raw(scores: &[f64], labels: &[u8], k: usize) -> f64 {
    // `0.0 - gain` keeps an all-irrelevant ranking at +0, not -0.
    0.0 - dcg_gain_raw(scores, labels, k)
}

pub(crate) fn ndcg_raw(scores: &[f64], labels: &[u8], k: usize) -> Option<f64> {
    let max_gain = max_dcg_gain_raw(labels, k);
    if max_gain == 0.0 {
        return None;
    }
    Some(dcg_raw(scores, labels, k) / max_gain)
}

/// Pair-ordering counts over all (relevant, irrelevant) pairs, given a
/// precomputed descending-score order.
/// Returns (correctly ordered, tied, positives, negatives).
pub(crate) fn auc_counts_ordered(
    order: &[usize],
    scores: &[f64],
    labels: &[u8],
) -> (u64, u64, u64, u64) {
    let total_pos = labels.iter().filter(|&&l| l == 1).count() as u64;
    let total_neg = labels.len() as u64 - total_pos;

    let mut concordant = 0u64;
    let mut tied = 0u64;
    let mut neg_seen = 0u64;
    let mut i = 0;
    while i < order.len() {
        // Walk one tie group of equal scores.
        let mut j = i;
        let mut pos_g = 0u64;
        let mut neg_g = 0u64;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] == 1 {
                pos_g += 1;
            } else {
                neg_g += 1;
            }
            j += 1;
        }
        // Positives in this group beat every negative strictly below it.
        concordant += pos_g * (total_neg - neg_seen - neg_g);
        tied += pos_g * neg_g;
        neg_seen += neg_g;
        i = j;
    }
    (concordant, tied, total_pos, total_neg)
}

/// Pair-ordering counts over all (relevant, irrelevant) pairs.
#[cfg(test)]
pub(crate) fn auc_counts(scores: &[f64], labels: &[u8]) -> (u64, u64, u64, u64) {
    auc_counts_ordered(&ranked_indices(scores), scores, labels)
}

pub(crate) fn auc_ordered(order: &[usize], scores: &[f64], labels: &[u8]) -> Option<f64> {
    let (concordant, tied, pos, neg) = auc_counts_ordered(order, scores, labels);
    if pos == 0 || neg == 0 {
        return None;
    }
    Some(0.0 - (concordant as f64 + 0.5 * tied as f64) / (pos * neg) as f64)
}

pub(crate) fn auc_raw(scores: &[f64], labels: &[u8]) -> Option<f64> {
    auc_ordered(&ranked_indices(scores), scores, labels)
}

pub(crate) fn map_ordered(order: &[usize], labels: &[u8]) -> Option<f64> {
    let relevant = labels.iter().filter(|&&l| l == 1).count();
    if relevant == 0 {
        return None;
    }
    let mut hits = 0u64;
    let mut sum = 0.0;
    for (pos, &doc) in order.iter().enumerate() {
        if labels[doc] == 1 {
            hits += 1;
            sum += hits as f64 / (pos + 1) as f64;
        }
    }
    Some(-(sum / relevant as f64))
}

pub(crate) fn map_raw(scores: &[f64], labels: &[u8]) -> Option<f64> {
    map_ordered(&ranked_indices(scores), labels)
}

pub(crate) fn ndcg_ordered(order: &[usize], labels: &[u8], k: usize) -> Option<f64> {
    let max_gain = max_dcg_gain_raw(labels, k);
    if max_gain == 0.0 {
        return None;
    }
    Some((0.0 - dcg_gain_ordered(order, labels, k)) / max_gain)
}

pub(crate) fn eval_metric_ordered(
    metric: Metric,
    order: &[usize],
    scores: &[f64],
    labels: &[u8],
) -> Option<f64> {
    match metric {
        Metric::Auc => auc_ordered(order, scores, labels),
        Metric::Map => map_ordered(order, labels),
        Metric::DcgAt(k) => Some(0.0 - dcg_gain_ordered(order, labels, k)),
        Metric::NdcgAt(k) => ndcg_ordered(order, labels, k),
    }
}

/// Negated DCG@k of the ranking induced by `q.scores`; a loss in
/// `[−Σ 1/D_i, 0]`.
pub fn dcg_at_k(q: &RankedQuery, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("dcg cutoff k must be ≥ 1"));
    }
    Ok(dcg_raw(&q.scores, &q.labels, k))
}

/// Negated NDCG@k, a loss in `[−1, 0]`; `None` when the query has no
/// relevant documents.
pub fn ndcg_at_k(q: &RankedQuery, k: usize) -> Result<Option<f64>> {
    if k == 0 {
        return Err(Error::invalid("ndcg cutoff k must be ≥ 1"));
    }
    Ok(ndcg_raw(&q.scores, &q.labels, k))
}

/// Negated AUC over all (relevant, irrelevant) pairs, ties at half credit;
/// `None` when the query lacks positives or negatives.
pub fn auc(q: &RankedQuery) -> Option<f64> {
    auc_raw(&q.scores, &q.labels)
}

/// Negated average precision; `None` when the query has no relevant
/// documents.
pub fn map(q: &RankedQuery) -> Option<f64> {
    map_raw(&q.scores, &q.labels)
}

pub(crate) fn eval_metric_raw(metric: Metric, scores: &[f64], labels: &[u8]) -> Option<f64> {
    match metric {
        Metric::Auc => auc_raw(scores, labels),
        Metric::Map => map_raw(scores, labels),
        Metric::DcgAt(k) => Some(dcg_raw(scores, labels, k)),
        Metric::NdcgAt(k) => ndcg_raw(scores, labels, k),
    }
}

/// Averages `metric` over the queries on which it is defined.
///
/// Errors when `queries` is empty or the metric is undefined on all of them.
pub fn mean_metric(queries: &[RankedQuery], metric: Metric) -> Result<MetricValue> {
    if queries.is_empty() {
        return Err(Error::invalid("no queries to average over"));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    for q in queries {
        if let Some(v) = eval_metric_raw(metric, &q.scores, &q.labels) {
            sum += v;
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::Undefined(format!(
            "metric undefined on all queries ({metric})"
        )));
    }
    Ok(MetricValue {
        value: sum / used as f64,
        queries_used: used,
        queries_skipped: queries.len() - used,
    })
}
