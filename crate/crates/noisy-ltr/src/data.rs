//! Dataset model, synthetic data generation, and LETOR/SVMLight text I/O.
//!
//! The synthetic generator draws, per query, a weight vector `θ_q` from an
//! isotropic gaussian, then documents `X ~ N(0, I_d)` with labels from
//! `P(Y=1 | X) = σ(⟨θ_q, X⟩ + b_q)`. The per-query oracle `(θ_q, b_q)` is
//! stored on the query group so downstream simulations can build scorers
//! around the true class-probability function.
//!
//! The text format is the SVMLight/LETOR line format:
//!
//! ```text
//! <label> qid:<id> <index>:<value> ... [# comment]
//! ```
//!
//! with 1-based feature indices, missing indices read as 0, and the comment
//! kept as an optional document id. Datasets round-trip through this format
//! exactly (float values are written in shortest round-trip form).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::distributions::{Bernoulli, Distribution};
use rand::seq::SliceRandom;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::losses::sigmoid;
use crate::seeding::{self, derive_rng};

/// Which label variant an estimator should read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSet {
    Clean,
    Noisy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub features: Vec<f64>,
    pub label: u8,
    /// Corrupted label, populated by `noise::corrupt_dataset`.
    pub noisy_label: Option<u8>,
    pub doc_id: Option<String>,
}

impl Document {
    pub fn label_for(&self, set: LabelSet) -> Result<u8> {
        match set {
            LabelSet::Clean => Ok(self.label),
            LabelSet::Noisy => self
                .noisy_label
                .ok_or_else(|| Error::invalid("noisy labels requested but none present")),
        }
    }
}

/// The true class-probability model of a synthetic query:
/// `P(Y=1 | x) = σ(⟨θ, x⟩ + bias)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOracle {
    pub theta: Vec<f64>,
    pub bias: f64,
}

impl LinearOracle {
    pub fn logit(&self, x: &[f64]) -> f64 {
        self.theta.iter().zip(x).map(|(t, v)| t * v).sum::<f64>() + self.bias
    }

    pub fn prob(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// `P(Y=1|x) − 1/2`; same induced ranking as `prob`, but sign-bearing,
    /// which pointwise margins need.
    pub fn centered_score(&self, x: &[f64]) -> f64 {
        self.prob(x) - 0.5
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryGroup {
    pub query_id: String,
    pub documents: Vec<Document>,
    /// Present on synthetic data only.
    pub oracle: Option<LinearOracle>,
}

impl QueryGroup {
    pub fn labels(&self, set: LabelSet) -> Result<Vec<u8>> {
        self.documents.iter().map(|d| d.label_for(set)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Synthetic,
    LetorFile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub queries: Vec<QueryGroup>,
    pub feature_dim: usize,
    pub provenance: Provenance,
}

impl Dataset {
    /// Validates that groups are nonempty and dimensions agree.
    pub fn new(queries: Vec<QueryGroup>, provenance: Provenance) -> Result<Self> {
        if queries.is_empty() {
            return Err(Error::invalid("dataset has no queries"));
        }
        let mut dim = None;
        for group in &queries {
            if group.documents.is_empty() {
                return Err(Error::invalid(format!(
                    "query {} has no documents",
                    group.query_id
                )));
            }
            for doc in &group.documents {
                match dim {
                    None => dim = Some(doc.features.len()),
                    Some(d) if d == doc.features.len() => {}
                    Some(d) => {
                        return Err(Error::invalid(format!(
                            "inconsistent feature dimension: {} vs {}",
                            d,
                            doc.features.len()
                        )))
                    }
                }
            }
        }
        Ok(Self {
            queries,
            feature_dim: dim.unwrap(),
            provenance,
        })
    }

    pub fn total_docs(&self) -> usize {
        self.queries.iter().map(|q| q.documents.len()).sum()
    }

    /// True when every query group carries a stored oracle.
    pub fn has_oracle(&self) -> bool {
        self.queries.iter().all(|q| q.oracle.is_some())
    }

    /// Promotes noisy labels to the primary label slot (used when writing
    /// corrupted copies of a dataset). Errors if any document lacks one.
    pub fn adopt_noisy_labels(&self) -> Result<Dataset> {
        let mut out = self.clone();
        for group in &mut out.queries {
            for doc in &mut group.documents {
                doc.label = doc
                    .noisy_label
                    .take()
                    .ok_or_else(|| Error::invalid("document has no noisy label to adopt"))?;
            }
        }
        Ok(out)
    }
}

/// How synthetic labels are produced from the oracle probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelRule {
    /// `Y ~ Bernoulli(P(Y=1|X))`.
    Sampled,
    /// `Y = 1(P(Y=1|X) ≥ 1/2)`; deterministic labels, separable by the
    /// oracle's own hyperplane. Useful for no-noise sanity runs.
    Thresholded,
}

/// How the per-query weight vectors are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaMode {
    /// Fresh `θ_q` per query: each query has its own label model, so no
    /// single linear scorer fits every query.
    PerQuery,
    /// One `θ` shared by all queries. Combined with
    /// [`LabelRule::Thresholded`] this makes the whole dataset linearly
    /// separable by one model.
    Shared,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub num_queries: usize,
    pub docs_per_query: usize,
    pub feature_dim: usize,
    pub seed: u64,
    /// When set, per-query target prevalences are spaced evenly over this
    /// range and realized by a bias offset on the oracle logit.
    pub prevalence_range: Option<(f64, f64)>,
    pub label_rule: LabelRule,
    pub theta_mode: ThetaMode,
}

impl SyntheticSpec {
    /// 50 queries × 10 documents with 5 features (500 samples total).
    pub fn desk_default(seed: u64) -> Self {
        Self {
            num_queries: 50,
            docs_per_query: 10,
            feature_dim: 5,
            seed,
            prevalence_range: None,
            label_rule: LabelRule::Sampled,
            theta_mode: ThetaMode::PerQuery,
        }
    }

    /// The desk shape with a shared weight vector and thresholded labels:
    /// one linear scorer ranks every query perfectly, so no-noise training
    /// runs have a known target.
    pub fn desk_separable(seed: u64) -> Self {
        Self {
            label_rule: LabelRule::Thresholded,
            theta_mode: ThetaMode::Shared,
            ..Self::desk_default(seed)
        }
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Bias offset that tilts `E_X[σ(⟨θ, X⟩ + b)]` toward `target` for
/// `X ~ N(0, I)`, via the logistic-normal mean approximation
/// `E[σ(Z + b)] ≈ σ(b / √(1 + π·Var(Z)/8))`.
fn prevalence_bias(theta: &[f64], target: f64) -> f64 {
    let var = theta.iter().map(|t| t * t).sum::<f64>();
    logit(target) * (1.0 + PI * var / 8.0).sqrt()
}

/// Generates a synthetic dataset. Deterministic given the spec; each query
/// draws from its own `(seed, query)` stream, so results do not depend on
/// generation order.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.num_queries == 0 || spec.docs_per_query == 0 || spec.feature_dim == 0 {
        return Err(Error::invalid(
            "num_queries, docs_per_query, and feature_dim must all be positive",
        ));
    }
    if let Some((lo, hi)) = spec.prevalence_range {
        if !(0.0 < lo && lo <= hi && hi < 1.0) {
            return Err(Error::invalid(format!(
                "prevalence range must satisfy 0 < lo ≤ hi < 1, got ({lo}, {hi})"
            )));
        }
    }

    let mut queries = Vec::with_capacity(spec.num_queries);
    for q in 0..spec.num_queries {
        let theta_tag = match spec.theta_mode {
            ThetaMode::PerQuery => q as u64,
            ThetaMode::Shared => 0,
        };
        let mut theta_rng = derive_rng(spec.seed, &[seeding::DOMAIN_SYNTH_THETA, theta_tag]);
        let theta: Vec<f64> = (0..spec.feature_dim)
            .map(|_| StandardNormal.sample(&mut theta_rng))
            .collect();
        let bias = match spec.prevalence_range {
            None => 0.0,
            Some((lo, hi)) => {
                let t = if spec.num_queries == 1 {
                    0.5
                } else {
                    q as f64 / (spec.num_queries - 1) as f64
                };
                prevalence_bias(&theta, lo + (hi - lo) * t)
            }
        };
        let oracle = LinearOracle { theta, bias };

        let mut doc_rng = derive_rng(spec.seed, &[seeding::DOMAIN_SYNTH_DOCS, q as u64]);
        let mut documents = Vec::with_capacity(spec.docs_per_query);
        for _ in 0..spec.docs_per_query {
            let features: Vec<f64> = (0..spec.feature_dim)
                .map(|_| StandardNormal.sample(&mut doc_rng))
                .collect();
            let p = oracle.prob(&features);
            let label = match spec.label_rule {
                LabelRule::Sampled => {
                    u8::from(Bernoulli::new(p).expect("probability").sample(&mut doc_rng))
                }
                LabelRule::Thresholded => u8::from(p >= 0.5),
            };
            documents.push(Document {
                features,
                label,
                noisy_label: None,
                doc_id: None,
            });
        }
        queries.push(QueryGroup {
            query_id: (q + 1).to_string(),
            documents,
            oracle: Some(oracle),
        });
    }
    Dataset::new(queries, Provenance::Synthetic)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses a LETOR/SVMLight file. Lines are grouped by `qid` in order of
/// first appearance; missing feature indices are zero-filled and every
/// document is padded to the largest feature index seen in the file.
/// Labels are kept as raw integers (binarize separately).
pub fn parse_letor(path: impl AsRef<Path>) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    parse_letor_reader(BufReader::new(file))
}

pub fn parse_letor_reader<R: BufRead>(reader: R) -> Result<Dataset> {
    struct RawDoc {
        label: u8,
        sparse: Vec<(usize, f64)>,
        doc_id: Option<String>,
    }

    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<RawDoc>> = HashMap::new();
    let mut max_index = 0usize;

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let (content, comment) = match line.split_once('#') {
            Some((c, rest)) => (c, Some(rest.trim())),
            None => (line.as_str(), None),
        };
        if content.trim().is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();

        let label_tok = tokens.next().unwrap();
        let label: u8 = label_tok
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad label '{label_tok}'")))?;

        let qid_tok = tokens
            .next()
            .ok_or_else(|| parse_err(lineno, "missing qid token"))?;
        let qid = qid_tok
            .strip_prefix("qid:")
            .ok_or_else(|| parse_err(lineno, format!("expected 'qid:<id>', got '{qid_tok}'")))?;
        if qid.is_empty() {
            return Err(parse_err(lineno, "empty qid"));
        }

        let mut sparse = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected '<index>:<value>', got '{tok}'")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad feature index '{idx}'")))?;
            if idx == 0 {
                return Err(parse_err(lineno, "feature indices are 1-based"));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad feature value '{val}'")))?;
            if !val.is_finite() {
                return Err(parse_err(lineno, format!("non-finite feature value '{val}'")));
            }
            if sparse.iter().any(|(j, _)| *j == idx) {
                return Err(parse_err(lineno, format!("duplicate feature index {idx}")));
            }
            sparse.push((idx, val));
        }
        max_index = max_index.max(sparse.iter().map(|(j, _)| *j).max().unwrap_or(0));

        let doc_id = comment.filter(|c| !c.is_empty()).map(str::to_owned);
        if !groups.contains_key(qid) {
            order.push(qid.to_owned());
        }
        groups
            .entry(qid.to_owned())
            .or_default()
            .push(RawDoc { label, sparse, doc_id });
    }

    if order.is_empty() {
        return Err(Error::invalid("file contains no data lines"));
    }

    let queries = order
        .into_iter()
        .map(|qid| {
            let documents = groups
                .remove(&qid)
                .unwrap()
                .into_iter()
                .map(|raw| {
                    let mut features = vec![0.0; max_index];
                    for (idx, val) in raw.sparse {
                        features[idx - 1] = val;
                    }
                    Document {
                        features,
                        label: raw.label,
                        noisy_label: None,
                        doc_id: raw.doc_id,
                    }
                })
                .collect();
            QueryGroup {
                query_id: qid,
                documents,
                oracle: None,
            }
        })
        .collect();
    Dataset::new(queries, Provenance::LetorFile)
}

/// Writes the dataset in LETOR text form (clean labels, dense features,
/// UTF-8, LF line endings).
pub fn write_letor(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    for group in &ds.queries {
        for doc in &group.documents {
            write!(file, "{} qid:{}", doc.label, group.query_id)?;
            for (j, v) in doc.features.iter().enumerate() {
                write!(file, " {}:{}", j + 1, v)?;
            }
            if let Some(id) = &doc.doc_id {
                write!(file, " # {id}")?;
            }
            writeln!(file)?;
        }
    }
    file.flush()?;
    Ok(())
}

/// Maps raw integer labels to binary: `1` iff `label ≥ threshold`.
pub fn binarize(ds: &Dataset, threshold: u8) -> Dataset {
    let mut out = ds.clone();
    for group in &mut out.queries {
        for doc in &mut group.documents {
            doc.label = u8::from(doc.label >= threshold);
            doc.noisy_label = doc.noisy_label.map(|l| u8::from(l >= threshold));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizeMode {
    /// Each feature mapped to `[0, 1]` within its query group; constant
    /// features map to 0. No fitted state.
    PerQueryMinMax,
    /// Global per-feature standardization; zero-variance features map to 0.
    /// Statistics are fit once (on the training split) and reapplied.
    GlobalStandardize,
}

impl std::str::FromStr for NormalizeMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-query-min-max" => Ok(NormalizeMode::PerQueryMinMax),
            "global-standardize" => Ok(NormalizeMode::GlobalStandardize),
            other => Err(Error::invalid(format!("unknown normalize mode '{other}'"))),
        }
    }
}

/// Feature normalizer; fit on one dataset, applicable to others.
#[derive(Debug, Clone)]
pub struct Normalizer {
    mode: NormalizeMode,
    /// (mean, sd) per feature for `GlobalStandardize`.
    stats: Option<(Vec<f64>, Vec<f64>)>,
}

impl Normalizer {
    pub fn fit(ds: &Dataset, mode: NormalizeMode) -> Self {
        let stats = match mode {
            NormalizeMode::PerQueryMinMax => None,
            NormalizeMode::GlobalStandardize => {
                let d = ds.feature_dim;
                let n = ds.total_docs() as f64;
                let mut mean = vec![0.0; d];
                for doc in ds.queries.iter().flat_map(|g| &g.documents) {
                    for (m, v) in mean.iter_mut().zip(&doc.features) {
                        *m += v;
                    }
                }
                for m in &mut mean {
                    *m /= n;
                }
                let mut var = vec![0.0; d];
                for doc in ds.queries.iter().flat_map(|g| &g.documents) {
                    for ((s, v), m) in var.iter_mut().zip(&doc.features).zip(&mean) {
                        *s += (v - m) * (v - m);
                    }
                }
                let sd = var.into_iter().map(|s| (s / n).sqrt()).collect();
                Some((mean, sd))
            }
        };
        Self { mode, stats }
    }

    pub fn apply(&self, ds: &Dataset) -> Dataset {
        let mut out = ds.clone();
        match self.mode {
            NormalizeMode::PerQueryMinMax => {
                for group in &mut out.queries {
                    for j in 0..out.feature_dim {
                        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                        for doc in &group.documents {
                            lo = lo.min(doc.features[j]);
                            hi = hi.max(doc.features[j]);
                        }
                        let range = hi - lo;
                        for doc in &mut group.documents {
                            doc.features[j] = if range == 0.0 {
                                0.0
                            } else {
                                (doc.features[j] - lo) / range
                            };
                        }
                    }
                }
            }
            NormalizeMode::GlobalStandardize => {
                let (mean, sd) = self.stats.as_ref().expect("fit populates stats");
                for doc in out.queries.iter_mut().flat_map(|g| &mut g.documents) {
                    for j in 0..doc.features.len() {
                        doc.features[j] = if sd[j] == 0.0 {
                            0.0
                        } else {
                            (doc.features[j] - mean[j]) / sd[j]
                        };
                    }
                }
            }
        }
        out
    }
}

/// Fits and applies in one step (statistics from `ds` itself).
pub fn normalize_features(ds: &Dataset, mode: NormalizeMode) -> Dataset {
    Normalizer::fit(ds, mode).apply(ds)
}

/// Splits at query granularity. The holdout side receives
/// `n − ceil(n·train_frac)` whole queries, chosen by a seeded shuffle;
/// original query order is preserved within each side.
pub fn split(ds: &Dataset, train_frac: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::invalid(format!(
            "train_frac must lie strictly between 0 and 1, got {train_frac}"
        )));
    }
    let n = ds.queries.len();
    // Small guard so that exact products like 10·0.8 do not round down.
    let train_count = (n as f64 * train_frac - 1e-9).ceil() as usize;
    let holdout_count = n - train_count;
    if train_count == 0 || holdout_count == 0 {
        return Err(Error::invalid(format!(
            "split of {n} queries at {train_frac} would leave one side empty"
        )));
    }

    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut derive_rng(seed, &[seeding::DOMAIN_SPLIT]));
    let mut train_idx = indices[..train_count].to_vec();
    let mut holdout_idx = indices[train_count..].to_vec();
    train_idx.sort_unstable();
    holdout_idx.sort_unstable();

    let pick = |idx: &[usize]| -> Result<Dataset> {
        Dataset::new(
            idx.iter().map(|&i| ds.queries[i].clone()).collect(),
            ds.provenance,
        )
    };
    Ok((pick(&train_idx)?, pick(&holdout_idx)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::auc_raw;

    fn tiny_letor() -> &'static str {
        "1 qid:10 1:0.5 2:0.3 # docA\n2 qid:10 2:0.3\n0 qid:7 1:-1.5 2:2 3:0.25\n"
    }

    #[test]
    fn parse_reads_the_format() {
        let ds = parse_letor_reader(tiny_letor().as_bytes()).unwrap();
        assert_eq!(ds.feature_dim, 3);
        assert_eq!(ds.queries.len(), 2);
        // Groups appear in first-occurrence order.
        assert_eq!(ds.queries[0].query_id, "10");
        assert_eq!(ds.queries[1].query_id, "7");

        let doc_a = &ds.queries[0].documents[0];
        assert_eq!(doc_a.label, 1);
        assert_eq!(doc_a.features, vec![0.5, 0.3, 0.0]);
        assert_eq!(doc_a.doc_id.as_deref(), Some("docA"));

        // Missing index 1 zero-filled, padded to the global dimension.
        let doc_b = &ds.queries[0].documents[1];
        assert_eq!(doc_b.label, 2);
        assert_eq!(doc_b.features, vec![0.0, 0.3, 0.0]);
        assert_eq!(doc_b.doc_id, None);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_letor_reader("1 qid:1 1:0.5\n1 qd:10 1:0.5\n".as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        assert!(msg.contains("qid"), "{msg}");

        for bad in [
            "x qid:1 1:0.5\n",
            "1 qid:1 0:0.5\n",
            "1 qid:1 1:abc\n",
            "1 qid:1 1:0.5 1:0.6\n",
            "1\n",
        ] {
            assert!(parse_letor_reader(bad.as_bytes()).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn letor_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        let b = dir.path().join("b.txt");

        let ds = generate_synthetic(&SyntheticSpec::desk_default(3)).unwrap();
        write_letor(&ds, &a).unwrap();
        let parsed = parse_letor(&a).unwrap();
        write_letor(&parsed, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

        // Field-level identity for what the format carries.
        assert_eq!(parsed.queries.len(), ds.queries.len());
        for (p, o) in parsed.queries.iter().zip(&ds.queries) {
            assert_eq!(p.query_id, o.query_id);
            for (pd, od) in p.documents.iter().zip(&o.documents) {
                assert_eq!(pd.features, od.features);
                assert_eq!(pd.label, od.label);
                assert_eq!(pd.doc_id, od.doc_id);
            }
        }
    }

    #[test]
    fn binarize_thresholds_and_is_idempotent() {
        let mut ds = parse_letor_reader("0 qid:1 1:1\n1 qid:1 1:2\n2 qid:1 1:3\n".as_bytes()).unwrap();
        let labels = |d: &Dataset| -> Vec<u8> {
            d.queries[0].documents.iter().map(|x| x.label).collect()
        };
        assert_eq!(labels(&binarize(&ds, 1)), vec![0, 1, 1]);
        assert_eq!(labels(&binarize(&ds, 2)), vec![0, 0, 1]);
        ds = binarize(&ds, 1);
        assert_eq!(labels(&binarize(&ds, 1)), labels(&ds));
    }

    #[test]
    fn min_max_normalization() {
        let text = "0 qid:1 1:2\n0 qid:1 1:4\n1 qid:1 1:6\n";
        let ds = parse_letor_reader(text.as_bytes()).unwrap();
        let norm = normalize_features(&ds, NormalizeMode::PerQueryMinMax);
        let col: Vec<f64> = norm.queries[0].documents.iter().map(|d| d.features[0]).collect();
        assert_eq!(col, vec![0.0, 0.5, 1.0]);

        // Idempotent on already-normalized data.
        let again = normalize_features(&norm, NormalizeMode::PerQueryMinMax);
        assert_eq!(again, norm);

        let constant = parse_letor_reader("0 qid:1 1:5\n1 qid:1 1:5\n".as_bytes()).unwrap();
        let norm = normalize_features(&constant, NormalizeMode::PerQueryMinMax);
        assert!(norm.queries[0].documents.iter().all(|d| d.features[0] == 0.0));
    }

    #[test]
    fn standardize_fits_on_train_and_reapplies() {
        let ds = generate_synthetic(&SyntheticSpec::desk_default(5)).unwrap();
        let (train, holdout) = split(&ds, 0.8, 1).unwrap();
        let normalizer = Normalizer::fit(&train, NormalizeMode::GlobalStandardize);
        let train_n = normalizer.apply(&train);

        let n = train_n.total_docs() as f64;
        for j in 0..train_n.feature_dim {
            let col: Vec<f64> = train_n
                .queries
                .iter()
                .flat_map(|g| g.documents.iter().map(move |d| d.features[j]))
                .collect();
            let mean = col.iter().sum::<f64>() / n;
            let sd = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
            assert!(mean.abs() < 1e-12, "feature {j} mean {mean}");
            assert!((sd - 1.0).abs() < 1e-12, "feature {j} sd {sd}");
        }

        // Held-out data transforms with the training statistics, so its
        // columns need not be exactly standardized.
        let holdout_n = normalizer.apply(&holdout);
        assert_eq!(holdout_n.total_docs(), holdout.total_docs());
    }

    #[test]
    fn split_counts_and_determinism() {
        let ds = generate_synthetic(&SyntheticSpec {
            num_queries: 10,
            docs_per_query: 3,
            feature_dim: 2,
            seed: 8,
            prevalence_range: None,
            label_rule: LabelRule::Sampled,
            theta_mode: ThetaMode::PerQuery,
        })
        .unwrap();
        let (train, holdout) = split(&ds, 0.8, 4).unwrap();
        assert_eq!(train.queries.len(), 8);
        assert_eq!(holdout.queries.len(), 2);

        let (train2, holdout2) = split(&ds, 0.8, 4).unwrap();
        assert_eq!(train, train2);
        assert_eq!(holdout, holdout2);

        // Partition: every query lands on exactly one side.
        let mut ids: Vec<&str> = train
            .queries
            .iter()
            .chain(&holdout.queries)
            .map(|g| g.query_id.as_str())
            .collect();
        ids.sort_unstable();
        let mut expected: Vec<&str> = ds.queries.iter().map(|g| g.query_id.as_str()).collect();
        expected.sort_unstable();
        assert_eq!(ids, expected);

        assert!(split(&ds, 1.0, 4).is_err());
        assert!(split(&ds, 0.0, 4).is_err());
    }

    #[test]
    fn synthetic_generator_contracts() {
        assert!(generate_synthetic(&SyntheticSpec {
            num_queries: 5,
            docs_per_query: 0,
            feature_dim: 5,
            seed: 0,
            prevalence_range: None,
            label_rule: LabelRule::Sampled,
            theta_mode: ThetaMode::PerQuery,
        })
        .is_err());

        // Marginal positive rate ≈ 1/2 by symmetry: 10,000 documents.
        let big = generate_synthetic(&SyntheticSpec {
            num_queries: 1000,
            docs_per_query: 10,
            feature_dim: 5,
            seed: 17,
            prevalence_range: None,
            label_rule: LabelRule::Sampled,
            theta_mode: ThetaMode::PerQuery,
        })
        .unwrap();
        let positives: usize = big
            .queries
            .iter()
            .flat_map(|g| &g.documents)
            .filter(|d| d.label == 1)
            .count();
        let rate = positives as f64 / big.total_docs() as f64;
        assert!((rate - 0.5).abs() <= 0.015, "positive rate {rate}");

        // Determinism.
        let twin = generate_synthetic(&SyntheticSpec {
            num_queries: 1000,
            docs_per_query: 10,
            feature_dim: 5,
            seed: 17,
            prevalence_range: None,
            label_rule: LabelRule::Sampled,
            theta_mode: ThetaMode::PerQuery,
        })
        .unwrap();
        assert_eq!(big, twin);
    }

    #[test]
    fn prevalence_tilt_spans_the_range() {
        let ds = generate_synthetic(&SyntheticSpec {
            num_queries: 9,
            docs_per_query: 400,
            feature_dim: 5,
            seed: 23,
            prevalence_range: Some((0.1, 0.9)),
            label_rule: LabelRule::Sampled,
            theta_mode: ThetaMode::PerQuery,
        })
        .unwrap();
        let prevalence = |g: &QueryGroup| {
            g.documents.iter().filter(|d| d.label == 1).count() as f64 / g.documents.len() as f64
        };
        let first = prevalence(&ds.queries[0]);
        let last = prevalence(&ds.queries[8]);
        assert!(first < 0.25, "first-query prevalence {first}");
        assert!(last > 0.75, "last-query prevalence {last}");
    }

    #[test]
    fn oracle_scorer_beats_random_scorer_on_auc() {
        // 100 queries × 100 documents. Per query, the stored oracle's AUC
        // should strictly beat a fixed random scorer essentially always.
        let ds = generate_synthetic(&SyntheticSpec {
            num_queries: 100,
            docs_per_query: 100,
            feature_dim: 5,
            seed: 31,
            prevalence_range: None,
            label_rule: LabelRule::Sampled,
            theta_mode: ThetaMode::PerQuery,
        })
        .unwrap();
        let mut both_classes = 0usize;
        let mut oracle_wins = 0usize;
        for (qi, group) in ds.queries.iter().enumerate() {
            let labels: Vec<u8> = group.documents.iter().map(|d| d.label).collect();
            let oracle = group.oracle.as_ref().unwrap();
            let oracle_scores: Vec<f64> = group
                .documents
                .iter()
                .map(|d| oracle.centered_score(&d.features))
                .collect();
            let random_scores: Vec<f64> = (0..group.documents.len())
                .map(|di| {
                    let mut rng = derive_rng(99, &[seeding::DOMAIN_RANDOM_SCORER, qi as u64, di as u64]);
                    rand::Rng::gen_range(&mut rng, -1.0..1.0)
                })
                .collect();
            if let (Some(o), Some(r)) =
                (auc_raw(&oracle_scores, &labels), auc_raw(&random_scores, &labels))
            {
                both_classes += 1;
                // Losses: more negative is better.
                if o < r {
                    oracle_wins += 1;
                }
            }
        }
        assert!(both_classes > 90);
        let win_rate = oracle_wins as f64 / both_classes as f64;
        assert!(win_rate >= 0.99, "oracle win rate {win_rate}");
    }

    #[test]
    fn adopt_noisy_labels_promotes_or_errors() {
        let ds = generate_synthetic(&SyntheticSpec::desk_default(1)).unwrap();
        assert!(ds.adopt_noisy_labels().is_err());

        let spec = crate::noise::NoiseSpec::new(0.0, 0).unwrap();
        let corrupted = crate::noise::corrupt_dataset(&ds, &spec).unwrap();
        let adopted = corrupted.adopt_noisy_labels().unwrap();
        for (g, og) in adopted.queries.iter().zip(&ds.queries) {
            for (d, od) in g.documents.iter().zip(&og.documents) {
                assert_eq!(d.label, 1 - od.label);
                assert_eq!(d.noisy_label, None);
            }
        }
    }
}
