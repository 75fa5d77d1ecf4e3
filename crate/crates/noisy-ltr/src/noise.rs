//! Class-conditional label corruption.
//!
//! Each label is kept with probability `γ` and flipped with probability
//! `1−γ`, independently of everything else. The corruption never sees
//! features, which enforces the class-conditional condition (flips
//! independent of features given the true class) by construction.
//!
//! Streams are ChaCha8, derived per query group from `(seed, query_id)`, so
//! corrupting a dataset gives the same per-query outcome regardless of query
//! order or parallelism.

use rand::distributions::{Bernoulli, Distribution};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seeding::{self, derive_rng, hash_str};

/// Noise level and stream identity for one corruption pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Probability of keeping the correct label; flip probability is `1−γ`.
    pub gamma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(gamma: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::invalid(format!(
                "gamma must lie in [0, 1], got {gamma}"
            )));
        }
        Ok(Self { gamma, seed })
    }
}

/// Noisy labels plus a record of which positions were flipped.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionOutcome {
    pub noisy: Vec<u8>,
    pub flips: Vec<bool>,
}

fn corrupt_with_rng(
    labels: &[u8],
    gamma: f64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<CorruptionOutcome> {
    let keep = Bernoulli::new(gamma).expect("gamma validated");
    let mut noisy = Vec::with_capacity(labels.len());
    let mut flips = Vec::with_capacity(labels.len());
    for &y in labels {
        if y > 1 {
            return Err(Error::invalid(format!("non-binary label {y}")));
        }
        let kept = keep.sample(rng);
        noisy.push(if kept { y } else { 1 - y });
        flips.push(!kept);
    }
    Ok(CorruptionOutcome { noisy, flips })
}

/// Corrupts a label vector with one stream derived from `spec.seed`.
/// Deterministic given `(labels, seed)`.
pub fn corrupt_labels(labels: &[u8], spec: &NoiseSpec) -> Result<CorruptionOutcome> {
    let mut rng = derive_rng(spec.seed, &[seeding::DOMAIN_NOISE]);
    corrupt_with_rng(labels, spec.gamma, &mut rng)
}

/// Corrupts every query group of a dataset, writing the result into each
/// document's `noisy_label` and leaving clean labels untouched.
///
/// Each group uses its own stream derived from `(seed, query_id)`, so the
/// outcome for a query does not depend on where it sits in the dataset.
pub fn corrupt_dataset(ds: &Dataset, spec: &NoiseSpec) -> Result<Dataset> {
    let mut out = ds.clone();
    for group in &mut out.queries {
        let mut rng = derive_rng(
            spec.seed,
            &[seeding::DOMAIN_NOISE, hash_str(&group.query_id)],
        );
        let labels: Vec<u8> = group.documents.iter().map(|d| d.label).collect();
        let outcome = corrupt_with_rng(&labels, spec.gamma, &mut rng)?;
        for (doc, noisy) in group.documents.iter_mut().zip(outcome.noisy) {
            doc.noisy_label = Some(noisy);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, LabelRule, SyntheticSpec, ThetaMode};

    #[test]
    fn gamma_one_keeps_everything() {
        let labels = vec![0, 1, 1, 0, 1];
        let out = corrupt_labels(&labels, &NoiseSpec::new(1.0, 3).unwrap()).unwrap();
        assert_eq!(out.noisy, labels);
        assert!(out.flips.iter().all(|f| !f));
    }

    #[test]
    fn gamma_zero_flips_everything_and_double_flip_restores() {
        let labels = vec![0, 1, 1, 0];
        let spec = NoiseSpec::new(0.0, 3).unwrap();
        let once = corrupt_labels(&labels, &spec).unwrap();
        assert_eq!(once.noisy, vec![1, 0, 0, 1]);
        assert!(once.flips.iter().all(|f| *f));
        let twice = corrupt_labels(&once.noisy, &spec).unwrap();
        assert_eq!(twice.noisy, labels);
    }

    #[test]
    fn flip_rate_is_within_three_sigma() {
        let labels: Vec<u8> = (0..10_000).map(|i| (i % 2) as u8).collect();
        let out = corrupt_labels(&labels, &NoiseSpec::new(0.9, 42).unwrap()).unwrap();
        let rate = out.flips.iter().filter(|f| **f).count() as f64 / labels.len() as f64;
        // 3σ binomial interval around 0.1 at n = 10,000.
        assert!((rate - 0.1).abs() <= 0.009, "flip rate {rate}");

        // Per-class rates obey the same interval (the equal-rate condition).
        for class in [0u8, 1u8] {
            let (mut flips, mut n) = (0usize, 0usize);
            for (i, &y) in labels.iter().enumerate() {
                if y == class {
                    n += 1;
                    flips += out.flips[i] as usize;
                }
            }
            let class_rate = flips as f64 / n as f64;
            let sigma = (0.1 * 0.9 / n as f64).sqrt();
            assert!(
                (class_rate - 0.1).abs() <= 3.0 * sigma,
                "class {class} rate {class_rate}"
            );
        }
    }

    #[test]
    fn corruption_is_deterministic() {
        let labels: Vec<u8> = (0..500).map(|i| ((i * 7) % 2) as u8).collect();
        let spec = NoiseSpec::new(0.8, 9).unwrap();
        assert_eq!(
            corrupt_labels(&labels, &spec).unwrap(),
            corrupt_labels(&labels, &spec).unwrap()
        );
    }

    #[test]
    fn flips_are_uncorrelated_with_features() {
        // 10,000 documents with one feature; the corruption never sees it.
        let ds = generate_synthetic(&SyntheticSpec {
            num_queries: 100,
            docs_per_query: 100,
            feature_dim: 1,
            seed: 11,
            prevalence_range: None,
            label_rule: LabelRule::Sampled,
            theta_mode: ThetaMode::PerQuery,
        })
        .unwrap();
        let labels: Vec<u8> = ds
            .queries
            .iter()
            .flat_map(|q| q.documents.iter().map(|d| d.label))
            .collect();
        let feats: Vec<f64> = ds
            .queries
            .iter()
            .flat_map(|q| q.documents.iter().map(|d| d.features[0]))
            .collect();
        let out = corrupt_labels(&labels, &NoiseSpec::new(0.9, 5).unwrap()).unwrap();

        let n = feats.len() as f64;
        let fm = feats.iter().sum::<f64>() / n;
        let gm = out.flips.iter().filter(|f| **f).count() as f64 / n;
        let mut cov = 0.0;
        let mut vf = 0.0;
        let mut vg = 0.0;
        for (x, &flip) in feats.iter().zip(&out.flips) {
            let dx = x - fm;
            let dg = (flip as u8) as f64 - gm;
            cov += dx * dg;
            vf += dx * dx;
            vg += dg * dg;
        }
        let corr = cov / (vf.sqrt() * vg.sqrt());
        assert!(corr.abs() <= 3.0 / n.sqrt(), "correlation {corr}");
    }

    #[test]
    fn dataset_corruption_is_order_independent() {
        let ds = generate_synthetic(&SyntheticSpec {
            num_queries: 6,
            docs_per_query: 8,
            feature_dim: 3,
            seed: 21,
            prevalence_range: None,
            label_rule: LabelRule::Sampled,
            theta_mode: ThetaMode::PerQuery,
        })
        .unwrap();
        let spec = NoiseSpec::new(0.7, 77).unwrap();
        let corrupted = corrupt_dataset(&ds, &spec).unwrap();

        let mut reversed = ds.clone();
        reversed.queries.reverse();
        let corrupted_rev = corrupt_dataset(&reversed, &spec).unwrap();

        for group in &corrupted.queries {
            let twin = corrupted_rev
                .queries
                .iter()
                .find(|g| g.query_id == group.query_id)
                .unwrap();
            let a: Vec<_> = group.documents.iter().map(|d| d.noisy_label).collect();
            let b: Vec<_> = twin.documents.iter().map(|d| d.noisy_label).collect();
            assert_eq!(a, b, "query {}", group.query_id);
        }
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(NoiseSpec::new(1.2, 0).is_err());
        assert!(NoiseSpec::new(-0.1, 0).is_err());
        let spec = NoiseSpec::new(0.5, 0).unwrap();
        assert!(corrupt_labels(&[0, 2], &spec).is_err());
    }
}
