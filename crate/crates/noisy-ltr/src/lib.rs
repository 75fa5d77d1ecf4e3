//! Learning to rank under class-conditional label noise.
//!
//! When each relevance label is flipped independently with probability
//! `1−γ`, a *label-symmetric* loss (`ℓ(α)+ℓ(−α)` constant) has noisy
//! expected risk `(2γ−1)·clean_risk + c(1−γ)`: an affine map. So for
//! `γ > 1/2` the noisy risk prefers exactly the scorers the clean risk
//! prefers, training on noisy labels targets the clean optimum, and the
//! classical ERM rates survive with `ε` scaled by `2γ−1`. Losses without
//! the symmetry (logistic, exponential, ranknet) can invert preferences
//! under noise; their symmetrized analogs restore it.
//!
//! This crate provides the pieces and the instruments to check all of that
//! empirically:
//!
//! - [`losses`] — margin losses (`zero_one`, `hinge`, `l1`, `logistic`,
//!   `exponential`, `symmetrized_logistic`), derivatives, and the
//!   label-symmetry checker.
//! - [`metrics`] — AUC, DCG@k, NDCG@k, MAP as losses (negated, per query,
//!   averaged with skip-counting).
//! - [`noise`] — seeded class-conditional label corruption.
//! - [`data`] — dataset model, synthetic generator with stored per-query
//!   oracles, LETOR/SVMLight I/O, binarization, normalization, splits.
//! - [`training`] — linear scorers, Adam with decoupled weight decay, the
//!   ERM loop with holdout early stopping, grid search.
//! - [`risk`] — clean/noisy risk estimators, the order-preservation
//!   affinity analysis, the scale counterexample harness, and the
//!   finite-sample bound calculators.
//! - [`experiments`] — the end-to-end simulation and noise-sweep studies
//!   with CSV outputs.
//!
//! Every random quantity flows from per-unit ChaCha8 streams derived in
//! [`seeding`], so identical inputs give identical outputs regardless of
//! thread count.
//!
//! # Quick start
//!
//! ```
//! use noisy_ltr::data::{generate_synthetic, SyntheticSpec};
//! use noisy_ltr::losses::{check_label_symmetry, LossKind};
//! use noisy_ltr::noise::{corrupt_labels, NoiseSpec};
//!
//! // The symmetrized logistic loss satisfies ℓ(α)+ℓ(−α) = 1 ...
//! let probes = [0.1, -0.1, 1.0, -1.0, 5.0, -5.0];
//! let report = check_label_symmetry(LossKind::SymmetrizedLogistic, &probes, 1e-9).unwrap();
//! assert!(report.symmetric);
//! assert_eq!(report.constant, Some(1.0));
//!
//! // ... the plain logistic loss does not.
//! assert!(!check_label_symmetry(LossKind::Logistic, &probes, 1e-9).unwrap().symmetric);
//!
//! // Corrupt labels at γ = 0.9 (10% flips), reproducibly.
//! let ds = generate_synthetic(&SyntheticSpec::desk_default(7)).unwrap();
//! let labels: Vec<u8> = ds.queries[0].documents.iter().map(|d| d.label).collect();
//! let out = corrupt_labels(&labels, &NoiseSpec::new(0.9, 7).unwrap()).unwrap();
//! assert_eq!(out.noisy.len(), labels.len());
//! ```
//!
//! Each major capability also has a runnable example under `examples/`:
//! `loss_symmetry`, `ranking_metrics`, `noise_injection`, `synthetic_data`,
//! `train_linear`, `order_preservation`, `erm_sweep`, and `bounds`. The
//! `noisy-ltr` binary exposes the same flows as subcommands.

pub mod data;
pub mod error;
pub mod experiments;
pub mod losses;
pub mod metrics;
pub mod noise;
pub mod risk;
pub mod seeding;
pub mod training;

pub use error::{Error, Result};
