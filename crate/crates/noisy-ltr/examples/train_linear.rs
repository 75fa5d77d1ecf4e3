//! Train a linear scorer with Adam and early stopping, then evaluate it.
//!
//! Trains the symmetrized ranknet loss on noisy labels (γ = 0.8) and scores
//! the clean data afterwards, which is the point of an order-preserving
//! loss: the noisy objective still targets the clean optimum.
//!
//! ```bash
//! cargo run -p noisy-ltr --example train_linear
//! ```

use noisy_ltr::data::{generate_synthetic, split, SyntheticSpec};
use noisy_ltr::experiments::evaluate_model;
use noisy_ltr::losses::{LossKind, LossMode};
use noisy_ltr::metrics::Metric;
use noisy_ltr::noise::{corrupt_dataset, NoiseSpec};
use noisy_ltr::training::{grid_search, train, AdamConfig, TrainConfig, TrainObjective};

fn main() -> noisy_ltr::Result<()> {
    let ds = generate_synthetic(&SyntheticSpec::desk_separable(3))?;
    let (rest, test) = split(&ds, 0.8, 3)?;
    let (train_ds, holdout) = split(&rest, 0.8, 4)?;

    // Corrupt the labels the optimizer sees; the test split stays clean.
    let noise = NoiseSpec::new(0.8, 5)?;
    let noisy_train = corrupt_dataset(&train_ds, &noise)?.adopt_noisy_labels()?;
    let noisy_holdout = corrupt_dataset(&holdout, &noise)?.adopt_noisy_labels()?;

    let objective = TrainObjective::new(LossKind::SymmetrizedLogistic, LossMode::Pairwise);
    let config = TrainConfig::new(objective);

    // Single run at a fixed learning rate.
    let adam = AdamConfig {
        learning_rate: 1e-2,
        ..AdamConfig::default()
    };
    let outcome = train(&noisy_train, &noisy_holdout, &config, &adam)?;
    println!(
        "single run: {} epochs, best epoch {:?}",
        outcome.history.len(),
        outcome.best_epoch
    );
    for e in outcome.history.iter().take(3) {
        println!(
            "  epoch {:>3} train {:.5} holdout {:.5}",
            e.epoch, e.train_loss, e.holdout_loss
        );
    }
    if let Some(last) = outcome.history.last() {
        println!(
            "  ...\n  epoch {:>3} train {:.5} holdout {:.5}",
            last.epoch, last.train_loss, last.holdout_loss
        );
    }

    // The full grid search the sweep uses.
    let searched = grid_search(
        &noisy_train,
        &noisy_holdout,
        &config,
        &AdamConfig::default(),
        &[1e-1, 1e-2, 1e-3, 1e-4, 1e-5],
        &[1e-5, 1e-4, 1e-3],
    )?;
    println!(
        "\ngrid search over {} cells picked lr {} wd {} (holdout loss {:.5})",
        searched.cells.len(),
        searched.learning_rate,
        searched.weight_decay,
        searched.holdout_loss
    );

    println!("\nclean-test metrics of the selected model:");
    for (metric, mv) in evaluate_model(
        &searched.model,
        &test,
        &[Metric::NdcgAt(10), Metric::Map, Metric::Auc],
    )? {
        println!("  {:<8} {:.4}", metric.name(), mv.value);
    }
    Ok(())
}
