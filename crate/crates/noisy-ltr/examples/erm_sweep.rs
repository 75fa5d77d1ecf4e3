//! A miniature noise sweep: train the four losses at two noise levels and
//! compare clean-test NDCG@10 medians.
//!
//! ```bash
//! cargo run -p noisy-ltr --example erm_sweep
//! ```

use noisy_ltr::data::SyntheticSpec;
use noisy_ltr::experiments::{median, run_erm_sweep, SweepData, SweepSpec};
use noisy_ltr::metrics::Metric;

fn main() -> noisy_ltr::Result<()> {
    let spec = SweepSpec {
        gammas: vec![1.0, 0.7],
        seeds: vec![0, 1, 2],
        metrics: vec![Metric::NdcgAt(10)],
        lr_grid: vec![1e-1, 1e-2, 1e-3],
        wd_grid: vec![1e-4],
        max_epochs: 300,
        ..SweepSpec::desk_default(SweepData::Synthetic(SyntheticSpec::desk_separable(0)))
    };
    let out_dir = std::env::temp_dir().join("noisy_ltr_sweep_example");
    let result = run_erm_sweep(&spec, &out_dir, true)?;

    println!("median clean-test NDCG@10 loss (more negative is better):");
    println!("{:<22} {:>10} {:>10}", "loss", "gamma 1.0", "gamma 0.7");
    for loss in ["logistic", "ranknet", "symmetrized_logistic", "symmetrized_ranknet"] {
        let clean = median(&result.values_for(1.0, loss, "ndcg@10")).unwrap();
        let noisy = median(&result.values_for(0.7, loss, "ndcg@10")).unwrap();
        println!("{loss:<22} {clean:>10.4} {noisy:>10.4}");
    }
    println!(
        "\n{} rows written to {}",
        result.rows.len(),
        out_dir.join("sweep.csv").display()
    );
    Ok(())
}
