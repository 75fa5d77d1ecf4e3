//! Synthetic dataset generation and LETOR text round-tripping.
//!
//! ```bash
//! cargo run -p noisy-ltr --example synthetic_data
//! ```

use noisy_ltr::data::{
    generate_synthetic, parse_letor, split, write_letor, LabelRule, SyntheticSpec, ThetaMode,
};

fn main() -> noisy_ltr::Result<()> {
    // The desk-scale shape: 50 queries × 10 documents, 5 features.
    let ds = generate_synthetic(&SyntheticSpec::desk_default(11))?;
    let positives: usize = ds
        .queries
        .iter()
        .flat_map(|g| &g.documents)
        .filter(|d| d.label == 1)
        .count();
    println!(
        "generated {} queries, {} documents, dim {}, {:.1}% positive",
        ds.queries.len(),
        ds.total_docs(),
        ds.feature_dim,
        100.0 * positives as f64 / ds.total_docs() as f64
    );

    // Per-query prevalence can be tilted over a range.
    let tilted = generate_synthetic(&SyntheticSpec {
        num_queries: 5,
        docs_per_query: 200,
        prevalence_range: Some((0.1, 0.9)),
        ..SyntheticSpec::desk_default(11)
    })?;
    let prevalences: Vec<String> = tilted
        .queries
        .iter()
        .map(|g| {
            let p = g.documents.iter().filter(|d| d.label == 1).count() as f64
                / g.documents.len() as f64;
            format!("{p:.2}")
        })
        .collect();
    println!("prevalence ladder over [0.1, 0.9]: {}", prevalences.join(", "));

    // Thresholded labels with a shared weight vector give a dataset one
    // linear model can rank perfectly.
    let separable = generate_synthetic(&SyntheticSpec {
        label_rule: LabelRule::Thresholded,
        theta_mode: ThetaMode::Shared,
        ..SyntheticSpec::desk_default(11)
    })?;
    println!("separable variant: oracle stored on every query = {}", separable.has_oracle());

    // Round-trip through the LETOR text format.
    let dir = std::env::temp_dir();
    let path = dir.join("noisy_ltr_example.txt");
    write_letor(&ds, &path)?;
    let parsed = parse_letor(&path)?;
    let same = parsed.queries.len() == ds.queries.len()
        && parsed
            .queries
            .iter()
            .zip(&ds.queries)
            .all(|(a, b)| {
                a.query_id == b.query_id
                    && a.documents
                        .iter()
                        .zip(&b.documents)
                        .all(|(x, y)| x.features == y.features && x.label == y.label)
            });
    println!("letor round trip exact: {same} ({})", path.display());

    // Query-level splitting.
    let (train, holdout) = split(&ds, 0.8, 5)?;
    println!(
        "split at query granularity: {} train / {} holdout",
        train.queries.len(),
        holdout.queries.len()
    );
    Ok(())
}
