//! Per-query ranking metrics and their mean over a small query set.
//!
//! All metrics are reported as losses: more negative is better, −1 is a
//! perfect normalized score, and queries where a metric is undefined are
//! skipped rather than imputed.
//!
//! ```bash
//! cargo run -p noisy-ltr --example ranking_metrics
//! ```

use noisy_ltr::metrics::{auc, dcg_at_k, map, mean_metric, ndcg_at_k, Metric, RankedQuery};

fn main() -> noisy_ltr::Result<()> {
    let queries = vec![
        // A perfectly ranked query.
        RankedQuery::new("perfect", vec![0.9, 0.7, 0.3, 0.1], vec![1, 1, 0, 0])?,
        // One relevant document buried at the bottom.
        RankedQuery::new("buried", vec![0.9, 0.7, 0.3, 0.1], vec![0, 0, 0, 1])?,
        // Tied scores: AUC gives half credit per tied pair.
        RankedQuery::new("tied", vec![0.5, 0.5], vec![1, 0])?,
        // No relevant documents: NDCG/AUC/MAP are undefined here.
        RankedQuery::new("unjudged", vec![0.8, 0.2], vec![0, 0])?,
    ];

    println!(
        "{:<10} {:>8} {:>8} {:>8} {:>8}",
        "query", "dcg@2", "ndcg@2", "auc", "map"
    );
    for q in &queries {
        let fmt = |v: Option<f64>| match v {
            Some(v) => format!("{v:>8.4}"),
            None => format!("{:>8}", "-"),
        };
        println!(
            "{:<10} {:>8.4} {} {} {}",
            q.query_id,
            dcg_at_k(q, 2)?,
            fmt(ndcg_at_k(q, 2)?),
            fmt(auc(q)),
            fmt(map(q)),
        );
    }

    println!();
    for metric in [Metric::NdcgAt(2), Metric::Auc, Metric::Map] {
        let mv = mean_metric(&queries, metric)?;
        println!(
            "mean {:<8} {:.4}  (used {} queries, skipped {})",
            metric.name(),
            mv.value,
            mv.queries_used,
            mv.queries_skipped
        );
    }
    Ok(())
}
