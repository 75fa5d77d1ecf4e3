//! Evaluate every margin loss and probe which ones are label-symmetric.
//!
//! ```bash
//! cargo run -p noisy-ltr --example loss_symmetry
//! ```

use noisy_ltr::losses::{check_label_symmetry, LossKind};

fn main() -> noisy_ltr::Result<()> {
    let margins = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];

    println!("loss values ℓ(α):");
    print!("{:<22}", "alpha");
    for a in margins {
        print!("{a:>9}");
    }
    println!();
    for kind in LossKind::ALL {
        print!("{:<22}", kind.name());
        for a in margins {
            print!("{:>9.4}", kind.eval(a)?);
        }
        println!();
    }

    println!("\nlabel symmetry, ℓ(α) + ℓ(−α) probed on each loss's margin domain:");
    for kind in LossKind::ALL {
        // Hinge and l1 only carry the identity on [−1, 1].
        let (_, hi) = kind.margin_domain();
        let probes: Vec<f64> = [0.1, 0.5, 1.0, 2.0, 5.0]
            .into_iter()
            .filter(|p| *p <= hi)
            .flat_map(|p| [p, -p])
            .collect();
        let report = check_label_symmetry(kind, &probes, 1e-9)?;
        match report.constant {
            Some(c) => println!("  {:<22} symmetric, constant {c}", kind.name()),
            None => println!(
                "  {:<22} NOT symmetric, max deviation {:.4}",
                kind.name(),
                report.max_deviation
            ),
        }
    }

    println!("\nderivatives at α = 0 (the zero-init gradient scale):");
    for kind in LossKind::ALL {
        match kind.derivative(0.0) {
            Ok(d) => println!("  {:<22} {d}", kind.name()),
            Err(e) => println!("  {:<22} {e}", kind.name()),
        }
    }
    Ok(())
}
