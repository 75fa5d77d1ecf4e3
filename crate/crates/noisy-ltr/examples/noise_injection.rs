//! Class-conditional label corruption: flip rates, per-class symmetry, and
//! determinism.
//!
//! ```bash
//! cargo run -p noisy-ltr --example noise_injection
//! ```

use noisy_ltr::noise::{corrupt_labels, NoiseSpec};

fn main() -> noisy_ltr::Result<()> {
    // 10,000 labels, 30% positive.
    let labels: Vec<u8> = (0..10_000).map(|i| u8::from(i % 10 < 3)).collect();

    for gamma in [1.0, 0.9, 0.7, 0.51] {
        let spec = NoiseSpec::new(gamma, 2024)?;
        let out = corrupt_labels(&labels, &spec)?;

        let rate = |class: u8| {
            let (mut flips, mut n) = (0usize, 0usize);
            for (i, &y) in labels.iter().enumerate() {
                if y == class {
                    n += 1;
                    flips += usize::from(out.flips[i]);
                }
            }
            flips as f64 / n as f64
        };
        println!(
            "gamma {gamma:<5} expected flip rate {:<5.2} observed: class 0 -> {:.4}, class 1 -> {:.4}",
            1.0 - gamma,
            rate(0),
            rate(1)
        );
    }

    // Same seed, same labels, same outcome.
    let spec = NoiseSpec::new(0.8, 7)?;
    let once = corrupt_labels(&labels, &spec)?;
    let twice = corrupt_labels(&labels, &spec)?;
    println!("\ndeterministic given (labels, seed): {}", once == twice);

    // gamma = 0 flips everything, so corrupting twice restores the input.
    let zero = NoiseSpec::new(0.0, 7)?;
    let flipped = corrupt_labels(&labels, &zero)?;
    let restored = corrupt_labels(&flipped.noisy, &zero)?;
    println!("double flip at gamma = 0 restores labels: {}", restored.noisy == labels);
    Ok(())
}
