//! Trains the effect detector on synthesized examples, reports held-out
//! class-wise accuracy and round-trips the model through JSON.
//!
//! `cargo run --release --example train_detector -- [train_count] [epochs]`

use rayon::prelude::*;
use remfx::dataset::{generate_example, labeled_example, ChainPlan, Split};
use remfx::detector::{classwise_accuracy, train, DetectorModel, LabeledExample, TrainConfig};

fn examples(split: Split, count: u64) -> remfx::Result<Vec<LabeledExample>> {
    (0..count)
        .into_par_iter()
        .map(|j| {
            let ex = generate_example(1, split, j, ChainPlan::Random { n_effects_max: 5 }, 96_000)?;
            labeled_example(&ex.input, ex.labels(), false)
        })
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let count: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(600);
    let epochs: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(40);

    let train_set = examples(Split::Train, count)?;
    let test_set = examples(Split::Test, count / 4)?;
    let cfg = TrainConfig { epochs, seed: 1, ..TrainConfig::default() };
    let outcome = train(&train_set, &cfg)?;

    let losses = &outcome.losses;
    let head: f64 = losses[..50.min(losses.len())].iter().sum::<f64>() / 50.min(losses.len()) as f64;
    let tail: f64 = losses[losses.len().saturating_sub(50)..].iter().sum::<f64>() / 50.min(losses.len()) as f64;
    println!("{} steps, mean loss {head:.3} -> {tail:.3}", losses.len());
    println!("{}", classwise_accuracy(&outcome.model, &test_set, 0.5)?);

    let path = std::env::temp_dir().join("remfx-detector.json");
    outcome.model.save(&path)?;
    assert_eq!(DetectorModel::load(&path)?, outcome.model);
    println!("model saved to {}", path.display());
    Ok(())
}
