//! FXAug examples: random distractors before a fixed target effect, with the
//! distractor-only signal as the training target.
//!
//! `cargo run --example fxaug -- [DST|DRC|RVB|CHS|DLY]`

use remfx::chain::sample_fxaug_example;
use remfx::loudness::normalize_loudness;
use remfx::metrics::si_sdr;
use remfx::source::{synthesize_source, SourceFamily, SourceSpec};
use remfx::{EffectKind, RngStream, TARGET_LUFS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let target: EffectKind = std::env::args().nth(1).as_deref().unwrap_or("RVB").parse()?;
    let clean = normalize_loudness(
        &synthesize_source(&SourceSpec::synthetic(SourceFamily::Bass, 9), 96_000)?,
        TARGET_LUFS,
    )?;
    let mut rng = RngStream::new(9, 0);
    for _ in 0..6 {
        let ex = sample_fxaug_example(&clean, target, &mut rng)?;
        let distractors: Vec<String> = ex.distractors.kinds().iter().map(|k| k.to_string()).collect();
        println!(
            "[{}] then {target}: input vs target SI-SDR {:.2} dB",
            distractors.join(", "),
            si_sdr(&ex.input, &ex.target)?
        );
    }
    Ok(())
}
