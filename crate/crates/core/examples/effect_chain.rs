//! Draws a random effect chain, applies it with loudness normalization after
//! every stage and shows how far each stage moves the signal from the source.
//!
//! `cargo run --example effect_chain -- [seed]`

use remfx::chain::{apply_chain_traced, count_effect_configurations, sample_chain_of_len};
use remfx::loudness::{measure_integrated_loudness, normalize_loudness};
use remfx::metrics::metric_pair;
use remfx::source::{synthesize_source, SourceFamily, SourceSpec};
use remfx::{EffectChain, RngStream, CLIP_LEN, TARGET_LUFS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    println!("{} ordered effect configurations over 5 effects", count_effect_configurations(5));

    let clean = normalize_loudness(
        &synthesize_source(&SourceSpec::synthetic(SourceFamily::Pluck, seed), CLIP_LEN)?,
        TARGET_LUFS,
    )?;
    let chain = sample_chain_of_len(5, &mut RngStream::new(seed, 0));
    let (wet, stages) = apply_chain_traced(&clean, &chain)?;

    for (i, stage) in stages.iter().enumerate() {
        let prefix = EffectChain::new(stages[..=i].iter().map(|s| s.effect).collect())?;
        let (partial, _) = apply_chain_traced(&clean, &prefix)?;
        let m = metric_pair(&partial, &clean)?;
        println!(
            "after {:<3} gain {:>7.3}  SI-SDR {:>7.2} dB  MR-STFT {:.3}  {:?}",
            stage.effect.kind(),
            stage.post_gain,
            m.si_sdr_db,
            m.mr_stft,
            stage.effect
        );
    }
    println!("final loudness {:.2} LUFS", measure_integrated_loudness(&wet)?.lufs);
    Ok(())
}
