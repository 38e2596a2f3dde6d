//! Removes known effect chains in Oracle mode: exact inverses for distortion
//! and delay, identity for the rest, undone in reverse application order.
//!
//! `cargo run --example oracle_removal -- [seed]`

use remfx::chain::apply_chain_traced;
use remfx::effects::sample_params;
use remfx::loudness::normalize_loudness;
use remfx::metrics::metric_pair;
use remfx::orchestrator::{compose_and_run, BackendRegistry, OrchestratorMode, Ordering};
use remfx::source::{synthesize_source, SourceFamily, SourceSpec};
use remfx::{EffectChain, EffectKind, RngStream, CLIP_LEN, TARGET_LUFS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    use EffectKind::*;
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(4);
    let clean = normalize_loudness(
        &synthesize_source(&SourceSpec::synthetic(SourceFamily::VocalLike, seed), CLIP_LEN)?,
        TARGET_LUFS,
    )?;
    let registry = BackendRegistry::oracle_where_possible();
    let mode = OrchestratorMode::oracle(Ordering::GroundTruth);
    let mut rng = RngStream::new(seed, 0);

    for kinds in [vec![Delay], vec![Distortion], vec![Distortion, Delay], vec![Delay, Compressor], vec![Reverb, Delay]] {
        let chain = EffectChain::new(kinds.iter().map(|&k| sample_params(k, &mut rng)).collect())?;
        let (input, stages) = apply_chain_traced(&clean, &chain)?;
        let out = compose_and_run(&input, &mode, &registry, None, Some(&stages))?;
        let before = metric_pair(&input, &clean)?;
        let after = metric_pair(&out.output, &clean)?;
        println!(
            "{:<28} removal order {:<28} SI-SDR {:>7.2} -> {:>7.2} dB  MR-STFT {:.3} -> {:.3}",
            format!("{kinds:?}"),
            format!("{:?}", out.applied),
            before.si_sdr_db,
            after.si_sdr_db,
            before.mr_stft,
            after.mr_stft
        );
    }
    Ok(())
}
