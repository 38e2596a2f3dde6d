//! SI-SDR, multi-resolution STFT error and the composite training loss on a
//! clean clip and progressively degraded copies of it.
//!
//! `cargo run --example metrics`

use remfx::effects::{apply_effect, DelayParams, EffectInstance};
use remfx::metrics::{composite_loss, metric_pair, MetricPair};
use remfx::source::{synthesize_source, SourceFamily, SourceSpec};
use remfx::{RngStream, CLIP_LEN};

fn show(label: &str, m: &MetricPair, loss: f64) {
    println!("{label:<18} SI-SDR {:>8.2} dB  MR-STFT {:>6.3}  loss {loss:.3}", m.si_sdr_db, m.mr_stft);
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let clean = synthesize_source(&SourceSpec::synthetic(SourceFamily::VocalLike, 3), CLIP_LEN)?;
    show("identical", &metric_pair(&clean, &clean)?, composite_loss(&clean, &clean)?);

    let half = clean.scaled(0.5)?;
    show("half level", &metric_pair(&half, &clean)?, composite_loss(&half, &clean)?);

    let mut rng = RngStream::new(3, 0);
    for level in [0.01, 0.1, 0.3] {
        let noisy: Vec<f64> = clean.to_f64().iter().map(|v| v + level * rng.bipolar()).collect();
        let noisy = remfx::AudioClip::from_f64(&noisy, clean.sample_rate())?;
        show(&format!("noise {level}"), &metric_pair(&noisy, &clean)?, composite_loss(&noisy, &clean)?);
    }

    let echo = apply_effect(
        &clean,
        &EffectInstance::Delay(DelayParams { delay_ms: 250.0, feedback: 0.4, mix: 0.5 }),
    )?;
    show("feedback delay", &metric_pair(&echo, &clean)?, composite_loss(&echo, &clean)?);
    Ok(())
}
