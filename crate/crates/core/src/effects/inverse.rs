use super::{DelayParams, DistortionParams, EffectInstance};
use crate::audio::AudioClip;
use crate::error::{Error, Result};

const TANH_LIMIT: f64 = 1.0 - 1e-7;

/// Exact inverse of distortion or delay given the parameters that were used.
/// Other effects have no closed-form inverse and yield `UnsupportedOracle`.
pub fn oracle_inverse(clip: &AudioClip, fx: &EffectInstance) -> Result<AudioClip> {
    match fx {
        EffectInstance::Distortion(p) => invert_distortion(clip, p),
        EffectInstance::Delay(p) => invert_delay(clip, p),
        other => Err(Error::UnsupportedOracle(other.kind())),
    }
}

fn invert_distortion(clip: &AudioClip, p: &DistortionParams) -> Result<AudioClip> {
    let g = p.gain();
    let x: Vec<f64> = clip
        .samples()
        .iter()
        .map(|&y| (y as f64).clamp(-TANH_LIMIT, TANH_LIMIT).atanh() / g)
        .collect();
    clip.with_samples_f64(&x)
}

/// Runs `H^-1(z) = (1 - f z^-D) / ((1 - m) + (m - f (1 - m)) z^-D)`. The pole
/// radius `|m - f (1 - m)| / (1 - m)` is below one on the parameter box.
fn invert_delay(clip: &AudioClip, p: &DelayParams) -> Result<AudioClip> {
    let d = p.delay_samples(clip.sample_rate());
    let (m, f) = (p.mix, p.feedback);
    let a0 = 1.0 - m;
    let a1 = m - f * (1.0 - m);
    let y = clip.to_f64();
    let mut x = vec![0.0; y.len()];
    for n in 0..y.len() {
        let (y_d, x_d) = if n >= d { (y[n - d], x[n - d]) } else { (0.0, 0.0) };
        x[n] = (y[n] - f * y_d - a1 * x_d) / a0;
    }
    clip.with_samples_f64(&x)
}
