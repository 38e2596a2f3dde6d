use std::f64::consts::PI;

use super::{ChorusParams, CompressorParams, DelayParams, DistortionParams, ReverbParams};
use crate::audio::AudioClip;
use crate::error::Result;

fn ms_to_samples(ms: f64, sample_rate: u32) -> usize {
    (ms * sample_rate as f64 / 1000.0).round() as usize
}

fn dry_wet(dry: &[f32], wet: &[f64], mix: f64) -> Vec<f64> {
    dry.iter()
        .zip(wet)
        .map(|(&x, &w)| (1.0 - mix) * x as f64 + mix * w)
        .collect()
}

/// Memoryless `tanh(g x)` waveshaper.
pub fn apply_distortion(clip: &AudioClip, p: &DistortionParams) -> Result<AudioClip> {
    let g = p.gain();
    let y: Vec<f64> = clip.samples().iter().map(|&x| (g * x as f64).tanh()).collect();
    clip.with_samples_f64(&y)
}

/// Feed-forward peak compressor without makeup gain.
pub fn apply_compressor(clip: &AudioClip, p: &CompressorParams) -> Result<AudioClip> {
    let fs = clip.sample_rate() as f64;
    let attack = (-1.0 / (p.attack_ms / 1000.0 * fs)).exp();
    let release = (-1.0 / (p.release_ms / 1000.0 * fs)).exp();
    // Below the threshold the gain is exactly 1, so the logs can be skipped.
    let threshold = 10f64.powf(p.threshold_db / 20.0);
    let mut env = 0.0f64;
    let y: Vec<f64> = clip
        .samples()
        .iter()
        .map(|&x| {
            let x = x as f64;
            let level = x.abs();
            let coef = if level > env { attack } else { release };
            env = coef * env + (1.0 - coef) * level;
            if env + 1e-8 <= threshold {
                return x;
            }
            // 10^(gain_db/20) with gain_db = (1/ratio - 1)(level_db - threshold_db).
            x * ((env + 1e-8) / threshold).powf(1.0 / p.ratio - 1.0)
        })
        .collect();
    clip.with_samples_f64(&y)
}

const COMB_MS: [f64; 4] = [29.7, 37.1, 41.1, 43.7];
const ALLPASS_MS: [f64; 2] = [5.0, 1.7];
const ALLPASS_GAIN: f64 = 0.7;

/// Schroeder reverberator: four parallel feedback combs, averaged, into two
/// series allpasses.
pub fn apply_reverb(clip: &AudioClip, p: &ReverbParams) -> Result<AudioClip> {
    if p.mix == 0.0 {
        return Ok(clip.clone());
    }
    let sr = clip.sample_rate();
    let x = clip.to_f64();
    let mut wet = vec![0.0; x.len()];
    for ms in COMB_MS {
        let d = ms_to_samples(ms, sr);
        let mut line = vec![0.0; d];
        let mut idx = 0;
        for (w, &input) in wet.iter_mut().zip(&x) {
            let out = line[idx];
            line[idx] = input + p.room_size * out;
            idx += 1;
            if idx == d {
                idx = 0;
            }
            *w += 0.25 * out;
        }
    }
    for ms in ALLPASS_MS {
        let d = ms_to_samples(ms, sr);
        let mut line = vec![0.0; d];
        let mut idx = 0;
        for w in wet.iter_mut() {
            let delayed = line[idx];
            let y = -ALLPASS_GAIN * *w + delayed;
            line[idx] = *w + ALLPASS_GAIN * y;
            idx += 1;
            if idx == d {
                idx = 0;
            }
            *w = y;
        }
    }
    clip.with_samples_f64(&dry_wet(clip.samples(), &wet, p.mix))
}

const CHORUS_BASE_MS: f64 = 15.0;

/// Reads `x` at fractional position `pos` with linear interpolation; zero
/// before the start.
fn read_fractional(x: &[f32], pos: f64) -> f64 {
    if pos < 0.0 {
        return 0.0;
    }
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    let a = x[i] as f64;
    if frac == 0.0 {
        return a;
    }
    let b = x.get(i + 1).copied().unwrap_or(0.0) as f64;
    a + frac * (b - a)
}

/// Two modulated delay voices, LFOs a quarter cycle apart.
pub fn apply_chorus(clip: &AudioClip, p: &ChorusParams) -> Result<AudioClip> {
    if p.mix == 0.0 {
        return Ok(clip.clone());
    }
    let fs = clip.sample_rate() as f64;
    let x = clip.samples();
    let step = 2.0 * PI * p.rate_hz / fs;
    let (step_sin, step_cos) = step.sin_cos();
    let delay_scale = fs / 1000.0;
    let (mut s, mut c) = (0.0f64, 1.0f64);
    let mut y = Vec::with_capacity(x.len());
    for n in 0..x.len() {
        // The LFO is advanced by rotation and resynchronized every 1024 samples.
        if n % 1024 == 0 {
            (s, c) = (step * n as f64).sin_cos();
        }
        // The second voice's LFO leads by a quarter cycle: sin(a + pi/2) = cos(a).
        let first = read_fractional(x, n as f64 - (CHORUS_BASE_MS + p.depth_ms * s) * delay_scale);
        let second = read_fractional(x, n as f64 - (CHORUS_BASE_MS + p.depth_ms * c) * delay_scale);
        y.push((1.0 - p.mix) * x[n] as f64 + 0.5 * p.mix * (first + second));
        (s, c) = (s * step_cos + c * step_sin, c * step_cos - s * step_sin);
    }
    clip.with_samples_f64(&y)
}

/// Feedback delay: `w[n] = x[n-D] + fb * w[n-D]`, mixed with the dry signal.
pub fn apply_delay(clip: &AudioClip, p: &DelayParams) -> Result<AudioClip> {
    if p.mix == 0.0 {
        return Ok(clip.clone());
    }
    let d = p.delay_samples(clip.sample_rate());
    let x = clip.to_f64();
    let mut w = vec![0.0; x.len()];
    for n in d..x.len() {
        w[n] = x[n - d] + p.feedback * w[n - d];
    }
    clip.with_samples_f64(&dry_wet(clip.samples(), &w, p.mix))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::SAMPLE_RATE;
    use crate::effects::{apply_effect, sample_params, EffectInstance, EffectKind};
    use crate::rng::RngStream;
    use crate::spectral::magnitude_spectrogram;

    const FS: usize = SAMPLE_RATE as usize;

    fn clip(samples: Vec<f64>) -> AudioClip {
        AudioClip::from_f64(&samples, SAMPLE_RATE).unwrap()
    }

    fn impulse(len: usize, amp: f64) -> AudioClip {
        let mut s = vec![0.0; len];
        s[0] = amp;
        clip(s)
    }

    fn sine(freq: f64, amp: f64, len: usize) -> AudioClip {
        clip((0..len)
            .map(|n| amp * (2.0 * PI * freq * n as f64 / FS as f64).sin())
            .collect())
    }

    fn noise(seed: u64, len: usize) -> AudioClip {
        let mut r = RngStream::new(seed, 0);
        clip((0..len).map(|_| 0.3 * r.bipolar()).collect())
    }

    fn energy(x: &[f32]) -> f64 {
        x.iter().map(|&s| (s as f64).powi(2)).sum()
    }

    #[test]
    fn distortion_values() {
        let y = apply_distortion(&impulse(4, 0.5), &DistortionParams { drive_db: 6.0206 }).unwrap();
        assert!((y.samples()[0] as f64 - 1f64.tanh()).abs() <= 1e-5);
        assert_eq!(&y.samples()[1..], &[0.0, 0.0, 0.0]);
        let loud = apply_distortion(&noise(1, 1000).scaled(3.0).unwrap(), &DistortionParams { drive_db: 30.0 }).unwrap();
        assert!(loud.samples().iter().all(|s| s.abs() <= 1.0));
    }

    #[test]
    fn distortion_is_monotone() {
        let x = noise(2, 2000);
        let y = apply_distortion(&x, &DistortionParams { drive_db: 18.0 }).unwrap();
        let mut pairs: Vec<(f32, f32)> = x.samples().iter().copied().zip(y.samples().iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    fn comp(threshold_db: f64, ratio: f64, attack_ms: f64, release_ms: f64) -> CompressorParams {
        CompressorParams { threshold_db, ratio, attack_ms, release_ms }
    }

    #[test]
    fn compressor_passes_quiet_signal() {
        // -60 dBFS peak is 20 dB under the lowest threshold.
        let x = sine(440.0, 1e-3, FS);
        let y = apply_compressor(&x, &comp(-40.0, 10.0, 1.0, 50.0)).unwrap();
        for (a, b) in x.samples().iter().zip(y.samples()) {
            assert!((a - b).abs() <= 1e-6);
        }
    }

    /// Gain computer output in dB for an envelope level `level_db`; never positive.
    fn compressor_gain_db(level_db: f64, threshold_db: f64, ratio: f64) -> f64 {
        (threshold_db + (level_db - threshold_db) / ratio - level_db).min(0.0)
    }

    #[test]
    fn compressor_matches_db_domain_gain_computer() {
        let x = noise(9, 20_000).scaled(3.0).unwrap();
        let p = comp(-30.0, 4.0, 2.0, 80.0);
        let y = apply_compressor(&x, &p).unwrap();
        let fs = FS as f64;
        let attack = (-1.0 / (p.attack_ms / 1000.0 * fs)).exp();
        let release = (-1.0 / (p.release_ms / 1000.0 * fs)).exp();
        let mut env = 0.0f64;
        for (&a, &b) in x.samples().iter().zip(y.samples()) {
            let level = (a as f64).abs();
            let coef = if level > env { attack } else { release };
            env = coef * env + (1.0 - coef) * level;
            let gain_db = compressor_gain_db(20.0 * (env + 1e-8).log10(), p.threshold_db, p.ratio);
            let expect = a as f64 * 10f64.powf(gain_db / 20.0);
            assert!((b as f64 - expect).abs() <= 1e-6, "{b} vs {expect}");
        }
    }

    #[test]
    fn compressor_steady_state_peak() {
        let x = sine(1000.0, 1.0, 2 * FS);
        let y = apply_compressor(&x, &comp(-30.0, 4.0, 1.0, 500.0)).unwrap();
        let tail = &y.samples()[FS..];
        let peak_db = 20.0 * (tail.iter().fold(0.0f32, |m, s| m.max(s.abs())) as f64).log10();
        assert!((peak_db - -22.5).abs() <= 0.5, "{peak_db}");
    }

    #[test]
    fn compressor_never_boosts() {
        assert!(compressor_gain_db(-100.0, -30.0, 4.0) <= 0.0);
        assert!(compressor_gain_db(0.0, -30.0, 4.0) <= 0.0);
        let x = noise(3, FS);
        let y = apply_compressor(&x, &comp(-30.0, 6.0, 5.0, 100.0)).unwrap();
        for (a, b) in x.samples().iter().zip(y.samples()) {
            assert!(b.abs() <= a.abs());
        }
    }

    #[test]
    fn reverb_tail_decays() {
        let p = ReverbParams { room_size: 0.85, mix: 1.0 };
        let y = apply_reverb(&impulse(FS, 1.0), &p).unwrap();
        let half = FS / 2;
        assert!(energy(&y.samples()[half..]) < energy(&y.samples()[..half]));
    }

    #[test]
    fn larger_room_rings_longer() {
        let tail = |room| {
            let y = apply_reverb(&impulse(FS * 3 / 2, 1.0), &ReverbParams { room_size: room, mix: 0.5 }).unwrap();
            energy(&y.samples()[FS..])
        };
        assert!(tail(0.95) > tail(0.75));
    }

    #[test]
    fn chorus_zero_depth_is_fixed_delay() {
        let x = noise(4, 4000);
        let y = apply_chorus(&x, &ChorusParams { rate_hz: 1.0, depth_ms: 0.0, mix: 1.0 }).unwrap();
        let d = 15 * FS / 1000;
        for n in 0..x.len() {
            let expect = if n >= d { x.samples()[n - d] } else { 0.0 };
            assert!((y.samples()[n] - expect).abs() <= 1e-6);
        }
    }

    /// Local maxima of the whole-signal magnitude spectrum within 30 dB of
    /// the largest.
    fn peak_count(x: &AudioClip) -> usize {
        let mags = magnitude_spectrogram(x.samples(), x.len(), x.len()).unwrap();
        let row: Vec<f64> = mags.row(0).to_vec();
        let max = row.iter().cloned().fold(0.0, f64::max);
        (1..row.len() - 1)
            .filter(|&k| row[k] > row[k - 1] && row[k] >= row[k + 1] && row[k] > max * 10f64.powf(-30.0 / 20.0))
            .count()
    }

    #[test]
    fn chorus_adds_sidebands() {
        let x = sine(1000.0, 0.5, 65_536);
        let y = apply_chorus(&x, &ChorusParams { rate_hz: 3.0, depth_ms: 8.0, mix: 0.5 }).unwrap();
        let before = peak_count(&x);
        let after = peak_count(&y);
        assert_eq!(before, 1);
        assert!(after > before, "{before} -> {after}");
    }

    #[test]
    fn delay_impulse_taps() {
        let p = DelayParams { delay_ms: 100.0, feedback: 0.5, mix: 0.3 };
        let d = p.delay_samples(SAMPLE_RATE);
        let y = apply_delay(&impulse(4 * d + 1, 1.0), &p).unwrap();
        let s = y.samples();
        for (n, expect) in [(0, 0.7), (d, 0.3), (2 * d, 0.15), (3 * d, 0.075)] {
            assert!((s[n] as f64 - expect).abs() <= 1e-6, "tap at {n}");
        }
        assert_eq!(s[1], 0.0);
    }

    #[test]
    fn delay_feedback_is_geometric() {
        let p = DelayParams { delay_ms: 150.0, feedback: 0.6, mix: 0.4 };
        let d = p.delay_samples(SAMPLE_RATE);
        let y = apply_delay(&impulse(6 * d + 1, 1.0), &p).unwrap();
        for k in 1..5 {
            let ratio = y.samples()[k * d] as f64 / y.samples()[(k + 1) * d] as f64;
            assert!((ratio - 1.0 / 0.6).abs() <= 1e-3);
        }
    }

    #[test]
    fn zero_mix_is_identity_bit_exact() {
        let mut s: Vec<f64> = noise(5, 3000).to_f64();
        s[7] = -0.0;
        let x = clip(s);
        let same = |y: AudioClip| {
            let a: Vec<u32> = x.samples().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u32> = y.samples().iter().map(|v| v.to_bits()).collect();
            assert_eq!(a, b);
        };
        same(apply_reverb(&x, &ReverbParams { room_size: 0.9, mix: 0.0 }).unwrap());
        same(apply_chorus(&x, &ChorusParams { rate_hz: 2.0, depth_ms: 5.0, mix: 0.0 }).unwrap());
        same(apply_delay(&x, &DelayParams { delay_ms: 10.0, feedback: 0.5, mix: 0.0 }).unwrap());
    }

    #[test]
    fn dispatch_preserves_length_and_is_deterministic() {
        let x = noise(6, 30_000);
        let mut rng = RngStream::new(6, 6);
        for kind in EffectKind::ALL {
            let fx = sample_params(kind, &mut rng);
            let a = apply_effect(&x, &fx).unwrap();
            let b = apply_effect(&x, &fx).unwrap();
            assert_eq!(a.len(), x.len());
            assert_eq!(a, b);
            assert!(a.samples().iter().all(|s| s.is_finite()));
            if let EffectInstance::Distortion(p) = fx {
                assert_eq!(a, apply_distortion(&x, &p).unwrap());
            }
        }
    }
}
