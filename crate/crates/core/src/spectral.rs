//! Short-time Fourier transform and log-mel features.

use std::f64::consts::PI;

use ndarray::Array2;
use realfft::num_complex::Complex64;
use realfft::RealFftPlanner;
use serde::{Deserialize, Serialize};

use crate::audio::{AudioClip, SAMPLE_RATE};
use crate::error::{Error, Result};

/// Floor added before taking logs of magnitudes.
pub const LOG_EPS: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub fft_size: usize,
    pub hop_size: usize,
    pub mel_bands: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub sample_rate: u32,
}

impl SpectralConfig {
    /// 64 mel bands over the full band, 2048-point frames, 1024 hop.
    pub fn detector() -> Self {
        SpectralConfig {
            fft_size: 2048,
            hop_size: 1024,
            mel_bands: 64,
            fmin: 0.0,
            fmax: SAMPLE_RATE as f64 / 2.0,
            sample_rate: SAMPLE_RATE,
        }
    }

    /// Plain STFT settings; mel fields are set to the detector defaults.
    pub fn stft(fft_size: usize, hop_size: usize) -> Self {
        SpectralConfig {
            fft_size,
            hop_size,
            ..SpectralConfig::detector()
        }
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.fft_size < 2 {
            return bad(format!("fft_size {} < 2", self.fft_size));
        }
        if self.hop_size == 0 || self.hop_size > self.fft_size {
            return bad(format!(
                "hop_size {} must be in 1..={}",
                self.hop_size, self.fft_size
            ));
        }
        if self.mel_bands == 0 {
            return bad("mel_bands must be at least 1".into());
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        if !(self.fmin >= 0.0 && self.fmin < self.fmax && self.fmax <= nyquist) {
            return bad(format!(
                "need 0 <= fmin < fmax <= {nyquist}, got {}..{}",
                self.fmin, self.fmax
            ));
        }
        Ok(())
    }
}

/// Periodic Hann window.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Number of full frames; the trailing partial frame is dropped.
pub fn frame_count(len: usize, fft_size: usize, hop_size: usize) -> usize {
    if len < fft_size {
        0
    } else {
        1 + (len - fft_size) / hop_size
    }
}

/// Runs `visit(frame, spectrum)` over the one-sided spectra of Hann-windowed
/// frames.
fn for_each_frame(
    samples: &[f32],
    fft_size: usize,
    hop_size: usize,
    mut visit: impl FnMut(usize, &[Complex64]),
) -> Result<usize> {
    if samples.len() < fft_size {
        return Err(Error::ClipTooShort {
            len: samples.len(),
            needed: fft_size,
        });
    }
    if hop_size == 0 {
        return Err(Error::InvalidConfig("hop size must be positive".into()));
    }
    let frames = frame_count(samples.len(), fft_size, hop_size);
    let window = hann_window(fft_size);
    let fft = RealFftPlanner::<f64>::new().plan_fft_forward(fft_size);
    let mut input = fft.make_input_vec();
    let mut spectrum = fft.make_output_vec();
    let mut scratch = fft.make_scratch_vec();
    for f in 0..frames {
        let start = f * hop_size;
        for (slot, (&s, &w)) in input
            .iter_mut()
            .zip(samples[start..start + fft_size].iter().zip(&window))
        {
            *slot = s as f64 * w;
        }
        fft.process_with_scratch(&mut input, &mut spectrum, &mut scratch)
            .map_err(|e| Error::InvalidConfig(format!("fft: {e}")))?;
        visit(f, &spectrum);
    }
    Ok(frames)
}

/// One-sided STFT of a sample slice, shape `(frames, fft_size / 2 + 1)`.
pub fn stft_samples(samples: &[f32], fft_size: usize, hop_size: usize) -> Result<Array2<Complex64>> {
    let frames = frame_count(samples.len(), fft_size, hop_size);
    let mut out = Array2::zeros((frames, fft_size / 2 + 1));
    for_each_frame(samples, fft_size, hop_size, |f, spec| {
        out.row_mut(f).iter_mut().zip(spec).for_each(|(d, s)| *d = *s);
    })?;
    Ok(out)
}

pub fn stft(clip: &AudioClip, cfg: &SpectralConfig) -> Result<Array2<Complex64>> {
    cfg.validate()?;
    stft_samples(clip.samples(), cfg.fft_size, cfg.hop_size)
}

/// Magnitude spectrogram, shape `(frames, bins)`.
pub fn magnitude_spectrogram(samples: &[f32], fft_size: usize, hop_size: usize) -> Result<Array2<f64>> {
    let frames = frame_count(samples.len(), fft_size, hop_size);
    let mut out = Array2::zeros((frames, fft_size / 2 + 1));
    for_each_frame(samples, fft_size, hop_size, |f, spec| {
        out.row_mut(f).iter_mut().zip(spec).for_each(|(d, s)| *d = s.norm());
    })?;
    Ok(out)
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters on the HTK mel scale, shape `(mel_bands, bins)`.
///
/// Each row has contiguous support. A band too narrow to cover any FFT bin
/// is given unit weight on the bin nearest its centre.
pub fn mel_filterbank(cfg: &SpectralConfig) -> Result<Array2<f64>> {
    cfg.validate()?;
    let bins = cfg.bins();
    let bin_hz = cfg.sample_rate as f64 / cfg.fft_size as f64;
    let lo = hz_to_mel(cfg.fmin);
    let hi = hz_to_mel(cfg.fmax);
    let edges: Vec<f64> = (0..cfg.mel_bands + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (cfg.mel_bands + 1) as f64))
        .collect();

    let mut bank = Array2::zeros((cfg.mel_bands, bins));
    for band in 0..cfg.mel_bands {
        let (left, centre, right) = (edges[band], edges[band + 1], edges[band + 2]);
        let mut any = false;
        for k in 0..bins {
            let f = k as f64 * bin_hz;
            let w = if f > left && f <= centre {
                (f - left) / (centre - left)
            } else if f > centre && f < right {
                (right - f) / (right - centre)
            } else {
                0.0
            };
            if w > 0.0 {
                bank[[band, k]] = w;
                any = true;
            }
        }
        if !any {
            let k = ((centre / bin_hz).round() as usize).min(bins - 1);
            bank[[band, k]] = 1.0;
        }
    }
    Ok(bank)
}

/// Natural-log mel magnitudes, shape `(mel_bands, frames)`.
pub fn log_mel_features(clip: &AudioClip, cfg: &SpectralConfig) -> Result<Array2<f64>> {
    let bank = mel_filterbank(cfg)?;
    let mags = magnitude_spectrogram(clip.samples(), cfg.fft_size, cfg.hop_size)?;
    let mel = bank.dot(&mags.t());
    Ok(mel.mapv(|v| (v + LOG_EPS).ln()))
}
