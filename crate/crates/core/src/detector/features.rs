use ndarray::{Array2, Axis};

use crate::audio::AudioClip;
use crate::error::{Error, Result};
use crate::loudness::{normalize_loudness, TARGET_LUFS};
use crate::rng::RngStream;
use crate::spectral::{log_mel_features, SpectralConfig, LOG_EPS};

pub const MEL_BANDS: usize = 64;
pub const FEATURE_DIM: usize = 3 * MEL_BANDS;

/// Pooled log-mel statistics: per-band means, then standard deviations, then
/// mean absolute frame-to-frame differences.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != FEATURE_DIM {
            return Err(Error::InvalidConfig(format!(
                "feature vector has {} values, expected {FEATURE_DIM}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite feature value".into()));
        }
        Ok(FeatureVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn means(&self) -> &[f64] {
        &self.0[..MEL_BANDS]
    }

    pub fn stds(&self) -> &[f64] {
        &self.0[MEL_BANDS..2 * MEL_BANDS]
    }

    pub fn flux(&self) -> &[f64] {
        &self.0[2 * MEL_BANDS..]
    }
}

/// Log-mel matrix `(bands, frames)` with the detector's spectral settings.
pub fn detector_mel(clip: &AudioClip) -> Result<Array2<f64>> {
    let cfg = SpectralConfig::detector();
    if clip.len() < cfg.fft_size {
        return Err(Error::ClipTooShort {
            len: clip.len(),
            needed: cfg.fft_size,
        });
    }
    log_mel_features(clip, &cfg)
}

pub fn pool_mel(mel: &Array2<f64>) -> FeatureVector {
    let (bands, frames) = mel.dim();
    debug_assert_eq!(bands, MEL_BANDS);
    let mut out = Vec::with_capacity(FEATURE_DIM);
    let mut stds = Vec::with_capacity(bands);
    let mut flux = Vec::with_capacity(bands);
    for row in mel.axis_iter(Axis(0)) {
        let mean = row.sum() / frames as f64;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / frames as f64;
        let diff = if frames > 1 {
            row.iter()
                .zip(row.iter().skip(1))
                .map(|(a, b)| (b - a).abs())
                .sum::<f64>()
                / (frames - 1) as f64
        } else {
            0.0
        };
        out.push(mean);
        stds.push(var.sqrt());
        flux.push(diff);
    }
    out.extend(stds);
    out.extend(flux);
    FeatureVector(out)
}

pub fn extract_features(clip: &AudioClip) -> Result<FeatureVector> {
    Ok(pool_mel(&detector_mel(clip)?))
}

/// Normalizes to the pipeline loudness (when measurable) before analysis,
/// so detection does not depend on input level.
pub(crate) fn level_normalized(clip: &AudioClip) -> Result<AudioClip> {
    match normalize_loudness(clip, TARGET_LUFS) {
        Ok(c) => Ok(c),
        Err(Error::GatedSilence) | Err(Error::ClipTooShort { .. }) => Ok(clip.clone()),
        Err(e) => Err(e),
    }
}

/// Log-mel matrix of the level-normalized clip; what training and inference see.
pub fn detection_mel(clip: &AudioClip) -> Result<Array2<f64>> {
    detector_mel(&level_normalized(clip)?)
}

pub const TIME_MASK_FRACTION: f64 = 0.1;
pub const FREQ_MASK_BANDS: usize = 8;
pub const MAX_MASKS: usize = 2;

/// Up to two time masks of at most 10% of the frames and up to two frequency
/// masks of at most 8 bands, filled with the log floor.
pub fn spec_augment(mel: &Array2<f64>, rng: &mut RngStream) -> Array2<f64> {
    let floor = LOG_EPS.ln();
    let (bands, frames) = mel.dim();
    let mut out = mel.clone();

    let max_t = (TIME_MASK_FRACTION * frames as f64).floor() as usize;
    for _ in 0..rng.range_inclusive(0, MAX_MASKS) {
        let width = rng.range_inclusive(0, max_t);
        let start = rng.range_inclusive(0, frames - width);
        out.slice_mut(ndarray::s![.., start..start + width]).fill(floor);
    }
    let max_f = FREQ_MASK_BANDS.min(bands);
    for _ in 0..rng.range_inclusive(0, MAX_MASKS) {
        let width = rng.range_inclusive(0, max_f);
        let start = rng.range_inclusive(0, bands - width);
        out.slice_mut(ndarray::s![start..start + width, ..]).fill(floor);
    }
    out
}
