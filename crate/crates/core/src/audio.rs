use crate::error::{Error, Result};

/// Sample rate used by every pipeline in this crate.
pub const SAMPLE_RATE: u32 = 48_000;

/// Length of a dataset clip (about 5.5 s at 48 kHz).
pub const CLIP_LEN: usize = 262_144;

/// A mono buffer of finite samples at a fixed rate.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioClip {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidAudio("clip has no samples".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidAudio(format!("sample {i} is not finite")));
        }
        if sample_rate == 0 {
            return Err(Error::InvalidAudio("sample rate is zero".into()));
        }
        Ok(AudioClip {
            samples,
            sample_rate,
        })
    }

    /// Builds a clip from double-precision samples, rounding each to `f32`.
    pub fn from_f64(samples: &[f64], sample_rate: u32) -> Result<Self> {
        AudioClip::new(samples.iter().map(|&s| s as f32).collect(), sample_rate)
    }

    pub fn silence(len: usize, sample_rate: u32) -> Result<Self> {
        AudioClip::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; a clip holds at least one sample.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.samples.iter().map(|&s| s as f64).collect()
    }

    pub fn peak(&self) -> f32 {
        self.samples.iter().fold(0.0f32, |m, s| m.max(s.abs()))
    }

    /// Multiplies every sample by `gain`, computed in double precision.
    pub fn scaled(&self, gain: f64) -> Result<AudioClip> {
        let samples = self
            .samples
            .iter()
            .map(|&s| (s as f64 * gain) as f32)
            .collect();
        AudioClip::new(samples, self.sample_rate)
    }

    /// Replaces the samples, keeping the rate. Used by kernels that preserve length.
    pub(crate) fn with_samples_f64(&self, samples: &[f64]) -> Result<AudioClip> {
        AudioClip::from_f64(samples, self.sample_rate)
    }

    pub fn is_silent(&self) -> bool {
        self.samples.iter().all(|&s| s == 0.0)
    }
}
