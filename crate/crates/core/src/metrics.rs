//! Separation metrics and the removal training loss.

use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::error::{Error, Result};
use crate::spectral::{magnitude_spectrogram, LOG_EPS};

/// STFT resolutions for the multi-resolution error, as `(fft_size, hop_size)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MrStftConfig {
    pub resolutions: Vec<(usize, usize)>,
    pub eps: f64,
}

impl Default for MrStftConfig {
    fn default() -> Self {
        MrStftConfig {
            resolutions: vec![(512, 128), (1024, 256), (2048, 512)],
            eps: LOG_EPS,
        }
    }
}

impl MrStftConfig {
    pub fn max_fft(&self) -> usize {
        self.resolutions.iter().map(|r| r.0).max().unwrap_or(0)
    }
}

/// Time-domain and spectral fidelity of one estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricPair {
    #[serde(with = "float_or_inf")]
    pub si_sdr_db: f64,
    pub mr_stft: f64,
}

pub fn metric_pair(estimate: &AudioClip, reference: &AudioClip) -> Result<MetricPair> {
    Ok(MetricPair {
        si_sdr_db: si_sdr(estimate, reference)?,
        mr_stft: mr_stft_error(estimate, reference)?,
    })
}

fn check_lengths(a: &AudioClip, b: &AudioClip) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(())
}

/// Scale-invariant SDR in dB. Returns `+inf` when the residual after optimal
/// scaling is below `1e-12` of the scaled reference energy.
pub fn si_sdr(estimate: &AudioClip, reference: &AudioClip) -> Result<f64> {
    si_sdr_of(estimate.samples(), reference.samples())
}

/// [`si_sdr`] on double-precision sample slices.
pub fn si_sdr_samples(estimate: &[f64], reference: &[f64]) -> Result<f64> {
    si_sdr_of(estimate, reference)
}

fn si_sdr_of<T: Copy + Into<f64>>(estimate: &[T], reference: &[T]) -> Result<f64> {
    if estimate.len() != reference.len() {
        return Err(Error::LengthMismatch(estimate.len(), reference.len()));
    }
    let (mut dot, mut ref_energy) = (0.0f64, 0.0f64);
    for (&e, &r) in estimate.iter().zip(reference) {
        let (e, r): (f64, f64) = (e.into(), r.into());
        dot += e * r;
        ref_energy += r * r;
    }
    if ref_energy == 0.0 {
        return Err(Error::ZeroReference);
    }
    let alpha = dot / ref_energy;
    let mut target = 0.0f64;
    let mut residual = 0.0f64;
    for (&e, &r) in estimate.iter().zip(reference) {
        let t = alpha * r.into();
        target += t * t;
        residual += (e.into() - t).powi(2);
    }
    if target == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if residual < 1e-12 * target {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (target / residual).log10())
}

pub fn mr_stft_error(estimate: &AudioClip, reference: &AudioClip) -> Result<f64> {
    mr_stft_error_with(&MrStftConfig::default(), estimate, reference)
}

/// Mean over resolutions of spectral convergence plus mean absolute
/// log-magnitude difference.
pub fn mr_stft_error_with(
    cfg: &MrStftConfig,
    estimate: &AudioClip,
    reference: &AudioClip,
) -> Result<f64> {
    check_lengths(estimate, reference)?;
    if cfg.resolutions.is_empty() {
        return Err(Error::InvalidConfig("no STFT resolutions".into()));
    }
    let mut total = 0.0;
    for &(fft, hop) in &cfg.resolutions {
        let est = magnitude_spectrogram(estimate.samples(), fft, hop)?;
        let reference = magnitude_spectrogram(reference.samples(), fft, hop)?;
        let mut diff_sq = 0.0;
        let mut ref_sq = 0.0;
        let mut log_diff = 0.0;
        for (&e, &r) in est.iter().zip(reference.iter()) {
            diff_sq += (e - r) * (e - r);
            ref_sq += r * r;
            log_diff += ((e + cfg.eps) / (r + cfg.eps)).ln().abs();
        }
        let convergence = if diff_sq == 0.0 {
            0.0
        } else if ref_sq == 0.0 {
            return Err(Error::ZeroReference);
        } else {
            (diff_sq / ref_sq).sqrt()
        };
        total += convergence + log_diff / est.len() as f64;
    }
    Ok(total / cfg.resolutions.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

/// Signed improvement of an output metric over the input metric; positive
/// is always better.
pub fn improvement(on_output: f64, on_input: f64, direction: Direction) -> f64 {
    match direction {
        Direction::HigherBetter => on_output - on_input,
        Direction::LowerBetter => on_input - on_output,
    }
}

pub const L1_WEIGHT: f64 = 100.0;
pub const MR_STFT_WEIGHT: f64 = 1.0;

/// `100 * mean|estimate - reference| + 1 * mr_stft_error`.
pub fn composite_loss(estimate: &AudioClip, reference: &AudioClip) -> Result<f64> {
    check_lengths(estimate, reference)?;
    let l1 = estimate
        .samples()
        .iter()
        .zip(reference.samples())
        .map(|(&e, &r)| (e as f64 - r as f64).abs())
        .sum::<f64>()
        / estimate.len() as f64;
    Ok(L1_WEIGHT * l1 + MR_STFT_WEIGHT * mr_stft_error(estimate, reference)?)
}

/// Serde for floats that may be infinite: `+inf` is written as the string
/// `"Inf"`, `-inf` as `"-Inf"` and NaN as `"NaN"`; finite values as numbers.
pub mod float_or_inf {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("Inf")
        } else if *v == f64::NEG_INFINITY {
            s.serialize_str("-Inf")
        } else if v.is_nan() {
            s.serialize_str("NaN")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) if t == "Inf" => Ok(f64::INFINITY),
            Raw::Text(t) if t == "-Inf" => Ok(f64::NEG_INFINITY),
            Raw::Text(t) if t == "NaN" => Ok(f64::NAN),
            Raw::Text(t) => Err(de::Error::custom(format!("expected number or \"Inf\", got {t:?}"))),
        }
    }

    /// The same convention for optional values; `None` is `null`.
    pub mod option {
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => super::serialize(v, s),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            #[derive(Deserialize)]
            struct Wrap(#[serde(with = "super")] f64);
            Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
        }
    }
}
