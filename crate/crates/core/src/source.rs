//! Deterministic clean-source generators and user audio ingestion.
//!
//! Four synthetic families stand in for voice, guitar, bass and drum
//! recordings. Output depends only on `(family, seed, length)`.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::audio::{AudioClip, SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::wav::load_wav;

const FS: f64 = SAMPLE_RATE as f64;
const PEAK: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceFamily {
    Pluck,
    DrumHit,
    Bass,
    VocalLike,
    Ingest,
}

impl SourceFamily {
    pub const SYNTHETIC: [SourceFamily; 4] = [
        SourceFamily::Pluck,
        SourceFamily::DrumHit,
        SourceFamily::Bass,
        SourceFamily::VocalLike,
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub family: SourceFamily,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl SourceSpec {
    pub fn synthetic(family: SourceFamily, seed: u64) -> Self {
        SourceSpec {
            family,
            seed,
            path: None,
        }
    }

    pub fn ingest(path: impl Into<PathBuf>) -> Self {
        SourceSpec {
            family: SourceFamily::Ingest,
            seed: 0,
            path: Some(path.into()),
        }
    }
}

pub fn synthesize_source(spec: &SourceSpec, length: usize) -> Result<AudioClip> {
    if length == 0 {
        return Err(Error::InvalidAudio("requested source length is zero".into()));
    }
    let mut rng = RngStream::new(spec.seed, spec.family as u64);
    let raw = match spec.family {
        SourceFamily::Pluck => pluck(&mut rng, length),
        SourceFamily::DrumHit => drums(&mut rng, length),
        SourceFamily::Bass => bass(&mut rng, length),
        SourceFamily::VocalLike => vocal(&mut rng, length),
        SourceFamily::Ingest => return ingest(spec, length),
    };
    AudioClip::from_f64(&peak_normalize(raw), SAMPLE_RATE)
}

/// Reads a user file; it must already be 48 kHz mono float. The result is
/// cut or zero-padded to `length`.
fn ingest(spec: &SourceSpec, length: usize) -> Result<AudioClip> {
    let path = spec.path.clone().ok_or_else(|| Error::IngestFormat {
        path: PathBuf::new(),
        reason: "ingest source has no path".into(),
    })?;
    let clip = load_wav(&path).map_err(|e| match e {
        Error::UnsupportedFormat(reason) | Error::MalformedWav(reason) => Error::IngestFormat {
            path: path.clone(),
            reason,
        },
        other => other,
    })?;
    let mut samples = clip.into_samples();
    samples.resize(length, 0.0);
    AudioClip::new(samples, SAMPLE_RATE)
}

fn peak_normalize(mut x: Vec<f64>) -> Vec<f64> {
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let g = PEAK / peak;
        x.iter_mut().for_each(|v| *v *= g);
    }
    x
}

fn secs(s: f64) -> usize {
    (s * FS).round() as usize
}

/// Karplus-Strong strings: noise-excited delay lines with a damped
/// two-point average in the loop.
fn pluck(rng: &mut RngStream, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    let mut onset = 0;
    while onset < len {
        let freq = 110.0 * 2f64.powf(rng.uniform(0.0, 3.0));
        let period = ((FS / freq).round() as usize).max(2);
        let decay = rng.uniform(0.994, 0.999);
        let amp = rng.uniform(0.5, 1.0);
        let ring = secs(rng.uniform(1.0, 2.0)).min(len - onset);
        let mut line: Vec<f64> = (0..period).map(|_| rng.bipolar()).collect();
        let mut idx = 0;
        for n in 0..ring {
            let next = (idx + 1) % period;
            out[onset + n] += amp * line[idx];
            line[idx] = decay * 0.5 * (line[idx] + line[next]);
            idx = next;
        }
        onset += secs(rng.uniform(0.2, 0.7));
    }
    out
}

/// Noise bursts over pitched, decaying sine bodies. The first hit is at
/// the start with full level; no hit starts in the last 350 ms.
fn drums(rng: &mut RngStream, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    let last_onset = len.saturating_sub(secs(0.35));
    let mut onset = 0;
    let mut first = true;
    while onset < len && (first || onset <= last_onset) {
        let amp = if first { 1.0 } else { rng.uniform(0.4, 1.0) };
        let noise_tau = rng.uniform(0.01, 0.04);
        let noise_level = rng.uniform(0.2, 0.8);
        let body_tau = rng.uniform(0.05, 0.12);
        let f_start = rng.uniform(90.0, 240.0);
        let f_end = f_start * rng.uniform(0.4, 0.7);
        let span = secs(0.6).min(len - onset);
        let mut phase = 0.0;
        for n in 0..span {
            let t = n as f64 / FS;
            let f = f_end + (f_start - f_end) * (-t / 0.03).exp();
            phase += 2.0 * PI * f / FS;
            let body = phase.sin() * (-t / body_tau).exp();
            let burst = noise_level * rng.bipolar() * (-t / noise_tau).exp();
            out[onset + n] += amp * (body + burst);
        }
        first = false;
        onset += secs(rng.uniform(0.15, 0.5));
    }
    out
}

/// Naive sawtooth notes through a two-pole low-pass with an envelope.
fn bass(rng: &mut RngStream, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    let mut onset = 0;
    while onset < len {
        let freq = 40.0 * 2f64.powf(rng.uniform(0.0, 2.0));
        let note = secs(rng.uniform(0.2, 0.8)).min(len - onset);
        let cutoff = rng.uniform(300.0, 1200.0);
        let decay = rng.uniform(0.3, 1.2);
        let amp = rng.uniform(0.6, 1.0);
        let a = (-2.0 * PI * cutoff / FS).exp();
        let (mut s1, mut s2, mut phase) = (0.0, 0.0, 0.0);
        for n in 0..note {
            let t = n as f64 / FS;
            let saw = 2.0 * phase - 1.0;
            phase = (phase + freq / FS).fract();
            s1 = (1.0 - a) * saw + a * s1;
            s2 = (1.0 - a) * s1 + a * s2;
            let attack = (t / 0.005).min(1.0);
            let release = ((note - n) as f64 / secs(0.01) as f64).min(1.0);
            out[onset + n] += amp * s2 * attack * release * (-t / decay).exp();
        }
        onset += note + secs(rng.uniform(0.0, 0.15));
    }
    out
}

const VOWELS: [[f64; 3]; 5] = [
    [800.0, 1150.0, 2900.0],
    [400.0, 1600.0, 2700.0],
    [350.0, 2300.0, 3000.0],
    [450.0, 800.0, 2830.0],
    [325.0, 700.0, 2530.0],
];

/// Two-pole resonator with unity gain at its centre.
struct Resonator {
    a1: f64,
    a2: f64,
    gain: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(freq: f64, bandwidth: f64) -> Self {
        let r = (-PI * bandwidth / FS).exp();
        let theta = 2.0 * PI * freq / FS;
        Resonator {
            a1: 2.0 * r * theta.cos(),
            a2: -r * r,
            gain: 1.0 - r,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn process(&mut self, x: f64) -> f64 {
        let y = self.gain * x + self.a1 * self.y1 + self.a2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// Glottal-style pulse train with vibrato through three formant resonators.
fn vocal(rng: &mut RngStream, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    let mut onset = secs(rng.uniform(0.0, 0.1));
    while onset < len {
        let f0 = rng.uniform(150.0, 400.0);
        let vib_rate = rng.uniform(4.5, 6.5);
        let vib_depth = rng.uniform(0.01, 0.03);
        let vowel = VOWELS[rng.below(VOWELS.len() as u64) as usize];
        let note = secs(rng.uniform(0.3, 1.2)).min(len - onset);
        let amp = rng.uniform(0.6, 1.0);
        let mut formants: Vec<(Resonator, f64)> = vowel
            .iter()
            .zip([1.0, 0.6, 0.3])
            .map(|(&f, g)| (Resonator::new(f, 60.0 + f * 0.05), g))
            .collect();
        let ramp = secs(0.03) as f64;
        let mut phase = 0.0;
        for n in 0..note {
            let t = n as f64 / FS;
            let f = f0 * (1.0 + vib_depth * (2.0 * PI * vib_rate * t).sin());
            phase += f / FS;
            let pulse = if phase >= 1.0 {
                phase -= 1.0;
                1.0
            } else {
                0.0
            };
            let excitation = pulse + 0.02 * rng.bipolar();
            let voiced: f64 = formants.iter_mut().map(|(r, g)| *g * r.process(excitation)).sum();
            let env = (n as f64 / ramp).min(1.0) * ((note - n) as f64 / ramp).min(1.0);
            out[onset + n] += amp * env * voiced;
        }
        onset += note + secs(rng.uniform(0.05, 0.3));
    }
    out
}
