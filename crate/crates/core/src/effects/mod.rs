//! The five effects, their parameter boxes and random parameter sampling.

mod inverse;
mod kernels;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::error::{Error, Result};
use crate::rng::RngStream;

pub use inverse::oracle_inverse;
pub use kernels::{apply_chorus, apply_compressor, apply_delay, apply_distortion, apply_reverb};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EffectKind {
    #[serde(rename = "DST")]
    Distortion = 0,
    #[serde(rename = "DRC")]
    Compressor = 1,
    #[serde(rename = "RVB")]
    Reverb = 2,
    #[serde(rename = "CHS")]
    Chorus = 3,
    #[serde(rename = "DLY")]
    Delay = 4,
}

impl EffectKind {
    pub const ALL: [EffectKind; 5] = [
        EffectKind::Distortion,
        EffectKind::Compressor,
        EffectKind::Reverb,
        EffectKind::Chorus,
        EffectKind::Delay,
    ];

    pub const COUNT: usize = 5;

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<EffectKind> {
        EffectKind::ALL.get(code).copied()
    }

    /// Three-letter tag: DST, DRC, RVB, CHS or DLY.
    pub fn name(self) -> &'static str {
        match self {
            EffectKind::Distortion => "DST",
            EffectKind::Compressor => "DRC",
            EffectKind::Reverb => "RVB",
            EffectKind::Chorus => "CHS",
            EffectKind::Delay => "DLY",
        }
    }

    /// Whether [`oracle_inverse`] can undo this effect exactly.
    pub fn has_oracle_inverse(self) -> bool {
        matches!(self, EffectKind::Distortion | EffectKind::Delay)
    }
}

impl fmt::Display for EffectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EffectKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EffectKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownKind(s.to_string()))
    }
}

/// A closed parameter interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
}

impl ParamRange {
    const fn new(lo: f64, hi: f64) -> Self {
        ParamRange { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    fn sample(&self, rng: &mut RngStream) -> f64 {
        rng.uniform(self.lo, self.hi)
    }

    fn check(&self, kind: EffectKind, name: &str, v: f64) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "{kind} {name} = {v} outside [{}, {}]",
                self.lo, self.hi
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistortionParams {
    pub drive_db: f64,
}

impl DistortionParams {
    pub const DRIVE_DB: ParamRange = ParamRange::new(6.0, 30.0);

    pub fn gain(&self) -> f64 {
        10f64.powf(self.drive_db / 20.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompressorParams {
    pub threshold_db: f64,
    pub ratio: f64,
    pub attack_ms: f64,
    pub release_ms: f64,
}

impl CompressorParams {
    pub const THRESHOLD_DB: ParamRange = ParamRange::new(-40.0, -20.0);
    pub const RATIO: ParamRange = ParamRange::new(2.0, 10.0);
    pub const ATTACK_MS: ParamRange = ParamRange::new(1.0, 50.0);
    pub const RELEASE_MS: ParamRange = ParamRange::new(50.0, 500.0);
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReverbParams {
    /// Feedback of the parallel combs.
    pub room_size: f64,
    pub mix: f64,
}

impl ReverbParams {
    pub const ROOM_SIZE: ParamRange = ParamRange::new(0.75, 0.95);
    pub const MIX: ParamRange = ParamRange::new(0.2, 0.7);
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChorusParams {
    pub rate_hz: f64,
    pub depth_ms: f64,
    pub mix: f64,
}

impl ChorusParams {
    pub const RATE_HZ: ParamRange = ParamRange::new(0.5, 3.0);
    pub const DEPTH_MS: ParamRange = ParamRange::new(2.0, 8.0);
    pub const MIX: ParamRange = ParamRange::new(0.3, 0.5);
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayParams {
    pub delay_ms: f64,
    pub feedback: f64,
    pub mix: f64,
}

impl DelayParams {
    pub const DELAY_MS: ParamRange = ParamRange::new(100.0, 400.0);
    pub const FEEDBACK: ParamRange = ParamRange::new(0.2, 0.6);
    // Capped so the exact inverse filter stays stable.
    pub const MIX: ParamRange = ParamRange::new(0.15, 0.45);

    pub fn delay_samples(&self, sample_rate: u32) -> usize {
        (self.delay_ms * sample_rate as f64 / 1000.0).round() as usize
    }
}

/// One effect with concrete parameters. Serializes as
/// `{"kind": "DST", "params": {"drive_db": 12.5}}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum EffectInstance {
    #[serde(rename = "DST")]
    Distortion(DistortionParams),
    #[serde(rename = "DRC")]
    Compressor(CompressorParams),
    #[serde(rename = "RVB")]
    Reverb(ReverbParams),
    #[serde(rename = "CHS")]
    Chorus(ChorusParams),
    #[serde(rename = "DLY")]
    Delay(DelayParams),
}

impl EffectInstance {
    pub fn kind(&self) -> EffectKind {
        match self {
            EffectInstance::Distortion(_) => EffectKind::Distortion,
            EffectInstance::Compressor(_) => EffectKind::Compressor,
            EffectInstance::Reverb(_) => EffectKind::Reverb,
            EffectInstance::Chorus(_) => EffectKind::Chorus,
            EffectInstance::Delay(_) => EffectKind::Delay,
        }
    }

    /// Checks every parameter against its closed range.
    pub fn validate(&self) -> Result<()> {
        let k = self.kind();
        match self {
            EffectInstance::Distortion(p) => DistortionParams::DRIVE_DB.check(k, "drive_db", p.drive_db),
            EffectInstance::Compressor(p) => {
                CompressorParams::THRESHOLD_DB.check(k, "threshold_db", p.threshold_db)?;
                CompressorParams::RATIO.check(k, "ratio", p.ratio)?;
                CompressorParams::ATTACK_MS.check(k, "attack_ms", p.attack_ms)?;
                CompressorParams::RELEASE_MS.check(k, "release_ms", p.release_ms)
            }
            EffectInstance::Reverb(p) => {
                ReverbParams::ROOM_SIZE.check(k, "room_size", p.room_size)?;
                ReverbParams::MIX.check(k, "mix", p.mix)
            }
            EffectInstance::Chorus(p) => {
                ChorusParams::RATE_HZ.check(k, "rate_hz", p.rate_hz)?;
                ChorusParams::DEPTH_MS.check(k, "depth_ms", p.depth_ms)?;
                ChorusParams::MIX.check(k, "mix", p.mix)
            }
            EffectInstance::Delay(p) => {
                DelayParams::DELAY_MS.check(k, "delay_ms", p.delay_ms)?;
                DelayParams::FEEDBACK.check(k, "feedback", p.feedback)?;
                DelayParams::MIX.check(k, "mix", p.mix)
            }
        }
    }
}

/// Draws each parameter of `kind` independently and uniformly from its range,
/// in declaration order.
pub fn sample_params(kind: EffectKind, rng: &mut RngStream) -> EffectInstance {
    match kind {
        EffectKind::Distortion => EffectInstance::Distortion(DistortionParams {
            drive_db: DistortionParams::DRIVE_DB.sample(rng),
        }),
        EffectKind::Compressor => EffectInstance::Compressor(CompressorParams {
            threshold_db: CompressorParams::THRESHOLD_DB.sample(rng),
            ratio: CompressorParams::RATIO.sample(rng),
            attack_ms: CompressorParams::ATTACK_MS.sample(rng),
            release_ms: CompressorParams::RELEASE_MS.sample(rng),
        }),
        EffectKind::Reverb => EffectInstance::Reverb(ReverbParams {
            room_size: ReverbParams::ROOM_SIZE.sample(rng),
            mix: ReverbParams::MIX.sample(rng),
        }),
        EffectKind::Chorus => EffectInstance::Chorus(ChorusParams {
            rate_hz: ChorusParams::RATE_HZ.sample(rng),
            depth_ms: ChorusParams::DEPTH_MS.sample(rng),
            mix: ChorusParams::MIX.sample(rng),
        }),
        EffectKind::Delay => EffectInstance::Delay(DelayParams {
            delay_ms: DelayParams::DELAY_MS.sample(rng),
            feedback: DelayParams::FEEDBACK.sample(rng),
            mix: DelayParams::MIX.sample(rng),
        }),
    }
}

pub fn apply_effect(clip: &AudioClip, fx: &EffectInstance) -> Result<AudioClip> {
    match fx {
        EffectInstance::Distortion(p) => apply_distortion(clip, p),
        EffectInstance::Compressor(p) => apply_compressor(clip, p),
        EffectInstance::Reverb(p) => apply_reverb(clip, p),
        EffectInstance::Chorus(p) => apply_chorus(clip, p),
        EffectInstance::Delay(p) => apply_delay(clip, p),
    }
}
