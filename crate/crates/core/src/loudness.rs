//! Gated integrated loudness for mono 48 kHz audio and gain normalization.

use serde::{Deserialize, Serialize};

use crate::audio::{AudioClip, SAMPLE_RATE};
use crate::error::{Error, Result};

/// Loudness every pipeline stage is normalized to.
pub const TARGET_LUFS: f64 = -20.0;

const BLOCK: usize = 19_200; // 400 ms
const STEP: usize = 4_800; // 75% overlap
const ABSOLUTE_GATE: f64 = -70.0;
const RELATIVE_GATE: f64 = -10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoudnessReading {
    pub lufs: f64,
    pub gated_blocks: usize,
}

struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

#[derive(Default)]
struct BiquadState {
    x1: f64,
    x2: f64,
    y1: f64,
    y2: f64,
}

impl BiquadState {
    fn step(&mut self, f: &Biquad, x0: f64) -> f64 {
        let y0 = f.b[0] * x0 + f.b[1] * self.x1 + f.b[2] * self.x2 - f.a[0] * self.y1 - f.a[1] * self.y2;
        self.x2 = self.x1;
        self.x1 = x0;
        self.y2 = self.y1;
        self.y1 = y0;
        y0
    }
}

// K-weighting at 48 kHz: high shelf, then RLB high-pass.
const SHELF: Biquad = Biquad {
    b: [1.53512485958697, -2.69169618940638, 1.19839281085285],
    a: [-1.69065929318241, 0.73248077421585],
};
const HIGH_PASS: Biquad = Biquad {
    b: [1.0, -2.0, 1.0],
    a: [-1.99004745483398, 0.99007225036621],
};

fn block_loudness(mean_square: f64) -> f64 {
    -0.691 + 10.0 * mean_square.log10()
}

pub fn measure_integrated_loudness(clip: &AudioClip) -> Result<LoudnessReading> {
    if clip.sample_rate() != SAMPLE_RATE {
        return Err(Error::UnsupportedFormat(format!(
            "loudness needs {SAMPLE_RATE} Hz, got {}",
            clip.sample_rate()
        )));
    }
    if clip.len() < BLOCK {
        return Err(Error::ClipTooShort {
            len: clip.len(),
            needed: BLOCK,
        });
    }
    // Blocks are four consecutive steps, so K-weighted energy is summed per step.
    let (mut shelf, mut high_pass) = (BiquadState::default(), BiquadState::default());
    let step_energy: Vec<f64> = clip
        .samples()
        .chunks(STEP)
        .map(|chunk| {
            chunk
                .iter()
                .map(|&x| {
                    let w = high_pass.step(&HIGH_PASS, shelf.step(&SHELF, x as f64));
                    w * w
                })
                .sum()
        })
        .collect();
    let per_block = BLOCK / STEP;
    let blocks = 1 + (clip.len() - BLOCK) / STEP;
    let energies: Vec<f64> = (0..blocks)
        .map(|j| step_energy[j..j + per_block].iter().sum::<f64>() / BLOCK as f64)
        .collect();

    let above_absolute: Vec<f64> = energies
        .iter()
        .copied()
        .filter(|&z| z > 0.0 && block_loudness(z) > ABSOLUTE_GATE)
        .collect();
    if above_absolute.is_empty() {
        return Err(Error::GatedSilence);
    }
    let relative = block_loudness(mean(&above_absolute)) + RELATIVE_GATE;
    let gated: Vec<f64> = above_absolute
        .into_iter()
        .filter(|&z| block_loudness(z) > relative)
        .collect();
    if gated.is_empty() {
        return Err(Error::GatedSilence);
    }
    Ok(LoudnessReading {
        lufs: block_loudness(mean(&gated)),
        gated_blocks: gated.len(),
    })
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Scales `clip` so its integrated loudness becomes `target_lufs`. One
/// measurement, one gain; no limiting.
pub fn normalize_loudness(clip: &AudioClip, target_lufs: f64) -> Result<AudioClip> {
    Ok(normalize_with_gain(clip, target_lufs)?.0)
}

/// Like [`normalize_loudness`], also returning the linear gain applied.
pub fn normalize_with_gain(clip: &AudioClip, target_lufs: f64) -> Result<(AudioClip, f64)> {
    let reading = measure_integrated_loudness(clip)?;
    let gain = 10f64.powf((target_lufs - reading.lufs) / 20.0);
    Ok((clip.scaled(gain)?, gain))
}
