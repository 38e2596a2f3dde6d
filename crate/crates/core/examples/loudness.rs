//! Integrated loudness of test tones and normalization to the pipeline target.
//!
//! `cargo run --example loudness`

use std::f64::consts::PI;

use remfx::loudness::{measure_integrated_loudness, normalize_with_gain};
use remfx::{AudioClip, SAMPLE_RATE, TARGET_LUFS};

fn tone(freq: f64, amp: f64, secs: f64) -> AudioClip {
    let n = (secs * SAMPLE_RATE as f64) as usize;
    let s: Vec<f64> = (0..n)
        .map(|i| amp * (2.0 * PI * freq * i as f64 / SAMPLE_RATE as f64).sin())
        .collect();
    AudioClip::from_f64(&s, SAMPLE_RATE).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (freq, amp) in [(997.0, 1.0), (997.0, 0.5), (100.0, 0.5), (8000.0, 0.5)] {
        let x = tone(freq, amp, 3.0);
        let reading = measure_integrated_loudness(&x)?;
        let (y, gain) = normalize_with_gain(&x, TARGET_LUFS)?;
        println!(
            "{freq:>6} Hz at {amp}: {:>7.3} LUFS over {} blocks; gain {gain:.4} gives {:.3} LUFS",
            reading.lufs,
            reading.gated_blocks,
            measure_integrated_loudness(&y)?.lufs
        );
    }
    match measure_integrated_loudness(&AudioClip::silence(48_000, SAMPLE_RATE)?) {
        Err(e) => println!("silence: {e}"),
        Ok(r) => println!("silence: {r:?}"),
    }
    Ok(())
}
