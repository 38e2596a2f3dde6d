//! Synthesizes one clip per source family, normalizes it to the pipeline
//! loudness and writes it as a float32 WAV.
//!
//! `cargo run --example sources -- [out_dir]`

use std::path::PathBuf;

use remfx::loudness::{measure_integrated_loudness, normalize_loudness};
use remfx::source::{synthesize_source, SourceFamily, SourceSpec};
use remfx::wav::{load_wav, save_wav};
use remfx::{CLIP_LEN, TARGET_LUFS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&out)?;
    for (i, family) in SourceFamily::SYNTHETIC.into_iter().enumerate() {
        let raw = synthesize_source(&SourceSpec::synthetic(family, i as u64), CLIP_LEN)?;
        let clip = normalize_loudness(&raw, TARGET_LUFS)?;
        let path = out.join(format!("{family:?}.wav").to_lowercase());
        save_wav(&clip, &path)?;
        let back = load_wav(&path)?;
        println!(
            "{family:?}: {:.2} s, peak {:.3}, {:.2} LUFS, round-trip exact: {} -> {}",
            clip.duration_secs(),
            clip.peak(),
            measure_integrated_loudness(&back)?.lufs,
            back == clip,
            path.display()
        );
    }
    Ok(())
}
