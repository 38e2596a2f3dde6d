//! Mono 32-bit IEEE float WAV files at 48 kHz.
//!
//! The reader accepts a plain `WAVE_FORMAT_IEEE_FLOAT` fmt chunk or the
//! extensible form carrying the float sub-format GUID, skips unknown chunks,
//! and rejects anything that is not mono, 32-bit, 48 kHz. The writer always
//! emits the canonical 44-byte header followed by little-endian frames, so
//! `load_wav(save_wav(x)) == x` bit for bit.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::audio::{AudioClip, SAMPLE_RATE};
use crate::error::{Error, Result};

const FORMAT_IEEE_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;
// First two bytes of KSDATAFORMAT_SUBTYPE_IEEE_FLOAT; the rest is the fixed suffix.
const FLOAT_GUID_TAIL: [u8; 14] = [
    0x00, 0x00, 0x00, 0x00, 0x10, 0x00, 0x80, 0x00, 0x00, 0xAA, 0x00, 0x38, 0x9B, 0x71,
];

struct Format {
    tag: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

fn read_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn parse_fmt(body: &[u8]) -> Result<Format> {
    if body.len() < 16 {
        return Err(Error::MalformedWav(format!(
            "fmt chunk is {} bytes, need 16",
            body.len()
        )));
    }
    let mut tag = read_u16(body, 0);
    if tag == FORMAT_EXTENSIBLE {
        if body.len() < 40 {
            return Err(Error::MalformedWav("truncated extensible fmt chunk".into()));
        }
        let sub = read_u16(body, 24);
        if body[26..40] != FLOAT_GUID_TAIL {
            return Err(Error::UnsupportedFormat(
                "extensible sub-format GUID is not a standard PCM/float GUID".into(),
            ));
        }
        tag = sub;
    }
    Ok(Format {
        tag,
        channels: read_u16(body, 2),
        sample_rate: read_u32(body, 4),
        bits: read_u16(body, 14),
    })
}

/// Decodes WAV bytes already in memory.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip> {
    if bytes.len() < 12 {
        return Err(Error::MalformedWav("file shorter than the RIFF header".into()));
    }
    if &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::MalformedWav("missing RIFF/WAVE signature".into()));
    }

    let mut format = None;
    let mut data = None;
    let mut pos = 12;
    while pos < bytes.len() {
        if pos + 8 > bytes.len() {
            return Err(Error::MalformedWav(format!(
                "truncated chunk header at byte {pos}"
            )));
        }
        let id = &bytes[pos..pos + 4];
        let size = read_u32(bytes, pos + 4) as usize;
        let start = pos + 8;
        let end = start
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| {
                Error::MalformedWav(format!(
                    "chunk {:?} claims {size} bytes past end of file",
                    String::from_utf8_lossy(id)
                ))
            })?;
        match id {
            b"fmt " => format = Some(parse_fmt(&bytes[start..end])?),
            b"data" => {
                data = Some(&bytes[start..end]);
            }
            _ => {}
        }
        if data.is_some() && format.is_some() {
            break;
        }
        // Chunks are word aligned.
        pos = end + (size & 1);
    }

    let format = format.ok_or_else(|| Error::MalformedWav("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::MalformedWav("no data chunk".into()))?;

    if format.tag != FORMAT_IEEE_FLOAT {
        return Err(Error::UnsupportedFormat(format!(
            "sample format tag {} (need 3, IEEE float)",
            format.tag
        )));
    }
    if format.channels != 1 {
        return Err(Error::UnsupportedFormat(format!(
            "{} channels (need mono)",
            format.channels
        )));
    }
    if format.bits != 32 {
        return Err(Error::UnsupportedFormat(format!(
            "{} bits per sample (need 32)",
            format.bits
        )));
    }
    if format.sample_rate != SAMPLE_RATE {
        return Err(Error::UnsupportedFormat(format!(
            "sample rate {} Hz (need {SAMPLE_RATE} Hz)",
            format.sample_rate
        )));
    }
    if data.len() % 4 != 0 {
        return Err(Error::MalformedWav(format!(
            "data chunk of {} bytes is not a whole number of frames",
            data.len()
        )));
    }

    let samples: Vec<f32> = data
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    AudioClip::new(samples, SAMPLE_RATE).map_err(|e| Error::MalformedWav(e.to_string()))
}

/// Encodes a clip as a canonical 44-byte-header float WAV.
pub fn encode_wav(clip: &AudioClip) -> Result<Vec<u8>> {
    if clip.sample_rate() != SAMPLE_RATE {
        return Err(Error::UnsupportedFormat(format!(
            "sample rate {} Hz (need {SAMPLE_RATE} Hz)",
            clip.sample_rate()
        )));
    }
    let data_len = clip.len() * 4;
    let riff_len = u32::try_from(36 + data_len)
        .map_err(|_| Error::UnsupportedFormat("clip too long for a RIFF file".into()))?;

    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&riff_len.to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_IEEE_FLOAT.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&SAMPLE_RATE.to_le_bytes());
    out.extend_from_slice(&(SAMPLE_RATE * 4).to_le_bytes());
    out.extend_from_slice(&4u16.to_le_bytes());
    out.extend_from_slice(&32u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for s in clip.samples() {
        out.extend_from_slice(&s.to_le_bytes());
    }
    Ok(out)
}

pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_wav(&bytes)
}

pub fn save_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_wav(clip)?;
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}
