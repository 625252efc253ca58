//! Minimal RIFF/WAVE reader and writer for mono PCM files.
//!
//! Reads 8- and 16-bit mono PCM, normalizing integer samples to [-1, 1].
//! Writes canonical 16-bit mono PCM. Unknown RIFF chunks are skipped.

use std::path::Path;

use crate::audio::AudioSignal;
use crate::error::{Error, Result};

const PCM_FORMAT_TAG: u16 = 1;

/// Reads a mono PCM WAV file (8 or 16 bits per sample).
pub fn read_wav(path: &Path) -> Result<AudioSignal> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_wav(&bytes)
}

fn parse_wav(bytes: &[u8]) -> Result<AudioSignal> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::MalformedWav("missing RIFF/WAVE header".into()));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (format, channels, rate, bits)
    let mut data: Option<&[u8]> = None;

    let mut pos = 12usize;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .ok_or_else(|| Error::MalformedWav("chunk size overflow".into()))?;
        if body_end > bytes.len() {
            return Err(Error::MalformedWav(format!(
                "chunk {:?} extends past end of file",
                String::from_utf8_lossy(id)
            )));
        }
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(Error::MalformedWav("fmt chunk too short".into()));
                }
                let format = u16::from_le_bytes(body[0..2].try_into().unwrap());
                let channels = u16::from_le_bytes(body[2..4].try_into().unwrap());
                let rate = u32::from_le_bytes(body[4..8].try_into().unwrap());
                let bits = u16::from_le_bytes(body[14..16].try_into().unwrap());
                fmt = Some((format, channels, rate, bits));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // Chunk bodies are padded to even length.
        pos = body_end + (size & 1);
    }

    let (format, channels, rate, bits) =
        fmt.ok_or_else(|| Error::MalformedWav("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::MalformedWav("no data chunk".into()))?;

    if channels != 1 {
        return Err(Error::MultiChannel { channels });
    }
    if format != PCM_FORMAT_TAG {
        return Err(Error::UnsupportedEncoding(format!(
            "format tag {format} (only PCM is supported)"
        )));
    }
    if rate == 0 {
        return Err(Error::MalformedWav("zero sample rate".into()));
    }

    let samples = match bits {
        16 => {
            if data.len() % 2 != 0 {
                return Err(Error::MalformedWav("odd data size for 16-bit samples".into()));
            }
            data.chunks_exact(2)
                .map(|b| f64::from(i16::from_le_bytes([b[0], b[1]])) / 32768.0)
                .collect()
        }
        8 => data
            .iter()
            .map(|&b| (f64::from(b) - 128.0) / 128.0)
            .collect(),
        other => {
            return Err(Error::UnsupportedEncoding(format!(
                "{other} bits per sample (only 8 and 16 are supported)"
            )))
        }
    };

    Ok(AudioSignal::new(samples, rate))
}

/// Writes a signal as a 16-bit mono PCM WAV file.
pub fn write_wav(path: &Path, signal: &AudioSignal) -> Result<()> {
    let bytes = encode_wav(signal);
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn encode_wav(signal: &AudioSignal) -> Vec<u8> {
    let data_len = signal.samples.len() * 2;
    let rate = signal.sample_rate_hz;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&PCM_FORMAT_TAG.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &x in &signal.samples {
        let v = (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}
