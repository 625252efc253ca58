//! G.711 A-law companding.
//!
//! Raw A-law files are headerless byte streams at 8 kHz, one code per
//! sample. Expansion follows ITU-T G.711: 13-bit magnitudes carried in the
//! usual 16-bit alignment (multiples of 8), here normalized by 1/32768.

use std::path::Path;

use crate::audio::AudioSignal;
use crate::error::{Error, Result};

/// Sample rate of raw A-law streams.
pub const ALAW_SAMPLE_RATE_HZ: u32 = 8000;

const NORM: f64 = 32768.0;

/// Expands one A-law code to a linear 16-bit sample.
pub fn expand_alaw(code: u8) -> i16 {
    let ix = (code ^ 0x55) & 0x7f;
    let exponent = ix >> 4;
    let mut mantissa = i16::from(ix & 0x0f);
    if exponent > 0 {
        mantissa += 16;
    }
    mantissa = (mantissa << 4) + 8;
    if exponent > 1 {
        mantissa <<= exponent - 1;
    }
    if code & 0x80 != 0 {
        mantissa
    } else {
        -mantissa
    }
}

/// Compresses one linear 16-bit sample to an A-law code.
pub fn compress_alaw(sample: i16) -> u8 {
    // Negative samples use the one's complement magnitude per G.711.
    let mut ix = if sample < 0 {
        (!sample) >> 4
    } else {
        sample >> 4
    };

    if ix > 15 {
        let mut exponent = 1u8;
        while ix > 16 + 15 {
            ix >>= 1;
            exponent += 1;
        }
        ix -= 16;
        ix += i16::from(exponent) << 4;
    }

    if sample >= 0 {
        ix |= 0x80;
    }

    (ix as u8) ^ 0x55
}

/// Decodes a byte stream of A-law codes to a normalized 8 kHz signal.
pub fn alaw_decode(codes: &[u8]) -> AudioSignal {
    let samples = codes
        .iter()
        .map(|&c| f64::from(expand_alaw(c)) / NORM)
        .collect();
    AudioSignal::new(samples, ALAW_SAMPLE_RATE_HZ)
}

/// Encodes a normalized signal as A-law codes.
///
/// Samples are scaled to 16-bit integers and compressed; decode∘encode is
/// the identity on the 256-level quantized grid.
pub fn alaw_encode(signal: &AudioSignal) -> Vec<u8> {
    signal
        .samples
        .iter()
        .map(|&x| {
            let v = (x * NORM).round().clamp(f64::from(i16::MIN), f64::from(i16::MAX));
            compress_alaw(v as i16)
        })
        .collect()
}

/// Reads a headerless raw A-law file.
pub fn read_alaw(path: &Path) -> Result<AudioSignal> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(alaw_decode(&bytes))
}

/// Writes a signal as a headerless raw A-law file.
pub fn write_alaw(path: &Path, signal: &AudioSignal) -> Result<()> {
    std::fs::write(path, alaw_encode(signal)).map_err(|e| Error::io(path, e))
}
