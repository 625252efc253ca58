//! Audio ingestion: PCM WAV and raw G.711 A-law files.
//!
//! All integer sample formats are normalized to real amplitudes in [-1, 1]
//! at ingestion, so downstream analysis never sees codec codes.

mod alaw;
mod wav;

pub use alaw::{alaw_decode, alaw_encode, compress_alaw, expand_alaw, read_alaw, write_alaw};
pub use wav::{read_wav, write_wav};

use crate::error::Result;

/// A mono audio signal with normalized sample amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    /// Sample amplitudes; ingestion produces values in [-1, 1].
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Self {
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// Mean squared sample amplitude over the whole signal.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64
    }

    pub fn rms(&self) -> f64 {
        self.mean_power().sqrt()
    }
}

/// On-disk audio encoding of a corpus entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AudioFileFormat {
    Wav,
    Alaw,
}

impl AudioFileFormat {
    pub fn extension(self) -> &'static str {
        match self {
            AudioFileFormat::Wav => "wav",
            AudioFileFormat::Alaw => "alaw",
        }
    }
}

impl std::fmt::Display for AudioFileFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.extension())
    }
}

impl std::str::FromStr for AudioFileFormat {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wav" => Ok(AudioFileFormat::Wav),
            "alaw" => Ok(AudioFileFormat::Alaw),
            other => Err(crate::error::Error::InvalidManifest(format!(
                "unknown audio format {other:?} (expected wav or alaw)"
            ))),
        }
    }
}

/// Reads an audio file in the given format.
pub fn read_audio(path: &std::path::Path, format: AudioFileFormat) -> Result<AudioSignal> {
    match format {
        AudioFileFormat::Wav => read_wav(path),
        AudioFileFormat::Alaw => read_alaw(path),
    }
}
