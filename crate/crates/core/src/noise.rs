//! Additive white Gaussian noise at controlled SNR.
//!
//! The robustness protocol corrupts test utterances at a sweep of SNR
//! levels. Power is measured over the whole utterance (mean squared
//! sample), the noise is seeded and therefore reproducible, and no
//! clipping is applied: the corrupted waveform may exceed [-1, 1].

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::audio::AudioSignal;
use crate::error::{Error, Result};

/// Target SNR and the seed of the noise realization. `snr_db` may be
/// `f64::INFINITY` for the clean condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub seed: u64,
}

/// Adds white Gaussian noise so that the utterance-level SNR equals
/// `spec.snr_db`: sigma^2 = P_signal / 10^(snr/10).
///
/// An infinite SNR returns the signal unchanged; a finite SNR over an
/// all-zero (or empty) signal has no defined signal power and is rejected.
pub fn add_noise(signal: &AudioSignal, spec: &NoiseSpec) -> Result<AudioSignal> {
    if spec.snr_db.is_nan() {
        return Err(Error::InvalidConfig("snr_db must not be NaN".into()));
    }
    if spec.snr_db.is_infinite() && spec.snr_db > 0.0 {
        return Ok(signal.clone());
    }
    let power = signal.mean_power();
    if power <= 0.0 {
        return Err(Error::UndefinedSnr);
    }
    let sigma = (power / 10f64.powf(spec.snr_db / 10.0)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let samples = signal
        .samples
        .iter()
        .map(|s| s + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(AudioSignal::new(samples, signal.sample_rate_hz))
}

/// Parses the CLI SNR list, e.g. "inf,30,25,20,15".
pub fn parse_snr_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|part| !part.is_empty())
        .map(|part| match part {
            "inf" | "Inf" | "INF" => Ok(f64::INFINITY),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad SNR value '{other}'")))
                .and_then(|v| {
                    if v.is_nan() {
                        Err(Error::InvalidConfig("SNR must not be NaN".into()))
                    } else {
                        Ok(v)
                    }
                }),
        })
        .collect()
}
