//! Deterministic synthetic multi-speaker corpus.
//!
//! Each synthetic speaker is a stable all-pole filter excited by seeded
//! white Gaussian noise — ground truth that lives exactly in the feature
//! space the LPC front-end measures. Speakers differ by the angles of
//! their resonant pole pairs; the spread of those angles is the
//! separability knob (`margin_scale`), and shrinking it toward zero drives
//! identification toward chance.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::audio::{write_alaw, write_wav, AudioFileFormat, AudioSignal};
use crate::error::{Error, Result};
use crate::evaluation::{write_manifest, CorpusManifest, ManifestEntry, Split};
use crate::seed::derive_seed;

/// One complex-conjugate pole pair of an all-pole filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolePair {
    pub radius: f64,
    pub angle_rad: f64,
}

/// Everything needed to regenerate one synthetic speaker.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpeakerSpec {
    pub speaker_id: String,
    pub poles: Vec<PolePair>,
    pub gain: f64,
    pub seed: u64,
}

/// Corpus layout mirroring the enrollment protocol: one long training
/// utterance plus several short test sentences per speaker.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpusConfig {
    pub n_speakers: usize,
    pub train_secs: f64,
    pub n_test: usize,
    pub test_secs: f64,
    pub seed: u64,
    /// 1.0 = full pole-angle spread between speakers; 0.0 = identical
    /// speakers (chance-level identification).
    pub margin_scale: f64,
    pub format: AudioFileFormat,
    pub sample_rate_hz: u32,
}

impl Default for SynthCorpusConfig {
    fn default() -> Self {
        Self {
            n_speakers: 10,
            train_secs: 60.0,
            n_test: 5,
            test_secs: 2.0,
            seed: 42,
            margin_scale: 1.0,
            format: AudioFileFormat::Wav,
            sample_rate_hz: 8000,
        }
    }
}

impl SynthCorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_speakers < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 speakers, got {}",
                self.n_speakers
            )));
        }
        if self.train_secs <= 0.0 || self.test_secs <= 0.0 || self.n_test < 1 {
            return Err(Error::InvalidConfig(
                "train/test durations must be positive and n_test >= 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.margin_scale) {
            return Err(Error::InvalidConfig(format!(
                "margin_scale {} not in [0, 1]",
                self.margin_scale
            )));
        }
        if self.sample_rate_hz == 0 {
            return Err(Error::InvalidConfig("sample_rate_hz must be positive".into()));
        }
        Ok(())
    }
}

/// Samples the filter runs before output is kept, letting the resonances
/// ring in from silence.
const WARMUP_SAMPLES: usize = 512;

/// Seed stream reserved for pole-angle jitter, distinct from every
/// utterance stream.
const JITTER_STREAM: u64 = u64::MAX;

/// Two resonance bands (in radians of normalized angular frequency); each
/// speaker owns one slot per band.
const BANDS: [(f64, f64, f64); 2] = [
    // (center, half-spread at margin_scale 1, pole radius)
    (0.30 * std::f64::consts::PI, 0.15 * std::f64::consts::PI, 0.95),
    (0.62 * std::f64::consts::PI, 0.17 * std::f64::consts::PI, 0.90),
];

/// Relative jitter applied to each angle, as a fraction of the slot spacing.
const JITTER_FRACTION: f64 = 0.15;

/// Expands the pole pairs into direct-form denominator coefficients:
/// A(z) = prod_i (1 - 2 r_i cos(theta_i) z^-1 + r_i^2 z^-2).
fn denominator(poles: &[PolePair]) -> Vec<f64> {
    let mut a = vec![1.0f64];
    for p in poles {
        let (b1, b2) = (-2.0 * p.radius * p.angle_rad.cos(), p.radius * p.radius);
        let mut next = vec![0.0f64; a.len() + 2];
        for (k, &c) in a.iter().enumerate() {
            next[k] += c;
            next[k + 1] += c * b1;
            next[k + 2] += c * b2;
        }
        a = next;
    }
    a
}

/// Synthesizes one utterance: seeded Gaussian excitation through the
/// speaker's all-pole filter, warm-up discarded, normalized to exactly
/// 0.5 RMS. Deterministic in (spec, duration, utterance_index).
pub fn synth_utterance(
    spec: &SyntheticSpeakerSpec,
    duration_s: f64,
    sample_rate_hz: u32,
    utterance_index: u64,
) -> Result<AudioSignal> {
    if duration_s <= 0.0 || sample_rate_hz == 0 {
        return Err(Error::InvalidConfig("duration and rate must be positive".into()));
    }
    if spec.gain <= 0.0 {
        return Err(Error::InvalidConfig("gain must be positive".into()));
    }
    for p in &spec.poles {
        if !(p.radius > 0.0 && p.radius < 1.0) {
            return Err(Error::UnstablePoles { radius: p.radius });
        }
    }

    let n = (duration_s * sample_rate_hz as f64).round() as usize;
    let a = denominator(&spec.poles);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, utterance_index));
    let mut x = vec![0.0f64; WARMUP_SAMPLES + n];
    for t in 0..x.len() {
        let e: f64 = rng.sample(StandardNormal);
        let mut acc = spec.gain * e;
        for (k, &ak) in a.iter().enumerate().skip(1) {
            if k > t {
                break;
            }
            acc -= ak * x[t - k];
        }
        x[t] = acc;
    }
    let mut samples = x.split_off(WARMUP_SAMPLES);

    let rms = (samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64).sqrt();
    if rms <= 0.0 {
        return Err(Error::InvalidConfig("synthesized signal has zero energy".into()));
    }
    let scale = 0.5 / rms;
    for s in &mut samples {
        *s *= scale;
    }
    Ok(AudioSignal::new(samples, sample_rate_hz))
}

/// Builds every speaker's pole layout for a corpus configuration.
///
/// Band slots are evenly spread across speakers and perturbed by a seeded
/// jitter proportional to the slot spacing, so `margin_scale` scales the
/// worst-case angle margin between speakers without jitter ever closing it.
pub fn make_speaker_specs(config: &SynthCorpusConfig) -> Result<Vec<SyntheticSpeakerSpec>> {
    config.validate()?;
    let n = config.n_speakers;
    let width = if n > 100 { 3 } else { 2 };
    (0..n)
        .map(|i| {
            let speaker_seed = derive_seed(config.seed, i as u64);
            let mut jitter_rng = ChaCha8Rng::seed_from_u64(derive_seed(speaker_seed, JITTER_STREAM));
            let poles = BANDS
                .iter()
                .map(|&(center, half_spread, radius)| {
                    let spread = half_spread * config.margin_scale;
                    let spacing = 2.0 * spread / n as f64;
                    let slot = center + spread * ((2.0 * i as f64 + 1.0) / n as f64 - 1.0);
                    let jitter: f64 = jitter_rng.random_range(-1.0..1.0) * JITTER_FRACTION * spacing;
                    PolePair {
                        radius,
                        angle_rad: slot + jitter,
                    }
                })
                .collect();
            Ok(SyntheticSpeakerSpec {
                speaker_id: format!("spk{i:0width$}"),
                poles,
                gain: 1.0,
                seed: speaker_seed,
            })
        })
        .collect()
}

/// Generates the corpus on disk: one training file and `n_test` test files
/// per speaker, plus `manifest.csv`, all under `out_dir`. Manifest paths
/// are relative to the manifest itself. Regeneration with the same config
/// is byte-identical.
pub fn synth_corpus(config: &SynthCorpusConfig, out_dir: &Path) -> Result<CorpusManifest> {
    let specs = make_speaker_specs(config)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let extension = match config.format {
        AudioFileFormat::Wav => "wav",
        AudioFileFormat::Alaw => "alaw",
    };
    let write = |signal: &AudioSignal, path: &Path| -> Result<()> {
        match config.format {
            AudioFileFormat::Wav => write_wav(path, signal),
            AudioFileFormat::Alaw => write_alaw(path, signal),
        }
    };

    let mut entries = Vec::new();
    for spec in &specs {
        let train = synth_utterance(spec, config.train_secs, config.sample_rate_hz, 0)?;
        let train_name = format!("{}_train.{extension}", spec.speaker_id);
        write(&train, &out_dir.join(&train_name))?;
        entries.push(ManifestEntry {
            speaker_id: spec.speaker_id.clone(),
            path: train_name,
            split: Split::Train,
            format: config.format,
        });

        for j in 0..config.n_test {
            let test = synth_utterance(spec, config.test_secs, config.sample_rate_hz, 1 + j as u64)?;
            let test_name = format!("{}_test{j}.{extension}", spec.speaker_id);
            write(&test, &out_dir.join(&test_name))?;
            entries.push(ManifestEntry {
                speaker_id: spec.speaker_id.clone(),
                path: test_name,
                split: Split::Test,
                format: config.format,
            });
        }
    }

    let manifest = CorpusManifest { entries };
    write_manifest(&manifest, &out_dir.join("manifest.csv"))?;
    Ok(manifest)
}
