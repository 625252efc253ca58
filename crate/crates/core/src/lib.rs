//! Text-independent speaker identification with vector quantization and
//! per-cluster covariance models.
//!
//! The crate implements a complete closed-set identification pipeline:
//!
//! * LPC-cepstrum front-end ([`frontend`]): pre-emphasis, Hamming-windowed
//!   framing, autocorrelation, Levinson-Durbin recursion and the LPC-to-
//!   cepstrum expansion.
//! * Baseline models: LBG-trained vector quantization codebooks ([`vq`])
//!   and single full-covariance models compared with the arithmetic-
//!   harmonic sphericity measure ([`covariance`]).
//! * The combined model: a small codebook segments a speaker's feature
//!   space and a covariance matrix is estimated per cluster, yielding one
//!   distortion classifier plus one sphericity classifier per cluster,
//!   fused by rank-1 decision rules ([`fusion`], [`model`]).
//! * Robustness tooling: seeded additive white Gaussian noise at exact
//!   SNR levels ([`noise`]) and an evaluation grid over methods, SNRs and
//!   fusion schemes with CSV/text reporting ([`evaluation`]).
//! * A deterministic synthetic corpus generator with all-pole "speakers"
//!   for end-to-end testing without recorded speech ([`synth`]).
//! * Model persistence as versioned JSON ([`model_store`]) and WAV/A-law
//!   audio I/O ([`audio`]).
//!
//! Everything is deterministic: the only randomness enters through
//! explicit `u64` seeds, and repeated runs produce byte-identical output.

/// Library version, recorded in run metadata blocks.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod audio;
pub mod covariance;
pub mod error;
pub mod evaluation;
pub mod frontend;
pub mod fusion;
mod linalg;
pub mod model;
pub mod model_store;
pub mod noise;
pub mod seed;
pub mod synth;
pub mod vq;

pub use audio::{AudioFileFormat, AudioSignal};
pub use covariance::{CovarianceModel, SpeakerModel};
pub use error::{Error, Result};
pub use evaluation::{
    run_evaluation, CorpusManifest, EvalOptions, EvaluationReport, ManifestEntry, MethodSpec,
    Split,
};
pub use frontend::{FeatureSequence, FrontendConfig};
pub use fusion::{FusionScheme, ScoreVector};
pub use model::{Method, Model};
pub use noise::NoiseSpec;
pub use synth::SynthCorpusConfig;
pub use vq::{Codebook, LbgParams};
