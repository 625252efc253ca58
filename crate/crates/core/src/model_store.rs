//! Versioned on-disk model format.
//!
//! One model per file, extension `.vqcm.json`. The encoding is pretty-printed
//! JSON with the struct field order fixed by the types below and
//! full-precision decimal floats, so numeric round-trips are exact and
//! re-saving a loaded file reproduces it byte for byte. Writes go to a
//! temporary file in the target directory followed by a rename.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::covariance::{CovarianceModel, SpeakerModel};
use crate::error::{Error, Result};
use crate::frontend::FrontendConfig;
use crate::model::{Method, Model};
use crate::vq::Codebook;

/// Current file format version.
pub const FORMAT_VERSION: u32 = 1;

/// File extension shared by every stored model.
pub const MODEL_EXTENSION: &str = ".vqcm.json";

/// The serialized form: a method tag plus the payloads that method uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub speaker_id: String,
    pub method: Method,
    pub config: FrontendConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub codebook: Option<Codebook>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clusters: Option<Vec<CovarianceModel>>,
}

impl From<&Model> for ModelFile {
    fn from(model: &Model) -> Self {
        let base = ModelFile {
            format_version: FORMAT_VERSION,
            speaker_id: model.speaker_id().to_string(),
            method: model.method(),
            config: model.config().clone(),
            codebook: None,
            clusters: None,
        };
        match model {
            Model::Vq { codebook, .. } => ModelFile {
                codebook: Some(codebook.clone()),
                ..base
            },
            Model::Cm { covariance, .. } => ModelFile {
                clusters: Some(vec![covariance.clone()]),
                ..base
            },
            Model::Vqcm(m) => ModelFile {
                codebook: Some(m.codebook.clone()),
                clusters: Some(m.clusters.clone()),
                ..base
            },
        }
    }
}

impl ModelFile {
    /// Validates the payload against the method tag and converts to a model.
    pub fn into_model(self) -> Result<Model> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: self.format_version,
                expected: FORMAT_VERSION,
            });
        }
        self.config.validate()?;
        fn schema<T>(msg: String) -> Result<T> {
            Err(Error::SchemaViolation(msg))
        }
        let p1 = self.config.cepstral_order_p1;
        let p2 = self.config.covariance_order_p2;

        let check_codebook = |cb: &Codebook| -> Result<()> {
            if cb.size() != 1usize << cb.bits {
                return schema(format!(
                    "codebook holds {} centroids but declares {} bits",
                    cb.size(),
                    cb.bits
                ));
            }
            if cb.dim() != p1 {
                return schema(format!(
                    "codebook dimension {} does not match P1 = {p1}",
                    cb.dim()
                ));
            }
            Ok(())
        };
        let check_clusters = |clusters: &[CovarianceModel]| -> Result<()> {
            for (i, c) in clusters.iter().enumerate() {
                if c.dim != p2 || c.matrix.len() != p2 || c.matrix.iter().any(|row| row.len() != p2) {
                    return schema(format!("cluster {i} dimension does not match P2 = {p2}"));
                }
                if c.mean.len() != p2 {
                    return schema(format!("cluster {i} mean length does not match P2 = {p2}"));
                }
            }
            Ok(())
        };

        match (self.method, self.codebook, self.clusters) {
            (Method::Vq, Some(codebook), None) => {
                check_codebook(&codebook)?;
                Ok(Model::Vq {
                    speaker_id: self.speaker_id,
                    config: self.config,
                    codebook,
                })
            }
            (Method::Cm, None, Some(clusters)) => {
                if clusters.len() != 1 {
                    return schema(format!("cm model must hold exactly 1 matrix, found {}", clusters.len()));
                }
                check_clusters(&clusters)?;
                Ok(Model::Cm {
                    speaker_id: self.speaker_id,
                    config: self.config,
                    covariance: clusters.into_iter().next().expect("length checked"),
                })
            }
            (Method::Vqcm, Some(codebook), Some(clusters)) => {
                check_codebook(&codebook)?;
                if clusters.len() != codebook.size() {
                    return schema(format!(
                        "vqcm model has {} clusters for a {}-centroid codebook",
                        clusters.len(),
                        codebook.size()
                    ));
                }
                check_clusters(&clusters)?;
                Ok(Model::Vqcm(SpeakerModel {
                    speaker_id: self.speaker_id,
                    config: self.config,
                    codebook,
                    clusters,
                }))
            }
            (method, codebook, clusters) => schema(format!(
                "method '{method}' with codebook: {}, clusters: {}",
                codebook.is_some(),
                clusters.is_some()
            )),
        }
    }
}

/// Canonical file name of a speaker's model within a model directory.
pub fn model_filename(speaker_id: &str, method: Method) -> Result<String> {
    if speaker_id.is_empty() || speaker_id.contains(['/', '\\', '\0']) {
        return Err(Error::InvalidConfig(format!(
            "speaker id '{speaker_id}' is not usable as a file name"
        )));
    }
    Ok(format!("{speaker_id}.{method}{MODEL_EXTENSION}"))
}

fn encode(model: &Model) -> Result<Vec<u8>> {
    let file = ModelFile::from(model);
    let mut bytes = serde_json::to_vec_pretty(&file)
        .map_err(|e| Error::SchemaViolation(format!("serialization failed: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Saves one model, replacing any existing file at `path` atomically.
pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    let bytes = encode(model)?;
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, &bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Loads and validates one model file.
pub fn load_model(path: &Path) -> Result<Model> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let file: ModelFile = serde_json::from_slice(&bytes)
        .map_err(|e| Error::SchemaViolation(format!("{}: {e}", path.display())))?;
    file.into_model()
}

/// All model files in a directory, sorted by file name for determinism.
pub fn list_model_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with(MODEL_EXTENSION))
        })
        .collect();
    paths.sort();
    Ok(paths)
}

/// Loads every model in a directory.
pub fn load_model_dir(dir: &Path) -> Result<Vec<Model>> {
    let paths = list_model_files(dir)?;
    if paths.is_empty() {
        return Err(Error::EmptyModelSet);
    }
    paths.iter().map(|p| load_model(p)).collect()
}
