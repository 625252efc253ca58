//! One enrollment/scoring interface over the three model families:
//! VQ codebook, global covariance (CM), and the combined VQ-CM model.

use serde::{Deserialize, Serialize};

use crate::covariance::{enroll_cm, enroll_vqcm, score_cm, sample_covariance, sphericity,
    CovarianceModel, SpeakerModel, DEFAULT_RIDGE};
use crate::error::{Error, Result};
use crate::frontend::{FeatureSequence, FrontendConfig};
use crate::fusion::ScoreVector;
use crate::vq::{lbg_train, vq_distance, Codebook, LbgParams};

/// Which modeling method a model or an evaluation run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Vq,
    Cm,
    Vqcm,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Vq, Method::Cm, Method::Vqcm];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Vq => "vq",
            Method::Cm => "cm",
            Method::Vqcm => "vqcm",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method '{s}'")))
    }
}

/// A trained speaker model of any method.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Vq {
        speaker_id: String,
        config: FrontendConfig,
        codebook: Codebook,
    },
    Cm {
        speaker_id: String,
        config: FrontendConfig,
        covariance: CovarianceModel,
    },
    Vqcm(SpeakerModel),
}

impl Model {
    pub fn speaker_id(&self) -> &str {
        match self {
            Model::Vq { speaker_id, .. } | Model::Cm { speaker_id, .. } => speaker_id,
            Model::Vqcm(m) => &m.speaker_id,
        }
    }

    pub fn config(&self) -> &FrontendConfig {
        match self {
            Model::Vq { config, .. } | Model::Cm { config, .. } => config,
            Model::Vqcm(m) => &m.config,
        }
    }

    pub fn method(&self) -> Method {
        match self {
            Model::Vq { .. } => Method::Vq,
            Model::Cm { .. } => Method::Cm,
            Model::Vqcm(_) => Method::Vqcm,
        }
    }

    /// Free parameters of the model, as counted by the sizing formulas
    /// (see `evaluation::param_count_*`).
    pub fn param_count(&self) -> usize {
        match self {
            Model::Vq { codebook, .. } => codebook.size() * codebook.dim(),
            Model::Cm { covariance, .. } => (covariance.dim * covariance.dim + covariance.dim) / 2,
            Model::Vqcm(m) => {
                let p2 = m.config.covariance_order_p2;
                m.codebook.size() * (m.codebook.dim() + (p2 * p2 + p2) / 2)
            }
        }
    }

    /// Scores a test utterance, producing this speaker's classifier outputs.
    pub fn score(&self, test: &FeatureSequence) -> Result<ScoreVector> {
        if test.is_empty() {
            return Err(Error::EmptyFeatures);
        }
        match self {
            Model::Vq { speaker_id, codebook, .. } => Ok(ScoreVector {
                speaker_id: speaker_id.clone(),
                d0: Some(vq_distance(&test.vectors, codebook)?),
                di: Vec::new(),
            }),
            Model::Cm { speaker_id, covariance, .. } => Ok(ScoreVector {
                speaker_id: speaker_id.clone(),
                d0: None,
                di: vec![Some(score_cm(test, covariance)?)],
            }),
            Model::Vqcm(m) => crate::covariance::score_vqcm(test, m),
        }
    }
}

/// Enrolls one speaker with the given method. `bits` is ignored by the CM
/// method; `lbg` only matters when a codebook is trained.
pub fn enroll(
    method: Method,
    speaker_id: impl Into<String>,
    train: &FeatureSequence,
    config: &FrontendConfig,
    bits: u32,
    lbg: &LbgParams,
) -> Result<Model> {
    config.validate()?;
    let speaker_id = speaker_id.into();
    match method {
        Method::Vq => Ok(Model::Vq {
            speaker_id,
            config: config.clone(),
            codebook: lbg_train(&train.vectors, bits, lbg)?,
        }),
        Method::Cm => Ok(Model::Cm {
            speaker_id,
            config: config.clone(),
            covariance: enroll_cm(train, config.covariance_order_p2)?,
        }),
        Method::Vqcm => Ok(Model::Vqcm(enroll_vqcm(speaker_id, train, config, bits, lbg)?)),
    }
}

/// Test-side covariance used by the CM scorer, exposed for diagnostics.
pub fn test_covariance(test: &FeatureSequence, p2: usize) -> Result<CovarianceModel> {
    sample_covariance(&test.vectors, p2, DEFAULT_RIDGE)
}

/// Sphericity between two already-built covariance models (re-export seam
/// for callers that hold raw models).
pub fn compare_covariances(a: &CovarianceModel, b: &CovarianceModel) -> Result<f64> {
    sphericity(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn blob(seed: u64, center: f64, dim: usize, count: usize) -> FeatureSequence {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vectors = (0..count)
            .map(|_| {
                (0..dim)
                    .map(|d| center * (d as f64 + 1.0) + 0.5 * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        FeatureSequence {
            vectors,
            source_id: format!("blob-{seed}"),
        }
    }

    fn config(p1: usize, p2: usize) -> FrontendConfig {
        FrontendConfig::with_orders(p1, p2)
    }

    #[test]
    fn method_names_round_trip() {
        for method in Method::ALL {
            assert_eq!(method.name().parse::<Method>().unwrap(), method);
        }
        assert!("gmm".parse::<Method>().is_err());
        assert_eq!(serde_json::to_string(&Method::Vqcm).unwrap(), "\"vqcm\"");
    }

    #[test]
    fn score_shapes_per_method() {
        let train = blob(1, 1.0, 4, 120);
        let test = blob(2, 1.0, 4, 40);
        let cfg = config(4, 3);
        let lbg = LbgParams::default();

        let vq = enroll(Method::Vq, "s", &train, &cfg, 1, &lbg).unwrap();
        let sv = vq.score(&test).unwrap();
        assert!(sv.d0.is_some());
        assert!(sv.di.is_empty());

        let cm = enroll(Method::Cm, "s", &train, &cfg, 1, &lbg).unwrap();
        let sv = cm.score(&test).unwrap();
        assert!(sv.d0.is_none());
        assert_eq!(sv.di.len(), 1);
        assert!(sv.di[0].is_some());

        let vqcm = enroll(Method::Vqcm, "s", &train, &cfg, 1, &lbg).unwrap();
        let sv = vqcm.score(&test).unwrap();
        assert!(sv.d0.is_some());
        assert_eq!(sv.di.len(), 2);
    }

    #[test]
    fn param_counts_match_the_sizing_formulas() {
        let train = blob(3, 0.5, 16, 400);
        let cfg = config(16, 10);
        let lbg = LbgParams::default();
        assert_eq!(enroll(Method::Vq, "s", &train, &cfg, 1, &lbg).unwrap().param_count(), 32);
        assert_eq!(enroll(Method::Cm, "s", &train, &cfg, 0, &lbg).unwrap().param_count(), 55);
        assert_eq!(enroll(Method::Vqcm, "s", &train, &cfg, 1, &lbg).unwrap().param_count(), 142);
    }

    #[test]
    fn empty_test_is_rejected() {
        let train = blob(4, 1.0, 3, 60);
        let cfg = config(3, 2);
        let model = enroll(Method::Vq, "s", &train, &cfg, 0, &LbgParams::default()).unwrap();
        let empty = FeatureSequence {
            vectors: vec![],
            source_id: "empty".into(),
        };
        assert!(matches!(model.score(&empty), Err(Error::EmptyFeatures)));
    }

    #[test]
    fn own_speaker_wins_across_methods() {
        let cfg = config(4, 3);
        let lbg = LbgParams::default();
        let train_a = blob(10, 1.0, 4, 150);
        let train_b = blob(11, -1.0, 4, 150);
        let test_a = blob(12, 1.0, 4, 50);

        for method in Method::ALL {
            let model_a = enroll(method, "a", &train_a, &cfg, 1, &lbg).unwrap();
            let model_b = enroll(method, "b", &train_b, &cfg, 1, &lbg).unwrap();
            let scores = vec![model_a.score(&test_a).unwrap(), model_b.score(&test_a).unwrap()];
            let scheme = match method {
                Method::Vq => crate::fusion::FusionScheme::VqOnly,
                Method::Cm => crate::fusion::FusionScheme::CmOnly,
                Method::Vqcm => crate::fusion::FusionScheme::SumAll,
            };
            let winner = crate::fusion::identify(&scores, scheme).unwrap();
            assert_eq!(winner, "a", "method {method} misidentified");
        }
    }
}
