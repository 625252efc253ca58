//! Covariance models and the arithmetic-harmonic sphericity measure.
//!
//! Two model families live here: a single global covariance matrix per
//! speaker (the CM classifier), and the combined model that pairs a VQ
//! codebook with one covariance matrix per cluster. Matrices are compared
//! with the sphericity measure
//!
//!   mu(A, B) = log( tr(A B^-1) * tr(B A^-1) / 2 ) - 2 log(P)
//!
//! which is symmetric, invariant under scaling of either matrix, and
//! bounded below by -log 2 with equality exactly when A is proportional
//! to B. Lower is closer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::{FeatureSequence, FrontendConfig};
use crate::fusion::ScoreVector;
use crate::linalg::{trace_product_inverse, Cholesky};
use crate::vq::{assign_clusters, lbg_train, Codebook, LbgParams};

/// Relative ridge applied to a covariance diagonal only when the matrix
/// fails a positive-definiteness check.
pub const DEFAULT_RIDGE: f64 = 1e-6;

/// A sample covariance over vectors truncated to their first `dim`
/// components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceModel {
    pub dim: usize,
    pub mean: Vec<f64>,
    /// Symmetric positive-definite, row-major square matrix.
    pub matrix: Vec<Vec<f64>>,
    pub sample_count: usize,
}

/// The combined per-speaker model: a codebook segmenting the feature space
/// plus one covariance matrix per cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerModel {
    pub speaker_id: String,
    pub config: FrontendConfig,
    pub codebook: Codebook,
    /// One entry per centroid, same order as the codebook.
    pub clusters: Vec<CovarianceModel>,
}

/// Smallest number of vectors a cluster must hold before a test-side
/// covariance is estimated from it: max(2, ceil(P2 / 2)).
pub fn min_cluster_occupancy(p2: usize) -> usize {
    p2.div_ceil(2).max(2)
}

/// Maximum-likelihood sample covariance (1/M normalizer) of the vectors
/// truncated to their first `dim` components.
///
/// The ridge `ridge * trace / dim` is added to the diagonal only when the
/// raw matrix is not positive definite; a zero-trace matrix (all vectors
/// identical) falls back to an absolute ridge so the result is still
/// invertible. Fails with [`Error::SingularModel`] when even the ridge
/// cannot rescue the matrix.
#[allow(clippy::needless_range_loop)] // mirrored writes across the diagonal
pub fn sample_covariance(vectors: &[Vec<f64>], dim: usize, ridge: f64) -> Result<CovarianceModel> {
    if vectors.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: vectors.len(),
        });
    }
    for v in vectors {
        if v.len() < dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    let m = vectors.len() as f64;

    let mut mean = vec![0.0f64; dim];
    for v in vectors {
        for (acc, x) in mean.iter_mut().zip(v) {
            *acc += x;
        }
    }
    for acc in &mut mean {
        *acc /= m;
    }

    let mut matrix = vec![vec![0.0f64; dim]; dim];
    for v in vectors {
        for i in 0..dim {
            let di = v[i] - mean[i];
            for j in 0..=i {
                matrix[i][j] += di * (v[j] - mean[j]);
            }
        }
    }
    for i in 0..dim {
        for j in 0..=i {
            matrix[i][j] /= m;
            matrix[j][i] = matrix[i][j];
        }
    }

    if Cholesky::factor(&matrix).is_none() {
        let trace: f64 = (0..dim).map(|i| matrix[i][i]).sum();
        let lambda = if trace > 0.0 { ridge * trace / dim as f64 } else { ridge };
        for i in 0..dim {
            matrix[i][i] += lambda;
        }
        if Cholesky::factor(&matrix).is_none() {
            return Err(Error::SingularModel);
        }
    }

    Ok(CovarianceModel {
        dim,
        mean,
        matrix,
        sample_count: vectors.len(),
    })
}

/// Arithmetic-harmonic sphericity between two covariance models.
pub fn sphericity(a: &CovarianceModel, b: &CovarianceModel) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            got: b.dim,
        });
    }
    let chol_a = Cholesky::factor(&a.matrix).ok_or(Error::SingularModel)?;
    let chol_b = Cholesky::factor(&b.matrix).ok_or(Error::SingularModel)?;
    let t_ab = trace_product_inverse(&a.matrix, &chol_b);
    let t_ba = trace_product_inverse(&b.matrix, &chol_a);
    let product = t_ab * t_ba;
    if product <= 0.0 || !product.is_finite() {
        return Err(Error::SingularModel);
    }
    Ok((product / 2.0).ln() - 2.0 * (a.dim as f64).ln())
}

/// Enrolls the global-covariance (CM) model of one speaker.
///
/// At least `p2 + 1` training vectors are recommended for a well-conditioned
/// matrix; callers may warn below that using `sample_count`.
pub fn enroll_cm(train: &FeatureSequence, p2: usize) -> Result<CovarianceModel> {
    sample_covariance(&train.vectors, p2, DEFAULT_RIDGE)
}

/// Scores a test utterance against a CM model: the sphericity between the
/// test-side covariance and the enrolled one.
pub fn score_cm(test: &FeatureSequence, model: &CovarianceModel) -> Result<f64> {
    let test_cov = sample_covariance(&test.vectors, model.dim, DEFAULT_RIDGE)?;
    sphericity(&test_cov, model)
}

/// Enrolls the combined model: train a codebook, cluster the training
/// vectors around its centroids, and fit one covariance per cluster.
///
/// Every cluster must end up with at least 2 vectors; a starved cluster
/// (even after the codebook's empty-cell repair) fails enrollment with
/// [`Error::EmptyCluster`].
pub fn enroll_vqcm(
    speaker_id: impl Into<String>,
    train: &FeatureSequence,
    config: &FrontendConfig,
    bits: u32,
    lbg: &LbgParams,
) -> Result<SpeakerModel> {
    config.validate()?;
    let codebook = lbg_train(&train.vectors, bits, lbg)?;
    let assignment = assign_clusters(&train.vectors, &codebook.centroids);
    let p2 = config.covariance_order_p2;

    let mut clusters = Vec::with_capacity(codebook.size());
    for i in 0..codebook.size() {
        let members: Vec<Vec<f64>> = train
            .vectors
            .iter()
            .zip(&assignment.labels)
            .filter(|(_, &label)| label == i)
            .map(|(v, _)| v.clone())
            .collect();
        if members.len() < 2 {
            return Err(Error::EmptyCluster { cluster: i });
        }
        clusters.push(sample_covariance(&members, p2, DEFAULT_RIDGE)?);
    }

    Ok(SpeakerModel {
        speaker_id: speaker_id.into(),
        config: config.clone(),
        codebook,
        clusters,
    })
}

/// Scores a test utterance against one combined model, producing the N+1
/// classifier outputs.
///
/// The test vectors are clustered with this speaker's own codebook; d0 is
/// the VQ distortion and d_i the per-cluster sphericity. A cluster that
/// receives fewer than [`min_cluster_occupancy`] test vectors yields a
/// missing d_i rather than a fabricated one.
pub fn score_vqcm(test: &FeatureSequence, model: &SpeakerModel) -> Result<ScoreVector> {
    if test.is_empty() {
        return Err(Error::EmptyFeatures);
    }
    if test.dim() != model.codebook.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.codebook.dim(),
            got: test.dim(),
        });
    }
    let assignment = assign_clusters(&test.vectors, &model.codebook.centroids);
    let p2 = model.config.covariance_order_p2;
    let min_occupancy = min_cluster_occupancy(p2);

    let mut di = Vec::with_capacity(model.clusters.len());
    for (i, model_cov) in model.clusters.iter().enumerate() {
        if assignment.per_cluster_counts[i] < min_occupancy {
            di.push(None);
            continue;
        }
        let members: Vec<Vec<f64>> = test
            .vectors
            .iter()
            .zip(&assignment.labels)
            .filter(|(_, &label)| label == i)
            .map(|(v, _)| v.clone())
            .collect();
        let test_cov = sample_covariance(&members, p2, DEFAULT_RIDGE)?;
        di.push(Some(sphericity(&test_cov, model_cov)?));
    }

    Ok(ScoreVector {
        speaker_id: model.speaker_id.clone(),
        d0: Some(assignment.mean_distortion),
        di,
    })
}
