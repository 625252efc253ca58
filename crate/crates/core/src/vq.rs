//! Vector quantization: LBG codebook training and nearest-centroid scoring.
//!
//! Codebooks grow by binary splitting from the global mean, so a codebook of
//! `bits` bits holds 2^bits centroids. Training is deterministic: no RNG is
//! involved anywhere, and ties in nearest-centroid searches resolve to the
//! lowest centroid index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// LBG training knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbgParams {
    /// Relative perturbation used when splitting centroids and respawning
    /// empty cells.
    pub epsilon: f64,
    /// Stop a k-means phase when the relative distortion decrease falls
    /// below this threshold.
    pub tol: f64,
    /// Hard cap on k-means sweeps per phase.
    pub max_iters: usize,
}

impl Default for LbgParams {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            tol: 1e-4,
            max_iters: 100,
        }
    }
}

/// A trained codebook: 2^bits centroids over P1-dimensional vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub centroids: Vec<Vec<f64>>,
    pub bits: u32,
    /// Mean squared error per training vector at convergence.
    pub training_distortion: f64,
}

impl Codebook {
    pub fn size(&self) -> usize {
        self.centroids.len()
    }

    pub fn dim(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }
}

/// Result of mapping a vector set onto a codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    /// Index of the nearest centroid for each input vector.
    pub labels: Vec<usize>,
    /// How many vectors landed in each cell.
    pub per_cluster_counts: Vec<usize>,
    /// Mean squared error per vector over the whole set.
    pub mean_distortion: f64,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(vector: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(vector, c);
        if d < best_dist {
            best = i;
            best_dist = d;
        }
    }
    (best, best_dist)
}

fn check_vectors(vectors: &[Vec<f64>]) -> Result<usize> {
    let dim = match vectors.first() {
        Some(v) if !v.is_empty() => v.len(),
        _ => return Err(Error::EmptyFeatures),
    };
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    Ok(dim)
}

/// Assigns every vector to its nearest centroid.
pub fn assign_clusters(vectors: &[Vec<f64>], centroids: &[Vec<f64>]) -> ClusterAssignment {
    let mut labels = Vec::with_capacity(vectors.len());
    let mut per_cluster_counts = vec![0usize; centroids.len()];
    let mut total = 0.0;
    for v in vectors {
        let (idx, dist) = nearest(v, centroids);
        labels.push(idx);
        per_cluster_counts[idx] += 1;
        total += dist;
    }
    let mean_distortion = if vectors.is_empty() {
        0.0
    } else {
        total / vectors.len() as f64
    };
    ClusterAssignment {
        labels,
        per_cluster_counts,
        mean_distortion,
    }
}

/// One k-means phase: sweep assignment/update until the relative distortion
/// decrease falls below `tol`. Mutates the centroids in place and returns the
/// distortion after each sweep.
fn kmeans_phase(vectors: &[Vec<f64>], centroids: &mut [Vec<f64>], params: &LbgParams) -> Vec<f64> {
    let dim = vectors[0].len();
    let mut history = Vec::new();
    let mut prev_distortion = f64::INFINITY;
    for _ in 0..params.max_iters {
        let assignment = assign_clusters(vectors, centroids);
        history.push(assignment.mean_distortion);

        // Update step: each centroid moves to the mean of its cell; empty
        // cells respawn as a perturbed copy of the most populated one.
        let mut sums = vec![vec![0.0f64; dim]; centroids.len()];
        for (v, &label) in vectors.iter().zip(&assignment.labels) {
            for (s, x) in sums[label].iter_mut().zip(v) {
                *s += x;
            }
        }
        for (i, count) in assignment.per_cluster_counts.iter().enumerate() {
            if *count > 0 {
                for (c, s) in centroids[i].iter_mut().zip(&sums[i]) {
                    *c = s / *count as f64;
                }
            }
        }
        for (i, count) in assignment.per_cluster_counts.iter().enumerate() {
            if *count == 0 {
                let donor = assignment
                    .per_cluster_counts
                    .iter()
                    .enumerate()
                    .max_by(|(ai, ac), (bi, bc)| ac.cmp(bc).then(bi.cmp(ai)))
                    .map(|(idx, _)| idx)
                    .unwrap();
                centroids[i] = centroids[donor].iter().map(|x| x * (1.0 + params.epsilon)).collect();
                for x in centroids[donor].iter_mut() {
                    *x *= 1.0 - params.epsilon;
                }
            }
        }

        let current = assignment.mean_distortion;
        if prev_distortion.is_finite() {
            let decrease = (prev_distortion - current) / prev_distortion.max(f64::MIN_POSITIVE);
            if decrease < params.tol {
                break;
            }
        }
        prev_distortion = current;
    }
    history
}

/// Trains a 2^bits codebook by iterative binary splitting (LBG).
///
/// Requires at least 2^bits training vectors. Identical inputs always yield
/// identical codebooks.
pub fn lbg_train(vectors: &[Vec<f64>], bits: u32, params: &LbgParams) -> Result<Codebook> {
    lbg_train_traced(vectors, bits, params).map(|(cb, _)| cb)
}

/// [`lbg_train`] plus the distortion trace of every k-means sweep, phase by
/// phase, for convergence diagnostics.
pub fn lbg_train_traced(
    vectors: &[Vec<f64>],
    bits: u32,
    params: &LbgParams,
) -> Result<(Codebook, Vec<Vec<f64>>)> {
    let dim = check_vectors(vectors)?;
    if params.epsilon <= 0.0 || params.tol < 0.0 || params.max_iters == 0 {
        return Err(Error::InvalidConfig(
            "LBG parameters must be positive".into(),
        ));
    }
    let target = 1usize << bits;
    if vectors.len() < target {
        return Err(Error::InsufficientData {
            needed: target,
            got: vectors.len(),
        });
    }

    // Phase 0: the size-1 codebook is the global mean.
    let mut mean = vec![0.0f64; dim];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= vectors.len() as f64;
    }
    let mut centroids = vec![mean];
    let mut trace = Vec::new();

    loop {
        let history = kmeans_phase(vectors, &mut centroids, params);
        trace.push(history);
        if centroids.len() >= target {
            break;
        }
        centroids = centroids
            .iter()
            .flat_map(|c| {
                let up: Vec<f64> = c.iter().map(|x| x * (1.0 + params.epsilon)).collect();
                let down: Vec<f64> = c.iter().map(|x| x * (1.0 - params.epsilon)).collect();
                [up, down]
            })
            .collect();
    }

    let training_distortion = assign_clusters(vectors, &centroids).mean_distortion;
    Ok((
        Codebook {
            centroids,
            bits,
            training_distortion,
        },
        trace,
    ))
}

/// Nearest-centroid index for a single vector; ties go to the lowest index.
pub fn quantize(vector: &[f64], codebook: &Codebook) -> Result<usize> {
    if vector.len() != codebook.dim() {
        return Err(Error::DimensionMismatch {
            expected: codebook.dim(),
            got: vector.len(),
        });
    }
    Ok(nearest(vector, &codebook.centroids).0)
}

/// VQ distortion of a test utterance against a codebook: the mean squared
/// error per vector. This is the d0 classifier.
pub fn vq_distance(vectors: &[Vec<f64>], codebook: &Codebook) -> Result<f64> {
    let dim = check_vectors(vectors)?;
    if dim != codebook.dim() {
        return Err(Error::DimensionMismatch {
            expected: codebook.dim(),
            got: dim,
        });
    }
    Ok(assign_clusters(vectors, &codebook.centroids).mean_distortion)
}
