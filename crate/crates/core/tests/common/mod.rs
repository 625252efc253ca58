//! Independent oracles for the integration tests.
//!
//! Everything here is deliberately written from first principles, using
//! different algorithms than the library (dense solves instead of
//! recursions, exhaustive scans instead of incremental updates), so that
//! agreement between the two is meaningful evidence of correctness.
//!
//! Each integration test target compiles this module separately and uses
//! a different subset of it, so unused-item lints are silenced here.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;
use vqcm_core::covariance::CovarianceModel;

/// Solves the order-p Yule-Walker system T a = r[1..=p] where T is the
/// symmetric Toeplitz matrix T[i][j] = r[|i-j|], by dense Gaussian
/// elimination with partial pivoting. No Levinson recursion involved.
#[allow(clippy::needless_range_loop)] // row/column indexing mirrors the math
pub fn toeplitz_solve(r: &[f64]) -> Vec<f64> {
    let p = r.len() - 1;
    let mut aug = vec![vec![0.0f64; p + 1]; p];
    for i in 0..p {
        for j in 0..p {
            aug[i][j] = r[i.abs_diff(j)];
        }
        aug[i][p] = r[i + 1];
    }
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs()))
            .unwrap();
        aug.swap(col, pivot);
        let diag = aug[col][col];
        assert!(diag.abs() > 1e-300, "singular Toeplitz system in oracle");
        for row in 0..p {
            if row == col {
                continue;
            }
            let factor = aug[row][col] / diag;
            for k in col..=p {
                aug[row][k] -= factor * aug[col][k];
            }
        }
    }
    (0..p).map(|i| aug[i][p] / aug[i][i]).collect()
}

/// Cepstrum of the all-pole model 1/A(z), A(z) = 1 - sum a_k z^-k, by the
/// logarithm power series: -ln(1 - u) = sum_m u^m / m with u = sum a_k z^-k,
/// expanded by explicit polynomial multiplication and truncated at order q.
pub fn cepstrum_series(a: &[f64], q: usize) -> Vec<f64> {
    let mut c = vec![0.0f64; q + 1];
    let mut power = vec![0.0f64; q + 1];
    power[0] = 1.0; // u^0
    for m in 1..=q {
        let mut next = vec![0.0f64; q + 1];
        for (deg, &coeff) in power.iter().enumerate() {
            if coeff == 0.0 {
                continue;
            }
            for (k, &ak) in a.iter().enumerate() {
                if deg + k < q {
                    next[deg + k + 1] += coeff * ak;
                }
            }
        }
        power = next;
        for n in 1..=q {
            c[n] += power[n] / m as f64;
        }
    }
    c[1..].to_vec()
}

/// Plain two-pass sample covariance with the 1/M normalizer, computing
/// every (i, j) entry by its own full pass over the data.
#[allow(clippy::needless_range_loop)] // (i, j) entry indexing mirrors the math
pub fn naive_covariance(vectors: &[Vec<f64>], dim: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = vectors.len() as f64;
    let mean: Vec<f64> = (0..dim)
        .map(|j| vectors.iter().map(|v| v[j]).sum::<f64>() / m)
        .collect();
    let mut cov = vec![vec![0.0f64; dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            cov[i][j] = vectors
                .iter()
                .map(|v| (v[i] - mean[i]) * (v[j] - mean[j]))
                .sum::<f64>()
                / m;
        }
    }
    (mean, cov)
}

/// Exhaustive nearest-centroid scan; ties resolve to the lowest index
/// because only a strictly smaller distance replaces the best.
pub fn nearest_centroid_exhaustive(v: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d: f64 = v.iter().zip(c).map(|(x, y)| (x - y) * (x - y)).sum();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Random symmetric positive-definite matrix: B B^T plus a small diagonal
/// bump that bounds the condition number away from infinity.
pub fn random_spd(dim: usize, rng: &mut StdRng) -> Vec<Vec<f64>> {
    let b: Vec<Vec<f64>> = (0..dim)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut a = vec![vec![0.0f64; dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            a[i][j] = (0..dim).map(|k| b[i][k] * b[j][k]).sum::<f64>();
        }
        a[i][i] += 0.1;
    }
    a
}

/// Wraps a raw SPD matrix as a covariance model so it can feed the
/// sphericity measure directly.
pub fn spd_model(matrix: Vec<Vec<f64>>) -> CovarianceModel {
    let dim = matrix.len();
    CovarianceModel {
        dim,
        mean: vec![0.0; dim],
        matrix,
        sample_count: dim + 1,
    }
}

/// Random autocorrelation sequence that is valid by construction: the
/// empirical autocorrelation of a random finite signal.
pub fn random_autocorrelation(order: usize, rng: &mut StdRng) -> Vec<f64> {
    let signal: Vec<f64> = (0..order + 64)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    (0..=order)
        .map(|lag| {
            signal[lag..]
                .iter()
                .zip(&signal)
                .map(|(a, b)| a * b)
                .sum::<f64>()
        })
        .collect()
}

/// Measured SNR in dB between a clean signal and its noisy version.
pub fn empirical_snr_db(clean: &[f64], noisy: &[f64]) -> f64 {
    assert_eq!(clean.len(), noisy.len());
    let signal_power: f64 = clean.iter().map(|x| x * x).sum::<f64>() / clean.len() as f64;
    let noise_power: f64 = clean
        .iter()
        .zip(noisy)
        .map(|(c, n)| (n - c) * (n - c))
        .sum::<f64>()
        / clean.len() as f64;
    10.0 * (signal_power / noise_power).log10()
}
