//! Cross-validation of the library's recursive algorithms against the
//! independent oracles in `common`, plus hand-worked checks that the
//! oracles themselves are right.

mod common;

use common::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use vqcm_core::covariance::sample_covariance;
use vqcm_core::frontend::{autocorrelate, levinson_durbin, lpc_to_cepstrum};
use vqcm_core::vq::{quantize, Codebook};

const EPSILON: f64 = 1e-9;

// --- the oracles themselves, on hand-worked cases -----------------------

#[test]
fn toeplitz_oracle_solves_a_hand_case() {
    // r = [1, 0.5]: the 1x1 system 1 * a1 = 0.5.
    let a = toeplitz_solve(&[1.0, 0.5]);
    assert!((a[0] - 0.5).abs() < 1e-15);

    // Order 2 with r = [2, 1, 0.5]:
    //   [2 1] [a1]   [1  ]
    //   [1 2] [a2] = [0.5]
    // => a1 = 0.5, a2 = 0.
    let a = toeplitz_solve(&[2.0, 1.0, 0.5]);
    assert!((a[0] - 0.5).abs() < 1e-12);
    assert!(a[1].abs() < 1e-12);
}

#[test]
fn cepstrum_series_oracle_matches_hand_expansion() {
    // u = 0.5 z^-1 + 0.2 z^-2:
    //   c1 = 0.5
    //   c2 = 0.2 + 0.5^2 / 2 = 0.325
    //   c3 = 2 * (0.5 * 0.2) / 2 + 0.5^3 / 3 = 0.1 + 0.041666...
    let c = cepstrum_series(&[0.5, 0.2], 3);
    assert!((c[0] - 0.5).abs() < 1e-15);
    assert!((c[1] - 0.325).abs() < 1e-15);
    assert!((c[2] - (0.1 + 0.125 / 3.0)).abs() < 1e-15);
}

#[test]
fn naive_covariance_oracle_on_a_hand_case() {
    // Cross pattern around the origin: variance 0.5 per axis, no cross term.
    let vectors = vec![
        vec![1.0, 0.0],
        vec![-1.0, 0.0],
        vec![0.0, 1.0],
        vec![0.0, -1.0],
    ];
    let (mean, cov) = naive_covariance(&vectors, 2);
    assert!(mean.iter().all(|m| m.abs() < 1e-15));
    assert!((cov[0][0] - 0.5).abs() < 1e-15);
    assert!((cov[1][1] - 0.5).abs() < 1e-15);
    assert!(cov[0][1].abs() < 1e-15);
}

// --- library vs. oracle equivalence -------------------------------------

#[test]
fn levinson_agrees_with_dense_toeplitz_solve() {
    let mut rng = StdRng::seed_from_u64(101);
    for order in 1..=20 {
        for _ in 0..50 {
            let r = random_autocorrelation(order, &mut rng);
            let solution = levinson_durbin(&r).expect("valid autocorrelation");
            let dense = toeplitz_solve(&r);
            for (fast, slow) in solution.coeffs.iter().zip(&dense) {
                assert!(
                    (fast - slow).abs() < EPSILON,
                    "order {order}: {fast} vs {slow}"
                );
            }
        }
    }
}

#[test]
fn cepstrum_recursion_agrees_with_log_series() {
    let mut rng = StdRng::seed_from_u64(202);
    for _ in 0..200 {
        let order = rng.random_range(1..=12);
        // Build a stable predictor by running Levinson on a valid
        // autocorrelation; its coefficients keep |u| summable enough for
        // the series comparison at moderate orders.
        let r = random_autocorrelation(order, &mut rng);
        let a = levinson_durbin(&r).unwrap().coeffs;
        let q = order + 4;
        let fast = lpc_to_cepstrum(&a, q);
        let slow = cepstrum_series(&a, q);
        for (f, s) in fast.iter().zip(&slow) {
            assert!((f - s).abs() < EPSILON, "{f} vs {s}");
        }
    }
}

#[test]
fn covariance_agrees_with_naive_two_pass() {
    let mut rng = StdRng::seed_from_u64(303);
    for _ in 0..20 {
        let dim = rng.random_range(1..=8);
        let n = rng.random_range(dim + 5..60);
        let vectors: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let model = sample_covariance(&vectors, dim, 0.0).unwrap();
        let (mean, cov) = naive_covariance(&vectors, dim);
        for (a, b) in model.mean.iter().zip(&mean) {
            assert!((a - b).abs() < 1e-12);
        }
        for (row, oracle_row) in model.matrix.iter().zip(&cov) {
            for (a, b) in row.iter().zip(oracle_row) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn quantize_agrees_with_exhaustive_scan() {
    let mut rng = StdRng::seed_from_u64(404);
    let dim = 5;
    let centroids: Vec<Vec<f64>> = (0..16)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let codebook = Codebook {
        centroids: centroids.clone(),
        bits: 4,
        training_distortion: 0.0,
    };
    for _ in 0..500 {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect();
        assert_eq!(
            quantize(&v, &codebook).unwrap(),
            nearest_centroid_exhaustive(&v, &centroids)
        );
    }
    // Exact ties resolve identically (lowest index) in both implementations.
    let tied = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![1.0, 0.0]];
    let tied_book = Codebook {
        centroids: tied.clone(),
        bits: 0,
        training_distortion: 0.0,
    };
    let probe = vec![0.0, 0.4];
    assert_eq!(quantize(&probe, &tied_book).unwrap(), 0);
    assert_eq!(nearest_centroid_exhaustive(&probe, &tied), 0);
}

#[test]
fn autocorrelation_matches_direct_definition() {
    let mut rng = StdRng::seed_from_u64(505);
    let frame: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
    let r = autocorrelate(&frame, 6);
    for (lag, &value) in r.iter().enumerate() {
        let direct: f64 = (0..frame.len() - lag)
            .map(|n| frame[n] * frame[n + lag])
            .sum();
        assert!((value - direct).abs() < 1e-12);
    }
}
