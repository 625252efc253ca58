//! LPC-cepstral front-end.
//!
//! Converts a signal into a sequence of cepstral vectors: first-order
//! pre-emphasis, Hamming-windowed framing with overlap, autocorrelation,
//! Levinson-Durbin recursion, and the LPC-to-cepstrum recursion.
//!
//! Sign convention: the analysis filter is A(z) = 1 - sum_k a_k z^{-k},
//! so the first cepstral coefficient equals the first LPC coefficient.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::audio::AudioSignal;
use crate::error::{Error, Result};

/// All analysis parameters of the front-end.
///
/// `cepstral_order_p1` is the dimension of the feature vectors; the
/// covariance models downstream use only the first `covariance_order_p2`
/// coefficients of each vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontendConfig {
    pub sample_rate_hz: u32,
    pub preemphasis_coeff: f64,
    pub frame_ms: f64,
    pub overlap_fraction: f64,
    pub lpc_order: usize,
    pub cepstral_order_p1: usize,
    pub covariance_order_p2: usize,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 8000,
            preemphasis_coeff: 0.95,
            frame_ms: 30.0,
            overlap_fraction: 2.0 / 3.0,
            lpc_order: 16,
            cepstral_order_p1: 16,
            covariance_order_p2: 10,
        }
    }
}

impl FrontendConfig {
    /// Default configuration with the given cepstral and covariance orders.
    /// The LPC order follows the cepstral order.
    pub fn with_orders(p1: usize, p2: usize) -> Self {
        Self {
            lpc_order: p1,
            cepstral_order_p1: p1,
            covariance_order_p2: p2,
            ..Self::default()
        }
    }

    /// Frame length in samples.
    pub fn frame_len(&self) -> usize {
        (self.frame_ms * self.sample_rate_hz as f64 / 1000.0).round() as usize
    }

    /// Hop between frame starts in samples.
    pub fn hop(&self) -> usize {
        (self.frame_len() as f64 * (1.0 - self.overlap_fraction)).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate_hz == 0 {
            return Err(Error::InvalidConfig("sample_rate_hz must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.preemphasis_coeff) {
            return Err(Error::InvalidConfig(format!(
                "preemphasis_coeff {} not in [0, 1)",
                self.preemphasis_coeff
            )));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(Error::InvalidConfig(format!(
                "overlap_fraction {} not in [0, 1)",
                self.overlap_fraction
            )));
        }
        if self.covariance_order_p2 < 1
            || self.covariance_order_p2 > self.cepstral_order_p1
            || self.cepstral_order_p1 > self.lpc_order
        {
            return Err(Error::InvalidConfig(format!(
                "orders must satisfy 1 <= p2 ({}) <= p1 ({}) <= lpc_order ({})",
                self.covariance_order_p2, self.cepstral_order_p1, self.lpc_order
            )));
        }
        if self.frame_ms <= 0.0 || self.frame_len() < self.lpc_order + 1 {
            return Err(Error::InvalidConfig(format!(
                "frame of {} samples too short for LPC order {}",
                self.frame_len(),
                self.lpc_order
            )));
        }
        if self.hop() == 0 {
            return Err(Error::InvalidConfig("hop must be at least one sample".into()));
        }
        Ok(())
    }
}

/// Ordered cepstral vectors extracted from one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    /// One vector per usable frame, each of dimension P1.
    pub vectors: Vec<Vec<f64>>,
    pub source_id: String,
}

impl FeatureSequence {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }
}

/// First-order pre-emphasis: y[0] = x[0], y[n] = x[n] - coeff * x[n-1].
pub fn preemphasize(signal: &AudioSignal, coeff: f64) -> AudioSignal {
    let x = &signal.samples;
    let mut y = Vec::with_capacity(x.len());
    if !x.is_empty() {
        y.push(x[0]);
        for n in 1..x.len() {
            y.push(x[n] - coeff * x[n - 1]);
        }
    }
    AudioSignal::new(y, signal.sample_rate_hz)
}

/// Hamming window of the given length, exactly symmetric by construction.
pub fn hamming_window(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|n| {
            let m = n.min(len - 1 - n);
            0.54 - 0.46 * (2.0 * std::f64::consts::PI * m as f64 / (len - 1) as f64).cos()
        })
        .collect()
}

/// Splits a signal into Hamming-windowed frames.
///
/// Frame k covers samples [k*hop, k*hop + frame_len); signals shorter than
/// one frame yield no frames.
pub fn frame_signal(signal: &AudioSignal, config: &FrontendConfig) -> Vec<Vec<f64>> {
    let len = config.frame_len();
    let hop = config.hop();
    let x = &signal.samples;
    if x.len() < len {
        return Vec::new();
    }
    let window = hamming_window(len);
    let count = (x.len() - len) / hop + 1;
    (0..count)
        .map(|k| {
            let start = k * hop;
            x[start..start + len]
                .iter()
                .zip(&window)
                .map(|(s, w)| s * w)
                .collect()
        })
        .collect()
}

/// Autocorrelation r[0..=order]: r[k] = sum_n frame[n] * frame[n-k].
pub fn autocorrelate(frame: &[f64], order: usize) -> Vec<f64> {
    debug_assert!(order < frame.len());
    (0..=order)
        .map(|k| frame[k..].iter().zip(frame).map(|(a, b)| a * b).sum())
        .collect()
}

/// Output of the Levinson-Durbin recursion.
#[derive(Debug, Clone)]
pub struct LpcSolution {
    /// LPC coefficients a[1..=order] for A(z) = 1 - sum_k a_k z^{-k}.
    pub coeffs: Vec<f64>,
    /// Final prediction error energy, r[0] * prod(1 - k_i^2).
    pub prediction_error: f64,
    /// Reflection coefficients k[1..=order].
    pub reflection: Vec<f64>,
}

/// Solves the Toeplitz normal equations R a = r[1..=order] by the
/// Levinson-Durbin recursion.
///
/// Fails with [`Error::InvalidFrame`] when r[0] is not positive and with
/// [`Error::InvalidAutocorrelation`] when the prediction error stops being
/// positive at some recursion step; callers drop such frames.
pub fn levinson_durbin(r: &[f64]) -> Result<LpcSolution> {
    let order = r.len().saturating_sub(1);
    if r.is_empty() || r[0] <= 0.0 || !r[0].is_finite() {
        return Err(Error::InvalidFrame);
    }

    let mut a = vec![0.0; order];
    let mut prev = vec![0.0; order];
    let mut reflection = Vec::with_capacity(order);
    let mut error = r[0];

    for i in 1..=order {
        let mut acc = r[i];
        for j in 1..i {
            acc -= prev[j - 1] * r[i - j];
        }
        let k = acc / error;
        a[i - 1] = k;
        for j in 1..i {
            a[j - 1] = prev[j - 1] - k * prev[i - j - 1];
        }
        error *= 1.0 - k * k;
        if error <= 0.0 || !error.is_finite() {
            return Err(Error::InvalidAutocorrelation { order: i });
        }
        reflection.push(k);
        prev[..i].copy_from_slice(&a[..i]);
    }

    Ok(LpcSolution {
        coeffs: a,
        prediction_error: error,
        reflection,
    })
}

/// Cepstral recursion: c_n = a_n + sum_{k=1}^{n-1} (k/n) c_k a_{n-k},
/// with a_k = 0 beyond the LPC order.
///
/// These are the power-series coefficients of ln(1/A(z)) under the sign
/// convention above.
pub fn lpc_to_cepstrum(a: &[f64], q: usize) -> Vec<f64> {
    let coeff = |k: usize| if k >= 1 && k <= a.len() { a[k - 1] } else { 0.0 };
    let mut c = Vec::with_capacity(q);
    for n in 1..=q {
        let mut acc = coeff(n);
        for k in 1..n {
            acc += (k as f64 / n as f64) * c[k - 1] * coeff(n - k);
        }
        c.push(acc);
    }
    c
}

/// Runs the full front-end over one utterance.
///
/// Frames whose recursion fails (zero energy or numerically invalid
/// autocorrelation) are skipped; if no frame survives, the utterance is
/// rejected with [`Error::EmptyFeatures`].
pub fn extract_features(
    signal: &AudioSignal,
    config: &FrontendConfig,
    source_id: impl Into<String>,
) -> Result<FeatureSequence> {
    config.validate()?;
    let emphasized = preemphasize(signal, config.preemphasis_coeff);
    let frames = frame_signal(&emphasized, config);
    let mut vectors = Vec::with_capacity(frames.len());
    for frame in &frames {
        let r = autocorrelate(frame, config.lpc_order);
        match levinson_durbin(&r) {
            Ok(solution) => {
                vectors.push(lpc_to_cepstrum(&solution.coeffs, config.cepstral_order_p1))
            }
            Err(Error::InvalidFrame) | Err(Error::InvalidAutocorrelation { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    if vectors.is_empty() {
        return Err(Error::EmptyFeatures);
    }
    Ok(FeatureSequence {
        vectors,
        source_id: source_id.into(),
    })
}

/// Debug dump: one CSV row per frame with headers c1..cP1.
pub fn write_features_csv<W: Write>(features: &FeatureSequence, mut w: W) -> Result<()> {
    let io_err = |e: std::io::Error| Error::io("<features csv>", e);
    let dim = features.dim();
    let header: Vec<String> = (1..=dim).map(|i| format!("c{i}")).collect();
    writeln!(w, "{}", header.join(",")).map_err(io_err)?;
    for v in &features.vectors {
        let row: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", row.join(",")).map_err(io_err)?;
    }
    Ok(())
}
