//! Evaluation protocol: corpus manifests, parameter counting, the
//! method x SNR x scheme identification grid, and report emission.
//!
//! The protocol enrolls every speaker on their training entries, corrupts
//! each test utterance at each SNR level, scores it against every enrolled
//! model, and tallies rank-1 identification decisions. One decision per
//! test file. Entry-level problems are recorded as failures and count as
//! incorrect decisions; the run aborts only when a speaker loses all of
//! its train or test data.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::audio::{read_audio, AudioFileFormat, AudioSignal};
use crate::error::{Error, Result};
use crate::frontend::{extract_features, FeatureSequence, FrontendConfig};
use crate::fusion::{identify, z_normalize, FusionScheme};
use crate::model::{enroll, Method, Model};
use crate::noise::{add_noise, NoiseSpec};
use crate::seed::derive_seed;
use crate::vq::LbgParams;

// --- parameter counting ------------------------------------------------

/// Free parameters of a VQ model: 2^bits centroids of dimension p.
pub fn param_count_vq(bits: u32, p: usize) -> usize {
    (1usize << bits) * p
}

/// Free parameters of one symmetric covariance matrix: (p^2 + p) / 2.
pub fn param_count_cm(p: usize) -> usize {
    (p * p + p) / 2
}

/// Free parameters of the combined model: 2^bits clusters, each holding a
/// p1-dimensional centroid and a p2 x p2 symmetric matrix.
pub fn param_count_vqcm(bits: u32, p1: usize, p2: usize) -> usize {
    (1usize << bits) * (p1 + param_count_cm(p2))
}

// --- corpus manifest ----------------------------------------------------

/// Which protocol role an audio file plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidManifest(format!("unknown split '{other}'"))),
        }
    }
}

/// One audio file of the corpus. Paths are relative to the manifest file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub speaker_id: String,
    pub path: String,
    pub split: Split,
    pub format: AudioFileFormat,
}

/// The corpus: a list of (speaker, file, split, format) rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
}

const MANIFEST_HEADERS: [&str; 4] = ["speaker_id", "path", "split", "format"];

impl CorpusManifest {
    /// Distinct speaker ids in sorted order.
    pub fn speakers(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| e.speaker_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// A manifest is runnable when every speaker has at least one train
    /// and one test entry.
    pub fn validate_runnable(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::InvalidManifest("manifest has no entries".into()));
        }
        for speaker in self.speakers() {
            for split in [Split::Train, Split::Test] {
                if !self
                    .entries
                    .iter()
                    .any(|e| e.speaker_id == speaker && e.split == split)
                {
                    return Err(Error::SpeakerWithoutData {
                        speaker,
                        split: split.to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Reads a manifest CSV, insisting on the exact expected header.
pub fn read_manifest(path: &Path) -> Result<CorpusManifest> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::InvalidManifest(format!("{}: unreadable", path.display())),
        _ => Error::InvalidManifest(format!("{}: {e}", path.display())),
    })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::InvalidManifest(format!("{}: {e}", path.display())))?;
    if headers != MANIFEST_HEADERS.as_slice() {
        return Err(Error::InvalidManifest(format!(
            "{}: header must be '{}', found '{}'",
            path.display(),
            MANIFEST_HEADERS.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let entries = reader
        .deserialize::<ManifestEntry>()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::InvalidManifest(format!("{} row {}: {e}", path.display(), i + 2)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CorpusManifest { entries })
}

/// Writes a manifest CSV with the canonical header.
pub fn write_manifest(manifest: &CorpusManifest, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| {
        Error::InvalidManifest(format!("{}: cannot write manifest: {e}", path.display()))
    })?;
    for entry in &manifest.entries {
        writer
            .serialize(entry)
            .map_err(|e| Error::InvalidManifest(format!("{}: {e}", path.display())))?;
    }
    writer
        .flush()
        .map_err(|e| Error::io(path, e))?;
    Ok(())
}

// --- evaluation grid ----------------------------------------------------

/// One method under evaluation. The meaning of the fields follows the
/// sizing formulas: `bits` is the codebook size (ignored by CM), `p2` the
/// covariance order (ignored by VQ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MethodSpec {
    pub method: Method,
    pub bits: u32,
    pub p2: usize,
}

impl MethodSpec {
    /// Parses a CLI method token: `vq`, `vq:2` (bits), `cm:20` (order),
    /// `vqcm:1` (bits). Bare names take the supplied defaults.
    pub fn parse(token: &str, default_bits: u32, default_p2: usize) -> Result<Self> {
        let (name, arg) = match token.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (token, None),
        };
        let method: Method = name.parse()?;
        let number = |text: &str| -> Result<usize> {
            text.parse::<usize>()
                .map_err(|_| Error::InvalidConfig(format!("bad method argument in '{token}'")))
        };
        let mut spec = MethodSpec {
            method,
            bits: default_bits,
            p2: default_p2,
        };
        if let Some(arg) = arg {
            match method {
                Method::Vq | Method::Vqcm => spec.bits = number(arg)? as u32,
                Method::Cm => spec.p2 = number(arg)?,
            }
        }
        Ok(spec)
    }

    /// Human-readable row label, mirroring the usual table layout.
    pub fn label(&self) -> String {
        match self.method {
            Method::Vq => format!("VQ (bits={})", self.bits),
            Method::Cm => format!("CM ({0}x{0})", self.p2),
            Method::Vqcm => format!("VQ-CM (bits={}, P2={})", self.bits, self.p2),
        }
    }

    /// File-name-safe identifier.
    pub fn slug(&self) -> String {
        match self.method {
            Method::Vq => format!("vq-b{}", self.bits),
            Method::Cm => format!("cm-p{}", self.p2),
            Method::Vqcm => format!("vqcm-b{}-p{}", self.bits, self.p2),
        }
    }

    /// Parameter count of one enrolled model under this spec.
    pub fn param_count(&self, p1: usize) -> usize {
        match self.method {
            Method::Vq => param_count_vq(self.bits, p1),
            Method::Cm => param_count_cm(self.p2),
            Method::Vqcm => param_count_vqcm(self.bits, p1, self.p2),
        }
    }

    /// Front-end configuration this method needs, derived from the base:
    /// covariance methods may demand more cepstral coefficients than the
    /// base P1 (e.g. 20x20 matrices).
    pub fn effective_config(&self, base: &FrontendConfig) -> FrontendConfig {
        match self.method {
            Method::Vq => base.clone(),
            Method::Cm | Method::Vqcm => {
                let p1 = base.cepstral_order_p1.max(self.p2);
                FrontendConfig {
                    lpc_order: base.lpc_order.max(p1),
                    cepstral_order_p1: p1,
                    covariance_order_p2: self.p2,
                    ..base.clone()
                }
            }
        }
    }

    /// Schemes that make sense for this method: the baselines are single
    /// classifiers; only the combined model supports the requested fusion.
    pub fn schemes(&self, requested: &[FusionScheme]) -> Vec<FusionScheme> {
        match self.method {
            Method::Vq => vec![FusionScheme::VqOnly],
            Method::Cm => vec![FusionScheme::CmOnly],
            Method::Vqcm => requested.to_vec(),
        }
    }
}

/// Run-wide knobs of the evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub frontend: FrontendConfig,
    pub lbg: LbgParams,
    pub noise_seed: u64,
    pub z_norm: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            frontend: FrontendConfig::default(),
            lbg: LbgParams::default(),
            noise_seed: 7,
            z_norm: false,
        }
    }
}

/// One cell of the report grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: String,
    pub params: usize,
    pub snr_db: f64,
    pub scheme: FusionScheme,
    pub correct: usize,
    pub total: usize,
    /// confusion[true_speaker][decided_speaker] = count.
    pub confusion: BTreeMap<String, BTreeMap<String, usize>>,
}

impl ReportRow {
    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

/// A recorded per-entry problem that did not abort the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryFailure {
    pub speaker_id: String,
    pub path: String,
    pub stage: String,
    pub message: String,
}

/// Reproducibility block: everything needed to rerun the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub core_version: String,
    pub frontend: FrontendConfig,
    pub lbg: LbgParams,
    pub methods: Vec<String>,
    pub snrs_db: Vec<String>,
    pub schemes: Vec<String>,
    pub noise_seed: u64,
    pub z_norm: bool,
}

/// Wall-clock telemetry. Not part of the reference protocol: timings vary
/// run to run and are excluded from determinism guarantees.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub method: String,
    pub phase: String,
    pub seconds: f64,
}

/// The full result of one evaluation run.
#[derive(Debug, Clone)]
pub struct EvaluationReport {
    pub rows: Vec<ReportRow>,
    pub failures: Vec<EntryFailure>,
    pub metadata: RunMetadata,
    pub timing: Vec<PhaseTiming>,
}

/// Formats an SNR value the way the CLI accepts it ("inf", "30", "7.5").
pub fn fmt_snr(snr_db: f64) -> String {
    if snr_db.is_infinite() && snr_db > 0.0 {
        "inf".into()
    } else {
        format!("{snr_db}")
    }
}

struct LoadedEntry {
    entry_index: usize,
    speaker_id: String,
    path: String,
    signal: AudioSignal,
}

/// Extraction parameters that determine the feature vectors; methods
/// sharing a key share extracted features.
type ExtractionKey = (usize, usize); // (lpc_order, cepstral_order_p1)

struct FeatureCache {
    /// Concatenated training vectors per speaker.
    train: BTreeMap<String, FeatureSequence>,
    /// Per (snr index, loaded test index): features of the corrupted
    /// utterance, or None when a recorded failure occurred.
    test: Vec<Vec<Option<FeatureSequence>>>,
}

fn load_split(
    manifest: &CorpusManifest,
    base_dir: &Path,
    split: Split,
    failures: &mut Vec<EntryFailure>,
) -> Vec<LoadedEntry> {
    let mut loaded = Vec::new();
    for (entry_index, entry) in manifest.entries.iter().enumerate() {
        if entry.split != split {
            continue;
        }
        let full = base_dir.join(&entry.path);
        match read_audio(&full, entry.format) {
            Ok(signal) => loaded.push(LoadedEntry {
                entry_index,
                speaker_id: entry.speaker_id.clone(),
                path: entry.path.clone(),
                signal,
            }),
            Err(e) => failures.push(EntryFailure {
                speaker_id: entry.speaker_id.clone(),
                path: entry.path.clone(),
                stage: "load".into(),
                message: e.to_string(),
            }),
        }
    }
    loaded
}

fn build_feature_cache(
    config: &FrontendConfig,
    train: &[LoadedEntry],
    test: &[LoadedEntry],
    snrs: &[f64],
    noise_seed: u64,
    speakers: &[String],
    failures: &mut Vec<EntryFailure>,
) -> Result<FeatureCache> {
    // Training features: one concatenated sequence per speaker.
    let mut per_speaker: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    for loaded in train {
        match extract_features(&loaded.signal, config, &loaded.path) {
            Ok(features) => per_speaker
                .entry(loaded.speaker_id.clone())
                .or_default()
                .extend(features.vectors),
            Err(e) => failures.push(EntryFailure {
                speaker_id: loaded.speaker_id.clone(),
                path: loaded.path.clone(),
                stage: "train-features".into(),
                message: e.to_string(),
            }),
        }
    }
    let mut train_features = BTreeMap::new();
    for speaker in speakers {
        match per_speaker.remove(speaker) {
            Some(vectors) if !vectors.is_empty() => {
                train_features.insert(
                    speaker.clone(),
                    FeatureSequence {
                        vectors,
                        source_id: format!("{speaker}:train"),
                    },
                );
            }
            _ => {
                return Err(Error::SpeakerWithoutData {
                    speaker: speaker.clone(),
                    split: "train".into(),
                })
            }
        }
    }

    // Test features per SNR condition. The noise seed is derived from the
    // manifest position and the SNR index so every (file, condition) pair
    // has its own reproducible realization.
    let mut test_features = Vec::with_capacity(snrs.len());
    for (snr_index, &snr_db) in snrs.iter().enumerate() {
        let mut row = Vec::with_capacity(test.len());
        for loaded in test {
            let spec = NoiseSpec {
                snr_db,
                seed: derive_seed(
                    noise_seed,
                    ((snr_index as u64) << 32) | loaded.entry_index as u64,
                ),
            };
            let result = add_noise(&loaded.signal, &spec)
                .and_then(|noisy| extract_features(&noisy, config, &loaded.path));
            match result {
                Ok(features) => row.push(Some(features)),
                Err(e) => {
                    failures.push(EntryFailure {
                        speaker_id: loaded.speaker_id.clone(),
                        path: loaded.path.clone(),
                        stage: format!("test-features@{}", fmt_snr(snr_db)),
                        message: e.to_string(),
                    });
                    row.push(None);
                }
            }
        }
        test_features.push(row);
    }

    Ok(FeatureCache {
        train: train_features,
        test: test_features,
    })
}

/// Runs the full evaluation grid over a corpus.
pub fn run_evaluation(
    manifest: &CorpusManifest,
    base_dir: &Path,
    methods: &[MethodSpec],
    snrs: &[f64],
    schemes: &[FusionScheme],
    options: &EvalOptions,
) -> Result<EvaluationReport> {
    if methods.is_empty() || snrs.is_empty() || schemes.is_empty() {
        return Err(Error::InvalidConfig(
            "need at least one method, SNR and scheme".into(),
        ));
    }
    manifest.validate_runnable()?;
    let speakers = manifest.speakers();
    let mut failures = Vec::new();

    let train = load_split(manifest, base_dir, Split::Train, &mut failures);
    let test = load_split(manifest, base_dir, Split::Test, &mut failures);
    for speaker in &speakers {
        for (split, loaded) in [("train", &train), ("test", &test)] {
            if !loaded.iter().any(|l| &l.speaker_id == speaker) {
                return Err(Error::SpeakerWithoutData {
                    speaker: speaker.clone(),
                    split: split.into(),
                });
            }
        }
    }

    // Share feature extraction between methods with equal front-end needs.
    let mut caches: HashMap<ExtractionKey, FeatureCache> = HashMap::new();
    for spec in methods {
        let config = spec.effective_config(&options.frontend);
        config.validate()?;
        let key: ExtractionKey = (config.lpc_order, config.cepstral_order_p1);
        if let std::collections::hash_map::Entry::Vacant(slot) = caches.entry(key) {
            slot.insert(build_feature_cache(
                &config,
                &train,
                &test,
                snrs,
                options.noise_seed,
                &speakers,
                &mut failures,
            )?);
        }
    }

    let mut rows = Vec::new();
    let mut timing = Vec::new();

    for spec in methods {
        let config = spec.effective_config(&options.frontend);
        let key: ExtractionKey = (config.lpc_order, config.cepstral_order_p1);
        let cache = &caches[&key];
        let label = spec.label();
        let params = spec.param_count(config.cepstral_order_p1);

        let started = Instant::now();
        let mut models: Vec<Model> = Vec::with_capacity(speakers.len());
        for speaker in &speakers {
            let features = &cache.train[speaker];
            match enroll(spec.method, speaker, features, &config, spec.bits, &options.lbg) {
                Ok(model) => models.push(model),
                Err(e) => {
                    // A speaker that cannot be modeled breaks the closed set.
                    return Err(Error::SpeakerWithoutData {
                        speaker: speaker.clone(),
                        split: format!("train (enrollment failed: {e})"),
                    });
                }
            }
        }
        timing.push(PhaseTiming {
            method: label.clone(),
            phase: "enroll".into(),
            seconds: started.elapsed().as_secs_f64(),
        });

        let started = Instant::now();
        let method_schemes = spec.schemes(schemes);
        for (snr_index, &snr_db) in snrs.iter().enumerate() {
            // Accumulate (correct, total, confusion) per scheme over all
            // test entries.
            type Tally = (usize, usize, BTreeMap<String, BTreeMap<String, usize>>);
            let mut tallies: Vec<Tally> = vec![(0, 0, BTreeMap::new()); method_schemes.len()];

            for (test_index, loaded) in test.iter().enumerate() {
                let features = cache.test[snr_index][test_index].as_ref();
                let scores = features.map(|f| {
                    let mut collected = Vec::with_capacity(models.len());
                    for model in &models {
                        match model.score(f) {
                            Ok(sv) => collected.push(sv),
                            Err(e) => failures.push(EntryFailure {
                                speaker_id: model.speaker_id().to_string(),
                                path: loaded.path.clone(),
                                stage: format!("score@{}", fmt_snr(snr_db)),
                                message: e.to_string(),
                            }),
                        }
                    }
                    if options.z_norm {
                        z_normalize(&collected)
                    } else {
                        collected
                    }
                });

                for (scheme_index, &scheme) in method_schemes.iter().enumerate() {
                    let tally = &mut tallies[scheme_index];
                    tally.1 += 1;
                    let Some(scores) = scores.as_ref() else { continue };
                    match identify(scores, scheme) {
                        Ok(decided) => {
                            if decided == loaded.speaker_id {
                                tally.0 += 1;
                            }
                            *tally
                                .2
                                .entry(loaded.speaker_id.clone())
                                .or_default()
                                .entry(decided)
                                .or_default() += 1;
                        }
                        Err(e) => failures.push(EntryFailure {
                            speaker_id: loaded.speaker_id.clone(),
                            path: loaded.path.clone(),
                            stage: format!("decide@{}/{scheme}", fmt_snr(snr_db)),
                            message: e.to_string(),
                        }),
                    }
                }
            }

            for (scheme_index, &scheme) in method_schemes.iter().enumerate() {
                let (correct, total, confusion) = std::mem::take(&mut tallies[scheme_index]);
                rows.push(ReportRow {
                    method: label.clone(),
                    params,
                    snr_db,
                    scheme,
                    correct,
                    total,
                    confusion,
                });
            }
        }
        timing.push(PhaseTiming {
            method: label.clone(),
            phase: "score".into(),
            seconds: started.elapsed().as_secs_f64(),
        });
    }

    let metadata = RunMetadata {
        core_version: env!("CARGO_PKG_VERSION").into(),
        frontend: options.frontend.clone(),
        lbg: options.lbg,
        methods: methods.iter().map(MethodSpec::label).collect(),
        snrs_db: snrs.iter().copied().map(fmt_snr).collect(),
        schemes: schemes.iter().map(ToString::to_string).collect(),
        noise_seed: options.noise_seed,
        z_norm: options.z_norm,
    };

    Ok(EvaluationReport {
        rows,
        failures,
        metadata,
        timing,
    })
}

// --- report emission ----------------------------------------------------

fn method_order(report: &EvaluationReport) -> Vec<String> {
    let mut seen = Vec::new();
    for row in &report.rows {
        if !seen.contains(&row.method) {
            seen.push(row.method.clone());
        }
    }
    seen
}

fn slugify(label: &str) -> String {
    let mut slug = String::new();
    for ch in label.chars() {
        if ch.is_ascii_alphanumeric() {
            slug.push(ch.to_ascii_lowercase());
        } else if !slug.ends_with('-') && !slug.is_empty() {
            slug.push('-');
        }
    }
    slug.trim_end_matches('-').to_string()
}

/// Human table for one method: SNR rows, one rate column per scheme.
fn format_method_table(label: &str, rows: &[&ReportRow]) -> String {
    let params = rows.first().map_or(0, |r| r.params);
    let mut schemes = Vec::new();
    let mut snrs = Vec::new();
    for row in rows {
        if !schemes.contains(&row.scheme) {
            schemes.push(row.scheme);
        }
        if !snrs.iter().any(|s: &f64| s.total_cmp(&row.snr_db).is_eq()) {
            snrs.push(row.snr_db);
        }
    }

    let mut out = format!("{label} - {params} parameters\n");
    let col = 9usize;
    out.push_str(&format!("{:<10}", "SNR (dB)"));
    for scheme in &schemes {
        out.push_str(&format!("{:>col$}", scheme.to_string()));
    }
    out.push('\n');
    for &snr in &snrs {
        out.push_str(&format!("{:<10}", fmt_snr(snr)));
        for &scheme in &schemes {
            let cell = rows
                .iter()
                .find(|r| r.snr_db.total_cmp(&snr).is_eq() && r.scheme == scheme)
                .map(|r| format!("{:.1}", 100.0 * r.rate()))
                .unwrap_or_else(|| "-".into());
            out.push_str(&format!("{cell:>col$}"));
        }
        out.push('\n');
    }
    out
}

/// Writes the report set: per-method CSV + text table, a confusion CSV,
/// and the reproducibility metadata JSON. Returns the written paths.
pub fn write_report(report: &EvaluationReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();

    for label in method_order(report) {
        let rows: Vec<&ReportRow> = report.rows.iter().filter(|r| r.method == label).collect();
        let slug = slugify(&label);

        let csv_path = out_dir.join(format!("report_{slug}.csv"));
        let mut writer = csv::Writer::from_path(&csv_path).map_err(|e| {
            Error::io(&csv_path, std::io::Error::other(e.to_string()))
        })?;
        writer
            .write_record(["method", "params", "snr_db", "scheme", "correct", "total", "rate"])
            .and_then(|()| {
                rows.iter().try_for_each(|r| {
                    writer.write_record([
                        r.method.as_str(),
                        &r.params.to_string(),
                        &fmt_snr(r.snr_db),
                        r.scheme.cli_name(),
                        &r.correct.to_string(),
                        &r.total.to_string(),
                        &format!("{:.6}", r.rate()),
                    ])
                })
            })
            .map_err(|e| Error::io(&csv_path, std::io::Error::other(e.to_string())))?;
        writer
            .flush()
            .map_err(|e| Error::io(&csv_path, e))?;
        written.push(csv_path);

        let txt_path = out_dir.join(format!("report_{slug}.txt"));
        std::fs::write(&txt_path, format_method_table(&label, &rows))
            .map_err(|e| Error::io(&txt_path, e))?;
        written.push(txt_path);
    }

    let confusion_path = out_dir.join("confusion.csv");
    let mut writer = csv::Writer::from_path(&confusion_path)
        .map_err(|e| Error::io(&confusion_path, std::io::Error::other(e.to_string())))?;
    writer
        .write_record(["method", "snr_db", "scheme", "true_speaker", "decided_speaker", "count"])
        .and_then(|()| {
            report.rows.iter().try_for_each(|row| {
                row.confusion.iter().try_for_each(|(truth, decisions)| {
                    decisions.iter().try_for_each(|(decided, count)| {
                        writer.write_record([
                            row.method.as_str(),
                            &fmt_snr(row.snr_db),
                            row.scheme.cli_name(),
                            truth,
                            decided,
                            &count.to_string(),
                        ])
                    })
                })
            })
        })
        .map_err(|e| Error::io(&confusion_path, std::io::Error::other(e.to_string())))?;
    writer
        .flush()
        .map_err(|e| Error::io(&confusion_path, e))?;
    written.push(confusion_path);

    #[derive(Serialize)]
    struct MetadataFile<'a> {
        metadata: &'a RunMetadata,
        failures: &'a [EntryFailure],
        /// Wall-clock only; excluded from determinism guarantees.
        wall_clock_telemetry: &'a [PhaseTiming],
    }
    let metadata_path = out_dir.join("run_metadata.json");
    let payload = serde_json::to_string_pretty(&MetadataFile {
        metadata: &report.metadata,
        failures: &report.failures,
        wall_clock_telemetry: &report.timing,
    })
    .map_err(|e| Error::SchemaViolation(e.to_string()))?;
    std::fs::write(&metadata_path, payload + "\n").map_err(|e| Error::io(&metadata_path, e))?;
    written.push(metadata_path);

    Ok(written)
}

/// Aligned sweep table over covariance orders for the combined model:
/// a P2 column per spec, a parameter-count row, then one rate row per SNR.
pub fn format_p2_sweep(
    report: &EvaluationReport,
    specs: &[MethodSpec],
    p1: usize,
    scheme: FusionScheme,
) -> String {
    let col = 8usize;
    let mut out = format!("VQ-CM P2 sweep, scheme {scheme}\n");
    out.push_str(&format!("{:<12}", "P2"));
    for spec in specs {
        out.push_str(&format!("{:>col$}", spec.p2));
    }
    out.push('\n');
    out.push_str(&format!("{:<12}", "Parameters"));
    for spec in specs {
        out.push_str(&format!("{:>col$}", spec.param_count(p1)));
    }
    out.push('\n');

    let mut snrs: Vec<f64> = Vec::new();
    for row in &report.rows {
        if !snrs.iter().any(|s| s.total_cmp(&row.snr_db).is_eq()) {
            snrs.push(row.snr_db);
        }
    }
    for &snr in &snrs {
        out.push_str(&format!("{:<12}", format!("rate@{}", fmt_snr(snr))));
        for spec in specs {
            let label = spec.label();
            let cell = report
                .rows
                .iter()
                .find(|r| r.method == label && r.snr_db.total_cmp(&snr).is_eq() && r.scheme == scheme)
                .map(|r| format!("{:.1}", 100.0 * r.rate()))
                .unwrap_or_else(|| "-".into());
            out.push_str(&format!("{cell:>col$}"));
        }
        out.push('\n');
    }
    out
}
