//! `vqcm` — speaker identification from the command line.
//!
//! Four subcommands cover the full pipeline:
//!
//! * `synth`    — generate a deterministic synthetic corpus + manifest
//! * `enroll`   — train one model per speaker from a manifest's train split
//! * `identify` — score one utterance against a directory of models
//! * `evaluate` — run the method x SNR x scheme grid and write reports
//!
//! Every run leaves a metadata block (flags, seeds, versions) sufficient
//! to reproduce it exactly: `synth`/`enroll`/`evaluate` write a JSON file
//! into their output directory, `identify` prints one JSON line to stderr.
//!
//! Exit codes: 0 = success with no recorded entry failures, 1 = hard
//! error, 2 = evaluation finished but recorded per-entry failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use vqcm_core::audio::{read_audio, AudioFileFormat};
use vqcm_core::evaluation::{
    format_p2_sweep, read_manifest, run_evaluation, write_report, EvalOptions, MethodSpec, Split,
};
use vqcm_core::frontend::{extract_features, write_features_csv, FeatureSequence, FrontendConfig};
use vqcm_core::fusion::{
    identify_by_vote, rank_by_score, vote_counts, z_normalize, FusionScheme, RankedSpeaker,
};
use vqcm_core::model::{enroll, Method, Model};
use vqcm_core::model_store::{load_model_dir, model_filename, save_model};
use vqcm_core::noise::{add_noise, parse_snr_list, NoiseSpec};
use vqcm_core::synth::synth_corpus;
use vqcm_core::vq::LbgParams;
use vqcm_core::{Error, SynthCorpusConfig};

#[derive(Parser)]
#[command(
    name = "vqcm",
    version,
    about = "Closed-set speaker identification with VQ, covariance, and combined VQ-CM models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deterministic synthetic corpus with a manifest.
    Synth(SynthArgs),
    /// Train one model per speaker from a manifest's train entries.
    Enroll(EnrollArgs),
    /// Rank enrolled speakers against one utterance.
    Identify(IdentifyArgs),
    /// Run the full method x SNR x scheme evaluation grid.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for audio files and manifest.csv.
    #[arg(long, env = "VQCM_OUT_DIR", default_value = "vqcm-out")]
    out_dir: PathBuf,
    /// Number of synthetic speakers.
    #[arg(long, default_value_t = 10)]
    speakers: usize,
    /// Training utterance duration per speaker, in seconds.
    #[arg(long, default_value_t = 60.0)]
    train_secs: f64,
    /// Test utterances per speaker.
    #[arg(long, default_value_t = 5)]
    n_test: usize,
    /// Test utterance duration, in seconds.
    #[arg(long, default_value_t = 2.0)]
    test_secs: f64,
    /// Master corpus seed; everything else derives from it.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Scales the spacing between speakers' resonances; 0 collapses all
    /// speakers onto the same poles (identification falls to chance).
    #[arg(long, default_value_t = 1.0)]
    margin_scale: f64,
    /// Audio file format: wav or alaw.
    #[arg(long, default_value = "wav")]
    format: AudioFileFormat,
    /// Sample rate in Hz.
    #[arg(long, default_value_t = 8000)]
    sample_rate: u32,
}

#[derive(Args)]
struct EnrollArgs {
    /// Corpus manifest CSV (paths are resolved relative to it).
    #[arg(long)]
    manifest: PathBuf,
    /// Model type: vq, cm, or vqcm.
    #[arg(long)]
    method: Method,
    /// Codebook size in bits (2^bits centroids); ignored by cm.
    #[arg(long, default_value_t = 1)]
    bits: u32,
    /// Cepstral order P1 (feature dimension).
    #[arg(long, default_value_t = 16)]
    p1: usize,
    /// Covariance order P2 (matrix dimension); ignored by vq.
    #[arg(long, default_value_t = 10)]
    p2: usize,
    /// Directory that receives one model file per speaker.
    #[arg(long, env = "VQCM_OUT_DIR", default_value = "vqcm-out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct IdentifyArgs {
    /// Directory of enrolled model files.
    #[arg(long)]
    models: PathBuf,
    /// Utterance to identify.
    audio: PathBuf,
    /// Audio format; inferred from the file extension when omitted.
    #[arg(long)]
    format: Option<AudioFileFormat>,
    /// Fusion scheme: vq, cm, sum-all, sum-cm, median, or vote.
    #[arg(long, default_value = "sum-all")]
    scheme: FusionScheme,
    /// Corrupt the utterance with white noise at this SNR (dB) first.
    #[arg(long)]
    snr: Option<f64>,
    /// Seed for the noise generator.
    #[arg(long, default_value_t = 7)]
    noise_seed: u64,
    /// Z-normalize each classifier's scores across speakers before fusing.
    #[arg(long)]
    z_norm: bool,
    /// Print machine-readable CSV instead of the aligned table.
    #[arg(long)]
    csv: bool,
    /// Also dump the extracted feature vectors as CSV to this path.
    #[arg(long)]
    dump_features: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Corpus manifest CSV (paths are resolved relative to it).
    #[arg(long)]
    manifest: PathBuf,
    /// Comma-separated methods, each optionally parameterized:
    /// vq[:bits], cm[:p2], vqcm[:bits].
    #[arg(long, default_value = "vq,cm,vqcm")]
    methods: String,
    /// Default codebook bits for methods without an explicit :bits.
    #[arg(long, default_value_t = 1)]
    bits: u32,
    /// Cepstral order P1.
    #[arg(long, default_value_t = 16)]
    p1: usize,
    /// Default covariance order P2 for methods without an explicit :p2.
    #[arg(long, default_value_t = 10)]
    p2: usize,
    /// Comma-separated SNR levels in dB; "inf" means clean.
    #[arg(long, default_value = "inf")]
    snr: String,
    /// Comma-separated fusion schemes applied to the combined model.
    #[arg(long, default_value = "sum-all")]
    schemes: String,
    /// Base seed for all noise realizations.
    #[arg(long, default_value_t = 7)]
    noise_seed: u64,
    /// Z-normalize classifier scores across speakers before fusing.
    #[arg(long)]
    z_norm: bool,
    /// Sweep the combined model over these P2 values (comma-separated)
    /// instead of --methods; writes an extra p2_sweep.txt table.
    #[arg(long)]
    p2_sweep: Option<String>,
    /// Directory that receives the report files.
    #[arg(long, env = "VQCM_OUT_DIR", default_value = "vqcm-out")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    // Die quietly when stdout closes early (`vqcm ... | head`) instead of
    // panicking on the broken pipe.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => cmd_synth(&args),
        Command::Enroll(args) => cmd_enroll(&args),
        Command::Identify(args) => cmd_identify(&args),
        Command::Evaluate(args) => cmd_evaluate(&args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn write_metadata(path: &Path, value: &serde_json::Value) -> Result<(), String> {
    let payload = serde_json::to_string_pretty(value)
        .map_err(|e| format!("serializing metadata: {e}"))?;
    std::fs::write(path, payload + "\n").map_err(|e| format!("{}: {e}", path.display()))
}

fn versions() -> serde_json::Value {
    json!({
        "cli": env!("CARGO_PKG_VERSION"),
        "core": vqcm_core::VERSION,
        "model_format": vqcm_core::model_store::FORMAT_VERSION,
    })
}

// --- synth -----------------------------------------------------------------

fn cmd_synth(args: &SynthArgs) -> Result<u8, String> {
    let config = SynthCorpusConfig {
        n_speakers: args.speakers,
        train_secs: args.train_secs,
        n_test: args.n_test,
        test_secs: args.test_secs,
        seed: args.seed,
        margin_scale: args.margin_scale,
        format: args.format,
        sample_rate_hz: args.sample_rate,
    };
    let manifest = synth_corpus(&config, &args.out_dir).map_err(|e| e.to_string())?;
    println!(
        "wrote {} audio files + manifest.csv to {} ({} speakers, seed {})",
        manifest.entries.len(),
        args.out_dir.display(),
        args.speakers,
        args.seed
    );
    write_metadata(
        &args.out_dir.join("synth_metadata.json"),
        &json!({
            "command": "synth",
            "versions": versions(),
            "out_dir": args.out_dir.display().to_string(),
            "speakers": args.speakers,
            "train_secs": args.train_secs,
            "n_test": args.n_test,
            "test_secs": args.test_secs,
            "seed": args.seed,
            "margin_scale": args.margin_scale,
            "format": args.format.to_string(),
            "sample_rate_hz": args.sample_rate,
        }),
    )?;
    Ok(0)
}

// --- enroll ----------------------------------------------------------------

fn cmd_enroll(args: &EnrollArgs) -> Result<u8, String> {
    let manifest = read_manifest(&args.manifest).map_err(|e| e.to_string())?;
    let base_dir = args.manifest.parent().unwrap_or(Path::new("."));
    let spec = MethodSpec {
        method: args.method,
        bits: args.bits,
        p2: args.p2,
    };
    let config = spec.effective_config(&FrontendConfig::with_orders(args.p1, args.p2));
    config.validate().map_err(|e| e.to_string())?;
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| format!("{}: {e}", args.out_dir.display()))?;

    let speakers = manifest.speakers();
    let mut written = Vec::new();
    for speaker in &speakers {
        let attribute = |e: Error| format!("enrolling speaker {speaker}: {e}");
        let train: Vec<_> = manifest
            .entries
            .iter()
            .filter(|e| &e.speaker_id == speaker && e.split == Split::Train)
            .collect();
        if train.is_empty() {
            return Err(attribute(Error::SpeakerWithoutData {
                speaker: speaker.clone(),
                split: "train".into(),
            }));
        }
        let mut vectors = Vec::new();
        for entry in train {
            let signal =
                read_audio(&base_dir.join(&entry.path), entry.format).map_err(attribute)?;
            let features =
                extract_features(&signal, &config, &entry.path).map_err(attribute)?;
            vectors.extend(features.vectors);
        }
        let features = FeatureSequence {
            vectors,
            source_id: format!("{speaker}:train"),
        };
        let model = enroll(
            args.method,
            speaker,
            &features,
            &config,
            args.bits,
            &LbgParams::default(),
        )
        .map_err(attribute)?;
        warn_small_samples(&model, config.covariance_order_p2);

        let filename = model_filename(speaker, args.method).map_err(attribute)?;
        let path = args.out_dir.join(filename);
        save_model(&model, &path).map_err(attribute)?;
        println!(
            "enrolled {speaker}: {} model, {} parameters -> {}",
            args.method,
            model.param_count(),
            path.display()
        );
        written.push(path.display().to_string());
    }

    write_metadata(
        &args.out_dir.join("enroll_metadata.json"),
        &json!({
            "command": "enroll",
            "versions": versions(),
            "manifest": args.manifest.display().to_string(),
            "method": args.method.to_string(),
            "bits": args.bits,
            "p1": args.p1,
            "p2": args.p2,
            "out_dir": args.out_dir.display().to_string(),
            "models": written,
        }),
    )?;
    Ok(0)
}

/// Covariance estimates want at least P2 + 1 vectors; below that the
/// matrix is rank-deficient before the ridge. Warn, don't fail.
fn warn_small_samples(model: &Model, p2: usize) {
    let recommended = p2 + 1;
    match model {
        Model::Cm { covariance, .. } if covariance.sample_count < recommended => {
            eprintln!(
                "warning: speaker {}: covariance estimated from {} vectors (recommended >= {recommended})",
                model.speaker_id(),
                covariance.sample_count
            );
        }
        Model::Vqcm(speaker_model) => {
            for (i, cluster) in speaker_model.clusters.iter().enumerate() {
                if cluster.sample_count < recommended {
                    eprintln!(
                        "warning: speaker {}: cluster {i} covariance estimated from {} vectors (recommended >= {recommended})",
                        model.speaker_id(),
                        cluster.sample_count
                    );
                }
            }
        }
        _ => {}
    }
}

// --- identify ----------------------------------------------------------------

fn infer_format(path: &Path) -> Result<AudioFileFormat, String> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("wav") => Ok(AudioFileFormat::Wav),
        Some("alaw") | Some("al") => Ok(AudioFileFormat::Alaw),
        other => Err(format!(
            "cannot infer audio format from extension {other:?}; pass --format"
        )),
    }
}

fn cmd_identify(args: &IdentifyArgs) -> Result<u8, String> {
    let models = load_model_dir(&args.models).map_err(|e| e.to_string())?;
    let config = models[0].config().clone();
    let method = models[0].method();
    if models
        .iter()
        .any(|m| m.config() != &config || m.method() != method)
    {
        return Err(format!(
            "model directory {} mixes methods or front-end configurations; \
             enroll each method into its own directory",
            args.models.display()
        ));
    }

    let format = match args.format {
        Some(f) => f,
        None => infer_format(&args.audio)?,
    };
    let mut signal = read_audio(&args.audio, format).map_err(|e| e.to_string())?;
    if let Some(snr_db) = args.snr {
        signal = add_noise(
            &signal,
            &NoiseSpec {
                snr_db,
                seed: args.noise_seed,
            },
        )
        .map_err(|e| e.to_string())?;
    }
    let source = args.audio.display().to_string();
    let features = extract_features(&signal, &config, &source).map_err(|e| e.to_string())?;
    if let Some(dump) = &args.dump_features {
        let file = std::fs::File::create(dump).map_err(|e| format!("{}: {e}", dump.display()))?;
        write_features_csv(&features, file).map_err(|e| e.to_string())?;
    }

    let mut scores = Vec::with_capacity(models.len());
    for model in &models {
        scores.push(model.score(&features).map_err(|e| {
            format!("scoring against speaker {}: {e}", model.speaker_id())
        })?);
    }
    if args.z_norm {
        scores = z_normalize(&scores);
    }

    let (ranking, winner) = if args.scheme == FusionScheme::Vote {
        let winner = identify_by_vote(&scores).map_err(|e| e.to_string())?;
        let counts = vote_counts(&scores).map_err(|e| e.to_string())?;
        let mut ranking: Vec<RankedSpeaker> = counts
            .into_iter()
            .map(|(speaker_id, votes)| RankedSpeaker {
                speaker_id,
                score: votes as f64,
            })
            .collect();
        // Most votes first; ties alphabetically.
        ranking.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.speaker_id.cmp(&b.speaker_id)));
        (ranking, winner)
    } else {
        let ranking = rank_by_score(&scores, args.scheme).map_err(|e| e.to_string())?;
        let winner = ranking[0].speaker_id.clone();
        (ranking, winner)
    };

    if args.csv {
        println!("rank,speaker_id,score,rank1");
        for (i, entry) in ranking.iter().enumerate() {
            println!(
                "{},{},{},{}",
                i + 1,
                entry.speaker_id,
                entry.score,
                entry.speaker_id == winner
            );
        }
    } else {
        println!(
            "scheme {} over {} {} models:",
            args.scheme,
            ranking.len(),
            method
        );
        for (i, entry) in ranking.iter().enumerate() {
            let flag = if entry.speaker_id == winner { '*' } else { ' ' };
            println!("{flag} {:>3}  {:<16} {:>12.6}", i + 1, entry.speaker_id, entry.score);
        }
    }

    let metadata = json!({
        "command": "identify",
        "versions": versions(),
        "models": args.models.display().to_string(),
        "audio": source,
        "format": format.to_string(),
        "scheme": args.scheme.to_string(),
        "snr_db": args.snr.map(|s| s.to_string()),
        "noise_seed": args.noise_seed,
        "z_norm": args.z_norm,
        "decision": winner,
    });
    eprintln!("metadata: {metadata}");
    Ok(0)
}

// --- evaluate -----------------------------------------------------------------

fn cmd_evaluate(args: &EvaluateArgs) -> Result<u8, String> {
    let manifest = read_manifest(&args.manifest).map_err(|e| e.to_string())?;
    let base_dir = args.manifest.parent().unwrap_or(Path::new("."));

    let methods: Vec<MethodSpec> = match &args.p2_sweep {
        Some(sweep) => sweep
            .split(',')
            .map(|token| {
                token
                    .trim()
                    .parse::<usize>()
                    .map(|p2| MethodSpec {
                        method: Method::Vqcm,
                        bits: args.bits,
                        p2,
                    })
                    .map_err(|_| format!("bad P2 value '{token}' in --p2-sweep"))
            })
            .collect::<Result<_, _>>()?,
        None => args
            .methods
            .split(',')
            .map(|token| MethodSpec::parse(token.trim(), args.bits, args.p2))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?,
    };
    let snrs = parse_snr_list(&args.snr).map_err(|e| e.to_string())?;
    let schemes: Vec<FusionScheme> = args
        .schemes
        .split(',')
        .map(|token| token.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|e: Error| e.to_string())?;

    let options = EvalOptions {
        frontend: FrontendConfig::with_orders(args.p1, args.p2),
        lbg: LbgParams::default(),
        noise_seed: args.noise_seed,
        z_norm: args.z_norm,
    };
    let report = run_evaluation(&manifest, base_dir, &methods, &snrs, &schemes, &options)
        .map_err(|e| e.to_string())?;

    let mut written = write_report(&report, &args.out_dir).map_err(|e| e.to_string())?;
    if args.p2_sweep.is_some() {
        let table = format_p2_sweep(&report, &methods, args.p1, schemes[0]);
        let path = args.out_dir.join("p2_sweep.txt");
        std::fs::write(&path, &table).map_err(|e| format!("{}: {e}", path.display()))?;
        print!("{table}");
        written.push(path);
    } else {
        // Mirror the per-method text tables on stdout.
        for path in written.iter().filter(|p| p.extension() == Some("txt".as_ref())) {
            let table =
                std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            println!("{table}");
        }
    }

    write_metadata(
        &args.out_dir.join("evaluate_metadata.json"),
        &json!({
            "command": "evaluate",
            "versions": versions(),
            "manifest": args.manifest.display().to_string(),
            "methods": methods.iter().map(MethodSpec::label).collect::<Vec<_>>(),
            "bits": args.bits,
            "p1": args.p1,
            "p2": args.p2,
            "snrs_db": snrs.iter().copied().map(vqcm_core::evaluation::fmt_snr).collect::<Vec<_>>(),
            "schemes": schemes.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "noise_seed": args.noise_seed,
            "z_norm": args.z_norm,
            "p2_sweep": args.p2_sweep,
            "out_dir": args.out_dir.display().to_string(),
            "files": written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        }),
    )?;

    for path in &written {
        eprintln!("wrote {}", path.display());
    }
    if report.failures.is_empty() {
        Ok(0)
    } else {
        eprintln!(
            "{} entry failure(s) recorded; see run_metadata.json",
            report.failures.len()
        );
        Ok(2)
    }
}
