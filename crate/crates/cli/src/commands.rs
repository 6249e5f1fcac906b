use std::fs::{self, OpenOptions};
use std::io::{self, BufRead, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use voicegate_core::access::{self, AccessOutcome};
use voicegate_core::audio_io::{decode_wav_file, load_dataset, Dataset};
use voicegate_core::evaluation::{sweep_neighbors, EvalReport};
use voicegate_core::knn::TrainingPoint;
use voicegate_core::synth::{self, SynthConfig};
use voicegate_core::{Corpus, CredentialStore, LabeledClip, PipelineConfig, SpeakerModel};

use crate::config::ConfigFile;
use crate::model_file::ModelFile;
use crate::{UsageError, EXIT_DENIED, EXIT_OK};

#[derive(Debug, Parser)]
#[command(name = "voicegate", version, about = "Speaker identification with wavelet denoising, MFCCs and k-NN")]
pub struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a speaker model from `<corpus>/<speaker_id>/*.wav`.
    Train(TrainArgs),
    /// Predict the speaker of a clip, or check an identity claim.
    Identify(IdentifyArgs),
    /// Sweep neighbour counts with k-fold and holdout evaluation.
    Evaluate(EvaluateArgs),
    /// Write the per-frame MFCC matrix of one clip as CSV.
    Extract(ExtractArgs),
    /// Generate a synthetic multi-speaker corpus.
    Synth(SynthArgs),
    /// Set a speaker's fallback password; the password is read from stdin.
    EnrollPassword(EnrollArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// Pipeline configuration (TOML).
    #[arg(long, env = "VOICEGATE_CONFIG")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Corpus root. A `train/` + `test/` layout trains on `train/` only.
    pub corpus: PathBuf,
    /// Output model file (JSON).
    #[arg(short, long)]
    pub out: PathBuf,
    /// Number of neighbours; overrides the config.
    #[arg(short, long)]
    pub k: Option<usize>,
    /// Worker threads for feature extraction.
    #[arg(short, long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub config: ConfigArg,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    /// Clip to identify.
    pub clip: PathBuf,
    /// Trained model file.
    #[arg(short, long)]
    pub model: PathBuf,
    /// Claimed speaker id; enables the access decision.
    #[arg(long)]
    pub claim: Option<String>,
    /// Never prompt; a required password counts as a failed attempt.
    #[arg(long)]
    pub no_interactive: bool,
    /// Credential store used for the password fallback.
    #[arg(long)]
    pub credentials: Option<PathBuf>,
    /// Append one line per decision to this file.
    #[arg(long)]
    pub audit_log: Option<PathBuf>,
    /// Refuse to run unless this config matches the model's pipeline.
    #[command(flatten)]
    pub config: ConfigArg,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Corpus root, flat or with `train/` and `test/` subsets.
    pub corpus: PathBuf,
    /// Comma-separated neighbour counts.
    #[arg(long, value_delimiter = ',')]
    pub k_values: Option<Vec<usize>>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the full report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(short, long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub config: ConfigArg,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    pub clip: PathBuf,
    /// Output CSV; stdout when omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Value of the `clip_id` column; defaults to the file name.
    #[arg(long)]
    pub clip_id: Option<String>,
    #[command(flatten)]
    pub config: ConfigArg,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory; receives `train/` and `test/`.
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub speakers: usize,
    /// Training clips per speaker.
    #[arg(long, default_value_t = 40)]
    pub train: usize,
    /// Test clips per speaker.
    #[arg(long, default_value_t = 10)]
    pub test: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 16_000)]
    pub sample_rate: u32,
    /// Clip length in seconds.
    #[arg(long, default_value_t = 1.0)]
    pub duration: f64,
    /// Noise standard deviation relative to clip amplitude.
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    /// Give every clip an unrelated random voice.
    #[arg(long)]
    pub control: bool,
}

#[derive(Debug, Args)]
pub struct EnrollArgs {
    /// Credential store; created if missing.
    #[arg(long)]
    pub credentials: PathBuf,
    #[arg(long)]
    pub speaker: String,
    /// PBKDF2 iteration count.
    #[arg(long, default_value_t = access::DEFAULT_PBKDF2_ITERATIONS)]
    pub iterations: u32,
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train(a) => train(a),
        Command::Identify(a) => identify(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Extract(a) => extract(a),
        Command::Synth(a) => synth_corpus(a),
        Command::EnrollPassword(a) => enroll_password(a),
    }
}

fn report_skips(corpus: &Corpus) {
    for s in &corpus.skipped {
        eprintln!("warning: skipped {}: {}", s.path.display(), s.reason);
    }
}

fn with_jobs<T: Send>(jobs: Option<usize>, work: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(work()),
        Some(0) => Err(UsageError("--jobs must be at least 1".into()).into()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            Ok(pool.install(work))
        }
    }
}

/// Feature vectors for every clip, in corpus order.
pub fn extract_points(
    clips: &[LabeledClip],
    pipeline: &PipelineConfig,
    jobs: Option<usize>,
) -> Result<Vec<TrainingPoint>> {
    with_jobs(jobs, || {
        clips
            .par_iter()
            .map(|clip| {
                let feature = pipeline
                    .clip_feature(&clip.signal, clip.clip_id.clone())
                    .with_context(|| format!("processing {}", clip.source_path.display()))?;
                Ok(TrainingPoint {
                    feature,
                    speaker_id: clip.speaker_id.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?
}

fn train(args: TrainArgs) -> Result<ExitCode> {
    let config = ConfigFile::load(args.config.config.as_deref())?;
    let pipeline = config.pipeline();
    let k = args.k.unwrap_or(config.knn.k);
    if k == 0 {
        bail!(UsageError("k must be at least 1".into()));
    }

    let corpus = match load_dataset(&args.corpus)? {
        Dataset::Flat(c) => c,
        Dataset::Split { train, .. } => {
            log::info!("split layout detected; training on {}", args.corpus.join("train").display());
            train
        }
    };
    report_skips(&corpus);
    let missing = corpus.speakers_without_clips();
    if !missing.is_empty() {
        bail!("no usable clips for speaker(s): {}", missing.join(", "));
    }

    let points = extract_points(&corpus.clips, &pipeline, args.jobs)?;
    let model = SpeakerModel::fit(points, k, pipeline.fingerprint())?;
    let file = ModelFile::from_model(&model, &config, timestamp());
    file.save_atomic(&args.out)?;
    println!(
        "trained on {} clips from {} speakers (k = {}); model written to {}",
        model.points().len(),
        model.label_set().len(),
        model.k(),
        args.out.display()
    );
    Ok(ExitCode::from(EXIT_OK))
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn identify(args: IdentifyArgs) -> Result<ExitCode> {
    let file = ModelFile::load(&args.model)?;
    let pipeline = file.config.pipeline();
    let mut policy = file.config.access;
    if let Some(path) = args.config.config.as_deref() {
        let given = ConfigFile::load(Some(path))?;
        if given.pipeline().fingerprint() != file.pipeline_fingerprint {
            bail!(
                "config {} does not match the pipeline the model was trained with",
                path.display()
            );
        }
        policy = given.access;
    }
    let model = file.to_model()?;
    let signal = decode_wav_file(&args.clip)?;

    let Some(claim) = args.claim else {
        let feature = pipeline.clip_feature(&signal, args.clip.display().to_string())?;
        let p = model.predict(&feature)?;
        println!("predicted: {}", p.label);
        println!("vote fraction: {:.3} (k = {})", p.vote_fraction, model.k());
        if p.vote_tied {
            println!("note: vote was tied; broken by nearest neighbour");
        }
        return Ok(ExitCode::from(EXIT_OK));
    };

    let mut decision = access::decide(&model, &claim, &signal, &pipeline, &policy)?;
    if decision.outcome == AccessOutcome::PasswordRequired {
        decision = if args.no_interactive {
            access::deny_without_password(decision, "non-interactive mode")
        } else {
            match args.credentials.as_deref() {
                None => access::deny_without_password(decision, "no credential store"),
                Some(path) => {
                    let store = CredentialStore::load(path)?;
                    if store.entry(&claim).is_none() {
                        access::deny_without_password(decision, "no password enrolled")
                    } else {
                        eprint!("password for {claim}: ");
                        io::stderr().flush()?;
                        match read_password_line()? {
                            Some(pw) => access::resolve_with_password(decision, &store, &pw)?,
                            None => access::deny_without_password(decision, "no password supplied"),
                        }
                    }
                }
            }
        };
    }

    println!("outcome: {}", decision.outcome);
    println!("claimed: {}", decision.claimed_id);
    println!("predicted: {}", decision.predicted_id);
    println!("vote fraction: {:.3}", decision.vote_fraction);
    log::info!("{}", decision.audit_note);

    if let Some(path) = &args.audit_log {
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .with_context(|| format!("opening audit log {}", path.display()))?;
        writeln!(f, "{}", decision.audit_line(&timestamp()))?;
    }

    Ok(ExitCode::from(if decision.outcome.is_granted() {
        EXIT_OK
    } else {
        EXIT_DENIED
    }))
}

fn read_password_line() -> Result<Option<String>> {
    let mut line = String::new();
    if io::stdin().lock().read_line(&mut line)? == 0 {
        return Ok(None);
    }
    Ok(Some(line.trim_end_matches(['\r', '\n']).to_string()))
}

#[derive(Serialize)]
struct ReportFile<'a> {
    format_version: u32,
    created_at: String,
    pipeline_fingerprint: String,
    config: &'a ConfigFile,
    report: &'a EvalReport,
}

fn evaluate(args: EvaluateArgs) -> Result<ExitCode> {
    let mut config = ConfigFile::load(args.config.config.as_deref())?;
    if let Some(k) = args.k_values {
        config.evaluation.k_values = k;
    }
    if let Some(f) = args.folds {
        config.evaluation.folds = f;
    }
    if let Some(s) = args.seed {
        config.evaluation.seed = s;
    }
    let eval = &config.evaluation;
    if eval.k_values.is_empty() || eval.k_values.contains(&0) {
        bail!(UsageError("k values must be positive".into()));
    }
    if eval.folds < 2 {
        bail!(UsageError("at least two folds are required".into()));
    }
    let pipeline = config.pipeline();

    let report = match load_dataset(&args.corpus)? {
        Dataset::Flat(corpus) => {
            report_skips(&corpus);
            let data = extract_points(&corpus.clips, &pipeline, args.jobs)?;
            sweep_neighbors(&data, None, &eval.k_values, eval.folds, eval.seed)?
        }
        Dataset::Split { train, test } => {
            report_skips(&train);
            report_skips(&test);
            let train = extract_points(&train.clips, &pipeline, args.jobs)?;
            let test = extract_points(&test.clips, &pipeline, args.jobs)?;
            sweep_neighbors(&train, Some(&test), &eval.k_values, eval.folds, eval.seed)?
        }
    };

    println!(
        "{}-fold CV over {} clips; holdout {} train / {} test; seed {}",
        report.fold_count,
        report.kfold_samples,
        report.holdout_train_samples,
        report.holdout_test_samples,
        report.split_seed
    );
    println!();
    print!("{}", report.table());
    for r in &report.per_k_results {
        if r.holdout.accuracy().is_none() {
            println!("holdout at k = {} is indeterminate: too many tied votes", r.k);
        }
    }
    println!();
    println!("confusion matrix at k = {} (k-fold predictions):", report.best_k);
    print!("{}", report.render_confusion());

    if let Some(path) = &args.report {
        let file = ReportFile {
            format_version: 1,
            created_at: timestamp(),
            pipeline_fingerprint: pipeline.fingerprint(),
            config: &config,
            report: &report,
        };
        let json = serde_json::to_string_pretty(&file)?;
        fs::write(path, json + "\n").with_context(|| format!("writing report {}", path.display()))?;
    }
    Ok(ExitCode::from(EXIT_OK))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn extract(args: ExtractArgs) -> Result<ExitCode> {
    let config = ConfigFile::load(args.config.config.as_deref())?;
    let signal = decode_wav_file(&args.clip)?;
    let mfcc = config
        .pipeline()
        .mfcc_matrix(&signal)
        .with_context(|| format!("processing {}", args.clip.display()))?;
    let clip_id = args.clip_id.unwrap_or_else(|| {
        args.clip
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    });

    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        ),
        None => Box::new(io::stdout().lock()),
    };
    write_mfcc_csv(BufWriter::new(sink), &clip_id, mfcc.rows(), mfcc.num_ceps())?;
    Ok(ExitCode::from(EXIT_OK))
}

/// `clip_id,frame_index,c1..cN`; values use the shortest round-trip representation.
pub fn write_mfcc_csv<W: Write>(mut w: W, clip_id: &str, rows: &[Vec<f64>], num_ceps: usize) -> Result<()> {
    write!(w, "clip_id,frame_index")?;
    for i in 1..=num_ceps {
        write!(w, ",c{i}")?;
    }
    writeln!(w)?;
    let id = csv_field(clip_id);
    for (t, row) in rows.iter().enumerate() {
        write!(w, "{id},{t}")?;
        for v in row {
            write!(w, ",{v:?}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn synth_corpus(args: SynthArgs) -> Result<ExitCode> {
    let cfg = SynthConfig {
        speakers: args.speakers,
        train_per_speaker: args.train,
        test_per_speaker: args.test,
        seed: args.seed,
        sample_rate_hz: args.sample_rate,
        duration_secs: args.duration,
        noise_level: args.noise,
        control: args.control,
    };
    let n = synth::write_corpus(&args.out, &cfg)?;
    println!(
        "wrote {n} clips for {} speakers to {}{}",
        cfg.speakers,
        args.out.display(),
        if cfg.control { " (control: labels carry no voice information)" } else { "" }
    );
    Ok(ExitCode::from(EXIT_OK))
}

fn enroll_password(args: EnrollArgs) -> Result<ExitCode> {
    if args.iterations == 0 {
        bail!(UsageError("iterations must be at least 1".into()));
    }
    let mut store = if args.credentials.exists() {
        CredentialStore::load(&args.credentials)?
    } else {
        CredentialStore::new()
    };
    store.set_iterations(args.iterations);
    let Some(password) = read_password_line()? else {
        bail!(UsageError("expected a password on stdin".into()));
    };
    if password.is_empty() {
        bail!(UsageError("password must not be empty".into()));
    }
    store.enroll(&args.speaker, &password)?;
    store.save(&args.credentials)?;
    println!("password set for {} in {}", args.speaker, args.credentials.display());
    Ok(ExitCode::from(EXIT_OK))
}
