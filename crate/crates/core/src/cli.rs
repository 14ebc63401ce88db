//! The `chordhmm` command line: `train-lm`, `fit-duration`, `decode`, `eval`,
//! `simulate` and `sweep`.
//!
//! Every option can also come from a TOML file given with `--config`; keys are
//! the long flag names (`alpha-grid = [0.01, 0.1]`). Flags win over the file.
//! Exit status: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::acoustic::{SimulatorParams, TrainConfig};
use crate::chordlm::{NGramModel, DEFAULT_ALPHA_GRID};
use crate::corpus::{change_sequence, sample_frames, write_lab, RejectPolicy, DEFAULT_FRAME_RATE, NUM_CLASSES};
use crate::durmodel::{fit_duration, histogram_csv, DurationModel, DEFAULT_K_MAX};
use crate::error::{Error, Result};
use crate::evalkit::{aggregate, score_song, song_table_csv, ablation_table_csv, WcsrReport};
use crate::pipeline::{
    fit_lm, frame_durations, list_files, load_lab_dir, load_posterior_dir, par_map, read_text, stem, sweep,
    sweep_csv, write_text, AlphaChoice, DecodeMode, Decoder, PosteriorSource, SmoothingChoice, Song, SweepGrid,
    TemporalConfig, ToyConfig,
};
use crate::synth::{derive_seed, generate_corpus, random_bigram, GeneratorConfig};

#[derive(Debug, Parser)]
#[command(name = "chordhmm", version, about = "Chord recognition temporal models: train, decode, evaluate, simulate")]
pub struct Cli {
    /// TOML file with default values for any flag; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Root seed; every random stream is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for per-song work. Output does not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit an N-gram chord language model on a directory of .lab files.
    TrainLm(TrainLmArgs),
    /// Fit a negative binomial duration model on a directory of .lab files.
    FitDuration(FitDurationArgs),
    /// Decode posterior CSV files into .lab files.
    Decode(DecodeArgs),
    /// Score estimated .lab files against references (WCSR).
    Eval(EvalArgs),
    /// Generate a synthetic corpus of .lab files and matching posteriors.
    Simulate(SimulateArgs),
    /// Cross-validated grid over temperature, target smoothing and decode mode.
    Sweep(SweepArgs),
}

#[derive(Debug, Args, Default)]
pub struct CorpusArgs {
    /// Directory of .lab annotation files.
    #[arg(long, value_name = "DIR")]
    pub corpus: Option<PathBuf>,
    /// Skip unreadable or unparseable files instead of aborting.
    #[arg(long)]
    pub skip_bad: bool,
    /// What to do with labels outside major/minor/no-chord: error, exclude, no-chord.
    #[arg(long, value_name = "POLICY")]
    pub reject: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainLmArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// N-gram order (1 = unigram over chord changes).
    #[arg(long)]
    pub order: Option<usize>,
    /// Fixed Lidstone pseudo-count; disables selection.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Pseudo-counts to choose from on a held-out song fold.
    #[arg(long, value_delimiter = ',', value_name = "A,B,..")]
    pub alpha_grid: Vec<f64>,
    /// Output model file.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Perplexity report (JSON); defaults to <out>.report.json.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitDurationArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Frames per second used to turn segment times into durations.
    #[arg(long)]
    pub frame_rate: Option<f64>,
    /// Largest number of stages K to try.
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Output model file.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Duration histogram CSV; defaults to <out>.hist.csv.
    #[arg(long, value_name = "FILE")]
    pub histogram: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Directory of posterior CSV files.
    #[arg(long, value_name = "DIR")]
    pub posteriors: Option<PathBuf>,
    /// none, dur or <N>-gram.
    #[arg(long)]
    pub mode: Option<String>,
    /// Language model file (N-gram modes).
    #[arg(long, value_name = "FILE")]
    pub lm: Option<PathBuf>,
    /// Duration model file (dur and N-gram modes).
    #[arg(long, value_name = "FILE")]
    pub duration: Option<PathBuf>,
    /// Softmax temperature applied to the posteriors first.
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Output directory for .lab files, decode.log and summary.jsonl.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of reference .lab files.
    #[arg(long, value_name = "DIR")]
    pub reference: Option<PathBuf>,
    /// Estimate directory, optionally named: `dur=out/dur`. Repeat for more columns.
    #[arg(long, value_name = "[NAME=]DIR")]
    pub estimate: Vec<String>,
    /// Output CSV; stdout when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Policy for labels outside the vocabulary: error, exclude, no-chord.
    #[arg(long, value_name = "POLICY")]
    pub reject: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Output directory; gets labels/, posteriors/, generator.lm and generator.dur.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub songs: Option<usize>,
    #[arg(long)]
    pub min_segments: Option<usize>,
    #[arg(long)]
    pub max_segments: Option<usize>,
    /// Generating language model file; a random sparse bigram when absent.
    #[arg(long, value_name = "FILE")]
    pub lm: Option<PathBuf>,
    /// Favoured successors per chord in the random bigram.
    #[arg(long)]
    pub favoured: Option<usize>,
    /// Duration stages K of the generating model.
    #[arg(long)]
    pub duration_k: Option<usize>,
    /// Duration success probability p of the generating model.
    #[arg(long)]
    pub duration_p: Option<f64>,
    #[arg(long)]
    pub frame_rate: Option<f64>,
    #[arg(long)]
    pub noise_scale: Option<f64>,
    #[arg(long)]
    pub confusion_temperature: Option<f64>,
    /// Lag-one correlation of the posterior noise, in [0, 1).
    #[arg(long)]
    pub noise_correlation: Option<f64>,
    /// Write labels only, no posteriors.
    #[arg(long)]
    pub labels_only: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Posterior CSV directory. Without it the toy classifier is trained on
    /// synthetic features for every smoothing setting.
    #[arg(long, value_name = "DIR")]
    pub posteriors: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_name = "T,..")]
    pub temperatures: Vec<f64>,
    /// none, uniform:B, unigram:B, smear:W.
    #[arg(long, value_delimiter = ',', value_name = "S,..")]
    pub smoothing: Vec<String>,
    /// none, dur, <N>-gram.
    #[arg(long, value_delimiter = ',', value_name = "M,..")]
    pub modes: Vec<String>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_delimiter = ',', value_name = "A,B,..")]
    pub alpha_grid: Vec<f64>,
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Frame rate for the toy route.
    #[arg(long)]
    pub frame_rate: Option<f64>,
    /// Feature noise of the toy route.
    #[arg(long)]
    pub feature_noise: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Train the toy classifier on every n-th frame.
    #[arg(long)]
    pub stride: Option<usize>,
    /// Record failing cells and continue instead of aborting.
    #[arg(long)]
    pub keep_going: bool,
    /// Output directory; grid.csv and summary.jsonl are overwritten.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// Values read from `--config`. Keys match the long flag names.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub corpus: Option<PathBuf>,
    pub skip_bad: Option<bool>,
    pub reject: Option<String>,
    pub order: Option<usize>,
    pub alpha: Option<f64>,
    pub alpha_grid: Option<Vec<f64>>,
    pub report: Option<PathBuf>,
    pub frame_rate: Option<f64>,
    pub k_max: Option<usize>,
    pub histogram: Option<PathBuf>,
    pub posteriors: Option<PathBuf>,
    pub mode: Option<String>,
    pub lm: Option<PathBuf>,
    pub duration: Option<PathBuf>,
    pub temperature: Option<f64>,
    pub out: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub estimate: Option<Vec<String>>,
    pub songs: Option<usize>,
    pub min_segments: Option<usize>,
    pub max_segments: Option<usize>,
    pub favoured: Option<usize>,
    pub duration_k: Option<usize>,
    pub duration_p: Option<f64>,
    pub noise_scale: Option<f64>,
    pub confusion_temperature: Option<f64>,
    pub noise_correlation: Option<f64>,
    pub labels_only: Option<bool>,
    pub temperatures: Option<Vec<f64>>,
    pub smoothing: Option<Vec<String>>,
    pub modes: Option<Vec<String>>,
    pub folds: Option<usize>,
    pub feature_noise: Option<f64>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub stride: Option<usize>,
    pub keep_going: Option<bool>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read_text(path)?).map_err(|e| match e {
            Error::InvalidArgument(m) => Error::InvalidArgument(format!("{}: {m}", path.display())),
            e => e,
        })
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

fn pick_vec<T>(flag: Vec<T>, file: Option<Vec<T>>) -> Vec<T> {
    if flag.is_empty() {
        file.unwrap_or_default()
    } else {
        flag
    }
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::InvalidArgument(format!("--{flag} is required")))
}

/// An input path that must exist.
fn existing(path: PathBuf) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory")))
    }
}

fn parse_policy(s: Option<String>) -> Result<RejectPolicy> {
    match s.as_deref() {
        None | Some("error") => Ok(RejectPolicy::Error),
        Some("exclude") => Ok(RejectPolicy::Exclude),
        Some("no-chord") => Ok(RejectPolicy::NoChord),
        Some(other) => Err(Error::InvalidArgument(format!(
            "unknown reject policy {other:?}; expected error, exclude or no-chord"
        ))),
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn warn(msg: &str) {
    eprintln!("warning: {msg}");
}

struct Corpus {
    songs: Vec<(String, Vec<crate::corpus::AnnotatedSegment>)>,
}

fn load_corpus(args: CorpusArgs, file: &RunConfig) -> Result<Corpus> {
    let dir = existing(required(pick(args.corpus, file.corpus.clone()), "corpus")?)?;
    let policy = parse_policy(pick(args.reject, file.reject.clone()))?;
    let skip_bad = args.skip_bad || file.skip_bad.unwrap_or(false);
    let loaded = load_lab_dir(&dir, policy)?;
    for e in &loaded.bad {
        if skip_bad {
            warn(&format!("skipping {e}"));
        }
    }
    let songs = loaded.strict(skip_bad)?;
    if songs.is_empty() {
        return Err(Error::InvalidData(format!("no usable .lab files in {}", dir.display())));
    }
    Ok(Corpus { songs })
}

/// Parse arguments and run. Returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => RunConfig::load(&existing(p.clone())?)?,
        None => RunConfig::default(),
    };
    let seed = pick(cli.seed, file.seed).unwrap_or(0);
    let jobs = pick(cli.jobs, file.jobs).unwrap_or(1).max(1);
    match cli.command {
        Command::TrainLm(a) => train_lm(a, &file, seed),
        Command::FitDuration(a) => fit_duration_cmd(a, &file),
        Command::Decode(a) => decode(a, &file, jobs),
        Command::Eval(a) => eval(a, &file),
        Command::Simulate(a) => simulate(a, &file, seed),
        Command::Sweep(a) => sweep_cmd(a, &file, seed, jobs),
    }
}

fn alpha_choice(alpha: Option<f64>, grid: Vec<f64>) -> Result<AlphaChoice> {
    match (alpha, grid.is_empty()) {
        (Some(_), false) => Err(Error::InvalidArgument("give either --alpha or --alpha-grid, not both".into())),
        (Some(a), true) => Ok(AlphaChoice::Fixed(a)),
        (None, false) => Ok(AlphaChoice::Grid(grid)),
        (None, true) => Ok(AlphaChoice::Grid(DEFAULT_ALPHA_GRID.to_vec())),
    }
}

fn train_lm(a: TrainLmArgs, file: &RunConfig, seed: u64) -> Result<()> {
    let out = required(pick(a.out, file.out.clone()), "out")?;
    let order = pick(a.order, file.order).unwrap_or(2);
    let alpha = alpha_choice(pick(a.alpha, file.alpha), pick_vec(a.alpha_grid, file.alpha_grid.clone()))?;
    let report_path = pick(a.report, file.report.clone()).unwrap_or_else(|| with_suffix(&out, ".report.json"));
    let corpus = load_corpus(a.corpus, file)?;
    let seqs: Vec<Vec<usize>> = corpus
        .songs
        .iter()
        .map(|(_, segs)| change_sequence(&segs.iter().map(|s| s.label).collect::<Vec<_>>()))
        .collect();
    let fit = fit_lm(&seqs, order, NUM_CLASSES, &alpha, derive_seed(seed, "train-lm"))?;
    write_text(&out, &fit.model.to_text())?;
    let report = serde_json::json!({
        "order": order,
        "alpha": fit.model.alpha(),
        "vocab": NUM_CLASSES,
        "songs": seqs.len(),
        "train_perplexity": fit.train_perplexity,
        "validation": fit.validation.iter().map(|(a, p)| serde_json::json!({"alpha": a, "perplexity": p})).collect::<Vec<_>>(),
    });
    write_text(&report_path, &format!("{report:#}\n"))?;
    println!(
        "trained {order}-gram on {} songs: alpha {} train perplexity {:.4} -> {}",
        seqs.len(),
        fit.model.alpha(),
        fit.train_perplexity,
        out.display()
    );
    Ok(())
}

fn fit_duration_cmd(a: FitDurationArgs, file: &RunConfig) -> Result<()> {
    let out = required(pick(a.out, file.out.clone()), "out")?;
    let rate = pick(a.frame_rate, file.frame_rate).unwrap_or(DEFAULT_FRAME_RATE);
    let k_max = pick(a.k_max, file.k_max).unwrap_or(DEFAULT_K_MAX);
    let hist_path = pick(a.histogram, file.histogram.clone()).unwrap_or_else(|| with_suffix(&out, ".hist.csv"));
    let corpus = load_corpus(a.corpus, file)?;
    let frames = corpus
        .songs
        .iter()
        .map(|(id, segs)| sample_frames(segs, rate).map_err(|e| e.in_file(id)))
        .collect::<Result<Vec<_>>>()?;
    let durations = frame_durations(&frames);
    let fit = fit_duration(&durations, k_max)?;
    if fit.clamped || durations.len() < 2 {
        warn(&format!(
            "degenerate duration fit from {} segment(s): K={} p={}",
            durations.len(),
            fit.model.stages(),
            fit.model.p()
        ));
    }
    write_text(&out, &fit.model.to_text())?;
    write_text(&hist_path, &histogram_csv(&durations, &fit.model))?;
    println!(
        "fit K={} p={:.6} (mean {:.3} frames) on {} segments -> {}",
        fit.model.stages(),
        fit.model.p(),
        fit.model.mean(),
        durations.len(),
        out.display()
    );
    Ok(())
}

fn decode(a: DecodeArgs, file: &RunConfig, jobs: usize) -> Result<()> {
    let dir = existing(required(pick(a.posteriors, file.posteriors.clone()), "posteriors")?)?;
    let out = required(pick(a.out, file.out.clone()), "out")?;
    let mode: DecodeMode = required(pick(a.mode, file.mode.clone()), "mode")?.parse()?;
    let temperature = pick(a.temperature, file.temperature).unwrap_or(1.0);
    let lm = match pick(a.lm, file.lm.clone()) {
        Some(p) if matches!(mode, DecodeMode::NGram(_)) => {
            let p = existing(p)?;
            Some(NGramModel::from_text(&read_text(&p)?).map_err(|e| e.in_file(&p))?)
        }
        _ => None,
    };
    let dm = match pick(a.duration, file.duration.clone()) {
        Some(p) if mode != DecodeMode::None => {
            let p = existing(p)?;
            Some(DurationModel::from_text(&read_text(&p)?).map_err(|e| e.in_file(&p))?)
        }
        _ => None,
    };
    let vocab = lm.as_ref().map_or(NUM_CLASSES, NGramModel::vocab_size);
    let decoder = Decoder::from_models(mode, vocab, lm.as_ref(), dm.as_ref())?;
    let files = list_files(&dir, "csv")?;
    if files.is_empty() {
        return Err(Error::InvalidData(format!("no posterior .csv files in {}", dir.display())));
    }
    let results = par_map(&files, jobs, |path| -> Result<(String, String)> {
        let post = crate::acoustic::PosteriorMatrix::from_csv(&read_text(path)?, vocab).map_err(|e| e.in_file(path))?;
        let post = if temperature == 1.0 {
            post
        } else {
            crate::acoustic::apply_temperature(&post, temperature)?
        };
        let (labels, log_prob) = decoder.decode_scored(&post).map_err(|e| e.in_file(path))?;
        let segments = labels.to_segments();
        let name = stem(path);
        write_text(&out.join(format!("{name}.lab")), &write_lab(&segments))?;
        let line = format!("{name}: {} frames, {} segments", labels.len(), segments.len());
        let json = serde_json::json!({
            "song": name,
            "frames": labels.len(),
            "segments": segments.len(),
            "log_prob": log_prob,
        });
        Ok((line, json.to_string()))
    });
    let mut log = format!("mode {mode} temperature {temperature}\n");
    let mut summary = String::new();
    for r in results {
        let (line, json) = r?;
        eprintln!("decoded {line}");
        log.push_str(&line);
        log.push('\n');
        summary.push_str(&json);
        summary.push('\n');
    }
    write_text(&out.join("decode.log"), &log)?;
    write_text(&out.join("summary.jsonl"), &summary)?;
    println!("decoded {} files in mode {mode} -> {}", files.len(), out.display());
    Ok(())
}

fn eval(a: EvalArgs, file: &RunConfig) -> Result<()> {
    let reference = existing(required(pick(a.reference, file.reference.clone()), "reference")?)?;
    let estimates = pick_vec(a.estimate, file.estimate.clone());
    if estimates.is_empty() {
        return Err(Error::InvalidArgument("--estimate is required".into()));
    }
    let policy = parse_policy(pick(a.reject, file.reject.clone()))?;
    let refs = load_lab_dir(&reference, policy)?.strict(false)?;
    if refs.is_empty() {
        return Err(Error::InvalidData(format!("no .lab files in {}", reference.display())));
    }
    let mut systems: Vec<(String, WcsrReport)> = Vec::new();
    for spec in estimates {
        let (name, dir) = match spec.split_once('=') {
            Some((n, d)) => (n.to_string(), PathBuf::from(d)),
            None => {
                let d = PathBuf::from(&spec);
                (d.file_name().map_or(spec.clone(), |n| n.to_string_lossy().into_owned()), d)
            }
        };
        let dir = existing(dir)?;
        let est = load_lab_dir(&dir, policy)?.strict(false)?;
        let shared = refs.iter().filter(|(id, _)| est.iter().any(|(e, _)| e == id)).count();
        if shared == 0 {
            return Err(Error::InvalidData(format!(
                "no estimate in {} matches any reference file name",
                dir.display()
            )));
        }
        let mut reports = Vec::new();
        for (id, r) in &refs {
            let e = est.iter().find(|(e, _)| e == id).ok_or_else(|| {
                Error::InvalidData(format!("missing counterpart {}", dir.join(format!("{id}.lab")).display()))
            })?;
            reports.push(score_song(id, r, &e.1)?);
        }
        for (id, _) in est.iter().filter(|(e, _)| !refs.iter().any(|(r, _)| r == e)) {
            warn(&format!("{id}.lab in {} has no reference", dir.display()));
        }
        systems.push((name, aggregate(&reports)));
    }
    let csv = song_table_csv(&systems);
    match pick(a.out, file.out.clone()) {
        Some(p) => {
            write_text(&p, &csv)?;
            write_text(&with_suffix(&p, ".pooled.csv"), &ablation_table_csv(&systems))?;
            for (name, r) in &systems {
                println!("{name}: WCSR {:.4} over {} songs", r.wcsr(), r.songs.len());
            }
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn simulate(a: SimulateArgs, file: &RunConfig, seed: u64) -> Result<()> {
    let out = required(pick(a.out, file.out.clone()), "out")?;
    let base = GeneratorConfig::benchmark();
    let dm = DurationModel::new(
        pick(a.duration_k, file.duration_k).unwrap_or(base.duration.stages()),
        pick(a.duration_p, file.duration_p).unwrap_or(base.duration.p()),
    )?;
    let config = GeneratorConfig {
        songs: pick(a.songs, file.songs).unwrap_or(base.songs),
        min_segments: pick(a.min_segments, file.min_segments).unwrap_or(base.min_segments),
        max_segments: pick(a.max_segments, file.max_segments).unwrap_or(base.max_segments),
        frame_rate: pick(a.frame_rate, file.frame_rate).unwrap_or(base.frame_rate),
        duration: dm,
        simulator: SimulatorParams {
            confusion_temperature: pick(a.confusion_temperature, file.confusion_temperature)
                .unwrap_or(base.simulator.confusion_temperature),
            noise_scale: pick(a.noise_scale, file.noise_scale).unwrap_or(base.simulator.noise_scale),
            noise_correlation: pick(a.noise_correlation, file.noise_correlation)
                .unwrap_or(base.simulator.noise_correlation),
        },
        favoured: pick(a.favoured, file.favoured).unwrap_or(base.favoured),
    };
    let labels_only = a.labels_only || file.labels_only.unwrap_or(false);
    let lm = match pick(a.lm, file.lm.clone()) {
        Some(p) => {
            let p = existing(p)?;
            NGramModel::from_text(&read_text(&p)?).map_err(|e| e.in_file(&p))?
        }
        None => random_bigram(config.favoured, derive_seed(seed, "generator-lm"))?,
    };
    let songs = generate_corpus(&lm, &config, seed, !labels_only)?;
    write_text(&out.join("generator.lm"), &lm.to_text())?;
    write_text(&out.join("generator.dur"), &config.duration.to_text())?;
    for s in &songs {
        write_text(&out.join("labels").join(format!("{}.lab", s.id)), &write_lab(&s.segments))?;
        if let Some(p) = &s.posteriors {
            write_text(&out.join("posteriors").join(format!("{}.csv", s.id)), &p.to_csv())?;
        }
    }
    let frames: usize = songs.iter().map(|s| s.frames.len()).sum();
    println!("simulated {} songs, {frames} frames -> {}", songs.len(), out.display());
    Ok(())
}

fn sweep_cmd(a: SweepArgs, file: &RunConfig, seed: u64, jobs: usize) -> Result<()> {
    let out = required(pick(a.out, file.out.clone()), "out")?;
    let keep_going = a.keep_going || file.keep_going.unwrap_or(false);
    let mut temperatures = pick_vec(a.temperatures, file.temperatures.clone());
    if temperatures.is_empty() {
        temperatures = vec![1.0];
    }
    let smoothing = pick_vec(a.smoothing, file.smoothing.clone());
    let smoothing = if smoothing.is_empty() {
        vec![SmoothingChoice::None]
    } else {
        smoothing.iter().map(|s| s.parse()).collect::<Result<Vec<_>>>()?
    };
    let modes = pick_vec(a.modes, file.modes.clone());
    let modes = if modes.is_empty() {
        vec![DecodeMode::None, DecodeMode::Dur, DecodeMode::NGram(2)]
    } else {
        modes.iter().map(|s| s.parse()).collect::<Result<Vec<_>>>()?
    };
    let folds = pick(a.folds, file.folds).unwrap_or(4);
    let temporal = TemporalConfig {
        alpha: alpha_choice(pick(a.alpha, file.alpha), pick_vec(a.alpha_grid, file.alpha_grid.clone()))?,
        k_max: pick(a.k_max, file.k_max).unwrap_or(DEFAULT_K_MAX),
        seed: derive_seed(seed, "temporal"),
    };
    let posterior_dir = pick(a.posteriors, file.posteriors.clone()).map(existing).transpose()?;
    let frame_rate = pick(a.frame_rate, file.frame_rate).unwrap_or(DEFAULT_FRAME_RATE);
    let defaults = ToyConfig::default();
    let toy = ToyConfig {
        feature_noise: pick(a.feature_noise, file.feature_noise).unwrap_or(defaults.feature_noise),
        train: TrainConfig {
            epochs: pick(a.epochs, file.epochs).unwrap_or(defaults.train.epochs),
            learning_rate: pick(a.learning_rate, file.learning_rate).unwrap_or(defaults.train.learning_rate),
        },
        stride: pick(a.stride, file.stride).unwrap_or(defaults.stride),
        seed: derive_seed(seed, "toy"),
    };
    let skip_bad = a.corpus.skip_bad || file.skip_bad.unwrap_or(false);
    let corpus = load_corpus(a.corpus, file)?;

    let (songs, source) = match &posterior_dir {
        Some(dir) => {
            let posts = load_posterior_dir(dir, NUM_CLASSES)?.strict(skip_bad)?;
            let mut songs = Vec::new();
            for (id, reference) in corpus.songs {
                match posts.iter().find(|(p, _)| *p == id) {
                    Some((_, p)) => songs.push(Song {
                        id,
                        reference,
                        posteriors: p.clone(),
                    }),
                    None => {
                        return Err(Error::InvalidData(format!(
                            "missing counterpart {}",
                            dir.join(format!("{id}.csv")).display()
                        )))
                    }
                }
            }
            (songs, PosteriorSource::Given)
        }
        None => {
            // Placeholder posteriors only carry the frame grid; the toy route replaces them.
            let songs = corpus
                .songs
                .into_iter()
                .map(|(id, reference)| {
                    let n = sample_frames(&reference, frame_rate)?.len();
                    let mut values = vec![0.0; n * NUM_CLASSES];
                    values.chunks_mut(NUM_CLASSES).for_each(|r| r[NUM_CLASSES - 1] = 1.0);
                    let posteriors = crate::acoustic::PosteriorMatrix::new(frame_rate, NUM_CLASSES, values)?;
                    Ok(Song { id, reference, posteriors })
                })
                .collect::<Result<Vec<_>>>()?;
            (songs, PosteriorSource::Toy(toy))
        }
    };
    let grid = SweepGrid {
        temperatures,
        smoothing,
        modes,
    };
    let (rows, used) = sweep(&songs, &grid, &source, folds, &temporal, keep_going, jobs)?;

    write_text(&out.join("grid.csv"), &sweep_csv(&rows))?;
    let mut summary = String::new();
    for r in &rows {
        let v = serde_json::json!({
            "temperature": r.temperature,
            "smoothing": r.smoothing.kind(),
            "intensity": r.smoothing.intensity(),
            "mode": r.mode.to_string(),
            "wcsr": r.result.as_ref().ok().map(WcsrReport::wcsr),
            "error": r.result.as_ref().err(),
        });
        summary.push_str(&v.to_string());
        summary.push('\n');
    }
    write_text(&out.join("summary.jsonl"), &summary)?;
    if matches!(source, PosteriorSource::Toy(_)) {
        for (smoothing, posts) in &used {
            let tag = smoothing.to_string().replace(':', "-");
            for (song, p) in songs.iter().zip(posts) {
                write_text(&out.join("posteriors").join(&tag).join(format!("{}.csv", song.id)), &p.to_csv())?;
            }
        }
    }
    let failed = rows.iter().filter(|r| r.result.is_err()).count();
    println!(
        "swept {} cells over {} songs ({} failed) -> {}",
        rows.len(),
        songs.len(),
        failed,
        out.join("grid.csv").display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_keys() {
        let c = RunConfig::from_toml("order = 3\nalpha-grid = [0.1, 1.0]\nskip-bad = true\n").unwrap();
        assert_eq!(c.order, Some(3));
        assert_eq!(c.alpha_grid, Some(vec![0.1, 1.0]));
        assert!(RunConfig::from_toml("nonsense = 1\n").is_err());
    }

    #[test]
    fn flags_win_over_file() {
        assert_eq!(pick(Some(2), Some(3)), Some(2));
        assert_eq!(pick(None, Some(3)), Some(3));
        assert_eq!(pick_vec(vec![1], Some(vec![2, 3])), vec![1]);
        assert_eq!(pick_vec(Vec::<i32>::new(), Some(vec![2, 3])), vec![2, 3]);
    }

    #[test]
    fn alpha_flags() {
        assert_eq!(alpha_choice(Some(0.5), vec![]).unwrap(), AlphaChoice::Fixed(0.5));
        assert!(alpha_choice(Some(0.5), vec![0.1]).is_err());
        assert_eq!(alpha_choice(None, vec![]).unwrap(), AlphaChoice::default());
    }

    #[test]
    fn usage_errors_exit_1() {
        assert_eq!(main_with_args(["chordhmm", "no-such-command"]), 1);
        assert_eq!(main_with_args(["chordhmm", "decode", "--mode", "bogus", "--posteriors", "."]), 1);
        assert_eq!(main_with_args(["chordhmm", "--help"]), 0);
    }
}
