//! End-to-end experiment plumbing: fitting temporal models on training
//! songs, decoding in each ablation mode, cross-validated scoring, the toy
//! acoustic route used by sweeps, and corpus directory I/O.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::acoustic::{
    apply_temperature, one_hot, smooth_targets, synth_features, Matrix, PosteriorMatrix, SmoothingSpec, ToyModel,
    TrainConfig,
};
use crate::chordlm::{perplexity, select_alpha, NGramModel, DEFAULT_ALPHA_GRID};
use crate::corpus::{
    change_sequence, parse_lab_with, run_lengths, sample_frames, AnnotatedSegment, FrameSequence, RejectPolicy,
};
use crate::decoder::{decode_argmax, StateSpace};
use crate::durmodel::{fit_duration, DurationModel, DEFAULT_K_MAX};
use crate::error::{Error, Result};
use crate::evalkit::{aggregate, make_folds, score_song, WcsrReport};
use crate::synth::derive_seed;

/// Which temporal model sits on top of the acoustic posteriors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecodeMode {
    /// Frame-wise argmax.
    None,
    /// Duration chain only; every change target equally likely.
    Dur,
    /// Duration chain plus an N-gram over chord changes.
    NGram(usize),
}

impl fmt::Display for DecodeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodeMode::None => f.write_str("none"),
            DecodeMode::Dur => f.write_str("dur"),
            DecodeMode::NGram(n) => write!(f, "{n}-gram"),
        }
    }
}

impl FromStr for DecodeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(DecodeMode::None),
            "dur" => Ok(DecodeMode::Dur),
            _ => s
                .strip_suffix("-gram")
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|&n| n >= 1)
                .map(DecodeMode::NGram)
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("unknown decode mode {s:?}; expected none, dur or <N>-gram"))
                }),
        }
    }
}

/// Pseudo-count for the chord language model: fixed, or chosen on held-out
/// training songs.
#[derive(Debug, Clone, PartialEq)]
pub enum AlphaChoice {
    Fixed(f64),
    Grid(Vec<f64>),
}

impl Default for AlphaChoice {
    fn default() -> Self {
        AlphaChoice::Grid(DEFAULT_ALPHA_GRID.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalConfig {
    pub alpha: AlphaChoice,
    pub k_max: usize,
    pub seed: u64,
}

impl Default for TemporalConfig {
    fn default() -> Self {
        TemporalConfig {
            alpha: AlphaChoice::default(),
            k_max: DEFAULT_K_MAX,
            seed: 0,
        }
    }
}

/// A language model fit plus how its pseudo-count was chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct LmFit {
    pub model: NGramModel,
    /// `(alpha, validation perplexity)` per grid value; empty for a fixed α.
    pub validation: Vec<(f64, f64)>,
    pub train_perplexity: f64,
}

/// Fit an N-gram on change sequences. With a grid, one song fold (a quarter
/// of the songs) is held out to pick α and the final model is refit on all
/// songs with it.
pub fn fit_lm(sequences: &[Vec<usize>], order: usize, vocab: usize, alpha: &AlphaChoice, seed: u64) -> Result<LmFit> {
    if sequences.is_empty() {
        return Err(Error::InvalidData("no chord sequences to train on".into()));
    }
    let (alpha, validation) = match alpha {
        AlphaChoice::Fixed(a) => (*a, Vec::new()),
        AlphaChoice::Grid(grid) => {
            let (train, valid) = if sequences.len() >= 2 {
                let ids: Vec<String> = (0..sequences.len()).map(|i| i.to_string()).collect();
                let folds = make_folds(&ids, sequences.len().min(4), derive_seed(seed, "alpha-fold"))?;
                let pick = |keep: bool| -> Vec<Vec<usize>> {
                    sequences
                        .iter()
                        .zip(&folds)
                        .filter(|(_, &f)| (f == 0) == keep)
                        .map(|(s, _)| s.clone())
                        .collect()
                };
                (pick(false), pick(true))
            } else {
                (sequences.to_vec(), sequences.to_vec())
            };
            let best = select_alpha(&train, &valid, order, vocab, grid)?;
            let base = NGramModel::fit(&train, order, grid[0], vocab)?;
            let scores = grid
                .iter()
                .map(|&a| Ok((a, perplexity(&base.with_alpha(a)?, &valid))))
                .collect::<Result<Vec<_>>>()?;
            (best, scores)
        }
    };
    let model = NGramModel::fit(sequences, order, alpha, vocab)?;
    let train_perplexity = perplexity(&model, sequences);
    Ok(LmFit {
        model,
        validation,
        train_perplexity,
    })
}

/// Segment durations in frames, over all songs.
pub fn frame_durations(songs: &[FrameSequence]) -> Vec<usize> {
    songs.iter().flat_map(|s| run_lengths(&s.labels).into_iter().map(|r| r.1)).collect()
}

/// A ready-to-run decoder for one mode.
#[derive(Debug, Clone)]
pub enum Decoder {
    Argmax,
    Hmm(Box<StateSpace>),
}

impl Decoder {
    /// Decoder for `mode` from explicit models. `dur` ignores `lm`.
    pub fn from_models(mode: DecodeMode, vocab: usize, lm: Option<&NGramModel>, dm: Option<&DurationModel>) -> Result<Self> {
        let need_dm = || dm.ok_or_else(|| Error::InvalidArgument(format!("mode {mode} needs a duration model")));
        match mode {
            DecodeMode::None => Ok(Decoder::Argmax),
            DecodeMode::Dur => {
                let flat = NGramModel::empty(1, 1.0, vocab)?;
                Ok(Decoder::Hmm(Box::new(StateSpace::build(&flat, need_dm()?)?)))
            }
            DecodeMode::NGram(n) => {
                let lm = lm.ok_or_else(|| Error::InvalidArgument(format!("mode {mode} needs a language model")))?;
                if lm.order() != n {
                    return Err(Error::InvalidArgument(format!(
                        "mode {mode} given a language model of order {}",
                        lm.order()
                    )));
                }
                if lm.vocab_size() != vocab {
                    return Err(Error::VocabularyMismatch {
                        expected: vocab,
                        actual: lm.vocab_size(),
                    });
                }
                Ok(Decoder::Hmm(Box::new(StateSpace::build(lm, need_dm()?)?)))
            }
        }
    }

    /// Fit whatever `mode` needs on reference frame labels and build it.
    pub fn fit(mode: DecodeMode, train: &[FrameSequence], vocab: usize, config: &TemporalConfig) -> Result<Self> {
        if mode == DecodeMode::None {
            return Ok(Decoder::Argmax);
        }
        let dm = fit_duration(&frame_durations(train), config.k_max)?.model;
        let lm = match mode {
            DecodeMode::NGram(n) => {
                let seqs: Vec<Vec<usize>> = train.iter().map(|s| change_sequence(&s.labels)).collect();
                Some(fit_lm(&seqs, n, vocab, &config.alpha, config.seed)?.model)
            }
            _ => None,
        };
        Decoder::from_models(mode, vocab, lm.as_ref(), Some(&dm))
    }

    pub fn decode(&self, posteriors: &PosteriorMatrix) -> Result<FrameSequence> {
        self.decode_scored(posteriors).map(|d| d.0)
    }

    /// Labels plus the best path's log-probability (none for argmax).
    pub fn decode_scored(&self, posteriors: &PosteriorMatrix) -> Result<(FrameSequence, Option<f64>)> {
        match self {
            Decoder::Argmax => Ok((decode_argmax(posteriors)?, None)),
            Decoder::Hmm(space) => {
                let r = space.viterbi(posteriors)?;
                Ok((r.labels, Some(r.log_prob)))
            }
        }
    }
}

/// One evaluation song: reference annotation and acoustic posteriors.
#[derive(Debug, Clone, PartialEq)]
pub struct Song {
    pub id: String,
    pub reference: Vec<AnnotatedSegment>,
    pub posteriors: PosteriorMatrix,
}

impl Song {
    /// Reference labels at the posterior frame rate and length.
    pub fn reference_frames(&self) -> Result<FrameSequence> {
        let mut f = sample_frames(&self.reference, self.posteriors.frame_rate())?;
        f.labels.resize(self.posteriors.num_frames(), crate::corpus::ChordSymbol::NO_CHORD);
        Ok(f)
    }
}

/// Apply `f` to every item on `jobs` worker threads. Output order matches
/// input order whatever the scheduling.
pub fn par_map<T: Sync, U: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> U + Sync) -> Vec<U> {
    let jobs = jobs.max(1).min(items.len());
    if jobs <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let mut pieces: Vec<(usize, U)> = std::thread::scope(|scope| {
        let workers: Vec<_> = (0..jobs)
            .map(|_| {
                scope.spawn(|| {
                    let mut out = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= items.len() {
                            break out;
                        }
                        out.push((i, f(&items[i])));
                    }
                })
            })
            .collect();
        workers
            .into_iter()
            .flat_map(|w| w.join().expect("worker panicked"))
            .collect()
    });
    pieces.sort_by_key(|p| p.0);
    pieces.into_iter().map(|p| p.1).collect()
}

/// Decode and score every song with one decoder.
pub fn score_songs(decoder: &Decoder, songs: &[&Song], temperature: f64, jobs: usize) -> Result<Vec<WcsrReport>> {
    par_map(songs, jobs, |song| {
        let post = if temperature == 1.0 {
            decoder.decode(&song.posteriors)
        } else {
            decoder.decode(&apply_temperature(&song.posteriors, temperature)?)
        }
        .map_err(|e| e.in_file(&song.id))?;
        score_song(&song.id, &song.reference, &post.to_segments())
    })
    .into_iter()
    .collect()
}

/// Decoders for each mode, fit on every fold's training songs.
pub fn fit_fold_decoders(
    songs: &[Song],
    folds: &[usize],
    n_folds: usize,
    modes: &[DecodeMode],
    config: &TemporalConfig,
) -> Result<Vec<Vec<Decoder>>> {
    let frames = songs.iter().map(Song::reference_frames).collect::<Result<Vec<_>>>()?;
    let vocab = songs.first().map_or(crate::corpus::NUM_CLASSES, |s| s.posteriors.num_classes());
    (0..n_folds)
        .map(|f| {
            let train: Vec<FrameSequence> = frames
                .iter()
                .zip(folds)
                .filter(|(_, &g)| g != f)
                .map(|(s, _)| s.clone())
                .collect();
            let cfg = TemporalConfig {
                seed: derive_seed(config.seed, &format!("fold{f}")),
                ..config.clone()
            };
            modes.iter().map(|&m| Decoder::fit(m, &train, vocab, &cfg)).collect()
        })
        .collect()
}

/// Pooled score of one mode: each song decoded by its fold's decoder, per-song
/// entries in input order.
pub fn score_with_folds(
    songs: &[Song],
    folds: &[usize],
    decoders: &[&Decoder],
    temperature: f64,
    jobs: usize,
) -> Result<WcsrReport> {
    let items: Vec<(usize, &Song)> = songs.iter().enumerate().collect();
    let reports = par_map(&items, jobs, |&(i, song)| {
        score_songs(decoders[folds[i]], &[song], temperature, 1).map(|mut r| r.remove(0))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(&reports))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation {
    pub folds: Vec<usize>,
    pub results: Vec<(DecodeMode, WcsrReport)>,
}

/// Song-level `n_folds` cross-validation of every mode. Temporal models are
/// fit on the reference labels of the training folds.
pub fn cross_validate(
    songs: &[Song],
    modes: &[DecodeMode],
    n_folds: usize,
    config: &TemporalConfig,
    temperature: f64,
    jobs: usize,
) -> Result<CrossValidation> {
    let ids: Vec<&str> = songs.iter().map(|s| s.id.as_str()).collect();
    let folds = make_folds(&ids, n_folds, derive_seed(config.seed, "folds"))?;
    let decoders = fit_fold_decoders(songs, &folds, n_folds, modes, config)?;
    let results = modes
        .iter()
        .enumerate()
        .map(|(m, &mode)| {
            let per_fold: Vec<&Decoder> = decoders.iter().map(|d| &d[m]).collect();
            Ok((mode, score_with_folds(songs, &folds, &per_fold, temperature, jobs)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CrossValidation { folds, results })
}

/// Training-target treatment for the toy acoustic model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothingChoice {
    None,
    Uniform(f64),
    Unigram(f64),
    Smear(usize),
}

impl SmoothingChoice {
    pub fn kind(&self) -> &'static str {
        match self {
            SmoothingChoice::None => "none",
            SmoothingChoice::Uniform(_) => "uniform",
            SmoothingChoice::Unigram(_) => "unigram",
            SmoothingChoice::Smear(_) => "smear",
        }
    }

    /// β for uniform/unigram, window width for smear, empty for none.
    pub fn intensity(&self) -> String {
        match self {
            SmoothingChoice::None => String::new(),
            SmoothingChoice::Uniform(b) | SmoothingChoice::Unigram(b) => b.to_string(),
            SmoothingChoice::Smear(w) => w.to_string(),
        }
    }

    /// The transform, given the class marginal of the training frames.
    pub fn spec(&self, marginal: &[f64]) -> Option<SmoothingSpec> {
        match *self {
            SmoothingChoice::None => None,
            SmoothingChoice::Uniform(beta) => Some(SmoothingSpec::Uniform { beta }),
            SmoothingChoice::Unigram(beta) => Some(SmoothingSpec::Unigram {
                beta,
                marginal: marginal.to_vec(),
            }),
            SmoothingChoice::Smear(width) => Some(SmoothingSpec::Smear { width }),
        }
    }
}

impl fmt::Display for SmoothingChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SmoothingChoice::None => f.write_str("none"),
            _ => write!(f, "{}:{}", self.kind(), self.intensity()),
        }
    }
}

impl FromStr for SmoothingChoice {
    type Err = Error;

    /// `none`, `uniform:<beta>`, `unigram:<beta>` or `smear:<width>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad smoothing {s:?}; expected none, uniform:B, unigram:B or smear:W"));
        if s == "none" {
            return Ok(SmoothingChoice::None);
        }
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        let choice = match kind {
            "uniform" => SmoothingChoice::Uniform(value.parse().map_err(|_| bad())?),
            "unigram" => SmoothingChoice::Unigram(value.parse().map_err(|_| bad())?),
            "smear" => SmoothingChoice::Smear(value.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        // validate ranges early
        let probe = vec![1.0 / crate::corpus::NUM_CLASSES as f64; crate::corpus::NUM_CLASSES];
        if let Some(spec) = choice.spec(&probe) {
            smooth_targets(&one_hot(&[0], crate::corpus::NUM_CLASSES), &spec)?;
        }
        Ok(choice)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    /// Standard deviation of the feature noise.
    pub feature_noise: f64,
    pub train: TrainConfig,
    /// Use every `stride`-th training frame.
    pub stride: usize,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            feature_noise: 0.3,
            train: TrainConfig::default(),
            stride: 1,
            seed: 0,
        }
    }
}

/// Cross-validated toy posteriors: each song is predicted by a classifier
/// trained on the other folds, with targets smoothed as `smoothing` says.
pub fn toy_posteriors(
    references: &[(String, FrameSequence)],
    folds: &[usize],
    n_folds: usize,
    smoothing: SmoothingChoice,
    config: &ToyConfig,
) -> Result<Vec<PosteriorMatrix>> {
    let classes = crate::corpus::NUM_CLASSES;
    let stride = config.stride.max(1);
    let features: Vec<Matrix> = references
        .iter()
        .map(|(id, f)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &format!("{id}/features")));
            synth_features(&f.labels, config.feature_noise, &mut rng)
        })
        .collect();
    let mut out: Vec<Option<PosteriorMatrix>> = vec![None; references.len()];
    for fold in 0..n_folds {
        let train: Vec<usize> = (0..references.len()).filter(|&i| folds[i] != fold).collect();
        let mut marginal = vec![0.0; classes];
        let mut total = 0.0f64;
        for &i in &train {
            for l in &references[i].1.labels {
                marginal[l.index()] += 1.0;
                total += 1.0;
            }
        }
        marginal.iter_mut().for_each(|m| *m /= total.max(1.0));
        let spec = smoothing.spec(&marginal);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &i in &train {
            let labels: Vec<usize> = references[i].1.labels.iter().map(|l| l.index()).collect();
            let hot = one_hot(&labels, classes);
            let targets = match &spec {
                Some(s) => smooth_targets(&hot, s)?,
                None => hot,
            };
            let keep: Vec<usize> = (0..labels.len()).step_by(stride).collect();
            xs.push(features[i].select_rows(&keep));
            ys.push(targets.select_rows(&keep));
        }
        let (model, _) = ToyModel::train(&Matrix::vstack(&xs)?, &Matrix::vstack(&ys)?, config.train)?;
        for i in (0..references.len()).filter(|&i| folds[i] == fold) {
            out[i] = Some(model.predict_posteriors(&features[i], references[i].1.frame_rate)?);
        }
    }
    Ok(out.into_iter().map(|p| p.expect("every song is in some fold")).collect())
}

/// Where sweep posteriors come from.
#[derive(Debug, Clone, PartialEq)]
pub enum PosteriorSource {
    /// Use the songs' own posteriors; only `none` smoothing applies.
    Given,
    /// Train the toy classifier on synthetic features per smoothing setting.
    Toy(ToyConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub temperatures: Vec<f64>,
    pub smoothing: Vec<SmoothingChoice>,
    pub modes: Vec<DecodeMode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub temperature: f64,
    pub smoothing: SmoothingChoice,
    pub mode: DecodeMode,
    /// The pooled score, or why the cell failed.
    pub result: std::result::Result<WcsrReport, String>,
}

/// Header of [`sweep_csv`].
pub const SWEEP_HEADER: &str = "temperature,smoothing,intensity,mode,wcsr,t_c,t_a,status";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let (score, status) = match &r.result {
            Ok(rep) => (format!("{:.6},{:.6},{:.6}", rep.wcsr(), rep.t_c, rep.t_a), "ok".to_string()),
            Err(e) => (",,".to_string(), format!("\"error: {}\"", e.replace('"', "'"))),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.temperature,
            r.smoothing.kind(),
            r.smoothing.intensity(),
            r.mode,
            score,
            status
        ));
    }
    out
}

/// Cross-validated grid over temperature x smoothing x decode mode, rows in
/// smoothing, temperature, mode order. A failing cell aborts the sweep unless
/// `keep_going`, in which case it is recorded and the sweep continues. The
/// posteriors used for each smoothing setting are returned alongside.
#[allow(clippy::type_complexity)]
pub fn sweep(
    songs: &[Song],
    grid: &SweepGrid,
    source: &PosteriorSource,
    n_folds: usize,
    config: &TemporalConfig,
    keep_going: bool,
    jobs: usize,
) -> Result<(Vec<SweepRow>, Vec<(SmoothingChoice, Vec<PosteriorMatrix>)>)> {
    if grid.temperatures.is_empty() || grid.smoothing.is_empty() || grid.modes.is_empty() {
        return Err(Error::InvalidArgument("every sweep axis needs at least one value".into()));
    }
    if let Some(t) = grid.temperatures.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidArgument(format!("temperature must be positive, got {t}")));
    }
    if *source == PosteriorSource::Given && grid.smoothing.iter().any(|s| *s != SmoothingChoice::None) {
        return Err(Error::InvalidArgument(
            "target smoothing needs the toy acoustic model; given posteriors only allow `none`".into(),
        ));
    }
    let ids: Vec<&str> = songs.iter().map(|s| s.id.as_str()).collect();
    let folds = make_folds(&ids, n_folds, derive_seed(config.seed, "folds"))?;
    let decoders = fit_fold_decoders(songs, &folds, n_folds, &grid.modes, config)?;
    let references = songs
        .iter()
        .map(|s| Ok((s.id.clone(), s.reference_frames()?)))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut used = Vec::new();
    for &smoothing in &grid.smoothing {
        let posteriors = match source {
            PosteriorSource::Given => Ok(songs.iter().map(|s| s.posteriors.clone()).collect()),
            PosteriorSource::Toy(cfg) => toy_posteriors(&references, &folds, n_folds, smoothing, cfg),
        };
        let posteriors: Vec<PosteriorMatrix> = match posteriors {
            Ok(p) => p,
            Err(e) if keep_going => {
                for &temperature in &grid.temperatures {
                    for &mode in &grid.modes {
                        rows.push(SweepRow {
                            temperature,
                            smoothing,
                            mode,
                            result: Err(e.to_string()),
                        });
                    }
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        let cell_songs: Vec<Song> = songs
            .iter()
            .zip(&posteriors)
            .map(|(s, p)| Song {
                posteriors: p.clone(),
                ..s.clone()
            })
            .collect();
        for &temperature in &grid.temperatures {
            for (m, &mode) in grid.modes.iter().enumerate() {
                let per_fold: Vec<&Decoder> = decoders.iter().map(|d| &d[m]).collect();
                let result = score_with_folds(&cell_songs, &folds, &per_fold, temperature, jobs);
                let result = match result {
                    Ok(r) => Ok(r),
                    Err(e) if keep_going => Err(e.to_string()),
                    Err(e) => return Err(e),
                };
                rows.push(SweepRow {
                    temperature,
                    smoothing,
                    mode,
                    result,
                });
            }
        }
        used.push((smoothing, posteriors));
    }
    Ok((rows, used))
}

/// Files in `dir` with extension `ext`, sorted by name.
pub fn list_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|x| x == ext) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// File name without extension.
pub fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Loaded items keyed by file stem, plus the files that failed.
#[derive(Debug, Default)]
pub struct Loaded<T> {
    pub items: Vec<(String, T)>,
    pub bad: Vec<Error>,
}

impl<T> Loaded<T> {
    /// Fail listing every bad file unless `skip_bad`.
    pub fn strict(self, skip_bad: bool) -> Result<Vec<(String, T)>> {
        if self.bad.is_empty() || skip_bad {
            return Ok(self.items);
        }
        if self.bad.len() == 1 {
            return Err(self.bad.into_iter().next().expect("one error"));
        }
        let list: Vec<String> = self.bad.iter().map(|e| format!("  {e}")).collect();
        Err(Error::InvalidData(format!(
            "{} files could not be read (use --skip-bad to ignore them):\n{}",
            self.bad.len(),
            list.join("\n")
        )))
    }
}

fn load_dir<T>(dir: &Path, ext: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Loaded<T>> {
    let mut out = Loaded {
        items: Vec::new(),
        bad: Vec::new(),
    };
    for path in list_files(dir, ext)? {
        match read_text(&path).and_then(|t| parse(&t)).map_err(|e| e.in_file(&path)) {
            Ok(v) => out.items.push((stem(&path), v)),
            Err(e) => out.bad.push(e),
        }
    }
    Ok(out)
}

/// Every `.lab` file in `dir`.
pub fn load_lab_dir(dir: &Path, policy: RejectPolicy) -> Result<Loaded<Vec<AnnotatedSegment>>> {
    load_dir(dir, "lab", |t| parse_lab_with(t, policy))
}

/// Every posterior `.csv` file in `dir`.
pub fn load_posterior_dir(dir: &Path, num_classes: usize) -> Result<Loaded<PosteriorMatrix>> {
    load_dir(dir, "csv", |t| PosteriorMatrix::from_csv(t, num_classes))
}
