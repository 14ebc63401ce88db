//! Negative binomial chord-duration model.
//!
//! A chord lasting `d` frames has probability
//! `C(k + K - 1, K - 1) p^K (1 - p)^k` with `k = d - K`: the dwell time of a
//! chain of `K` stages, each of which loops with probability `1 - p` and
//! advances with probability `p`. Durations shorter than `K` are impossible.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};

/// Largest stage count tried when fitting.
pub const DEFAULT_K_MAX: usize = 16;

/// Bounds `p` is clamped to so that fitted chains stay valid.
pub const P_MIN: f64 = 1e-6;
pub const P_MAX: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DurationModel {
    stages: usize,
    p: f64,
}

/// Parameters of the left-to-right stage chain realising a [`DurationModel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageChain {
    pub stages: usize,
    /// Self-loop probability of every stage, `1 - p`.
    pub stay: f64,
    /// Probability of moving to the next stage (or, from the last stage, out
    /// of the chord), `p`.
    pub advance: f64,
}

impl DurationModel {
    pub fn new(stages: usize, p: f64) -> Result<Self> {
        if stages < 1 {
            return Err(Error::InvalidArgument("duration model needs K >= 1".into()));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidArgument(format!("p must lie in (0, 1), got {p}")));
        }
        Ok(DurationModel { stages, p })
    }

    /// `K`, the number of stages and the minimum duration in frames.
    pub fn stages(&self) -> usize {
        self.stages
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Expected duration `K / p` in frames.
    pub fn mean(&self) -> f64 {
        self.stages as f64 / self.p
    }

    /// Natural-log probability of a duration of `d` frames.
    pub fn ln_pmf(&self, d: usize) -> f64 {
        if d < self.stages {
            return f64::NEG_INFINITY;
        }
        let k = (d - self.stages) as f64;
        let ln_binom: f64 = (1..self.stages).map(|i| ((k + i as f64) / i as f64).ln()).sum();
        ln_binom + self.stages as f64 * self.p.ln() + k * (-self.p).ln_1p()
    }

    pub fn pmf(&self, d: usize) -> f64 {
        self.ln_pmf(d).exp()
    }

    pub fn log_likelihood(&self, durations: &[usize]) -> f64 {
        durations.iter().map(|&d| self.ln_pmf(d)).sum()
    }

    pub fn stage_chain(&self) -> StageChain {
        StageChain {
            stages: self.stages,
            stay: 1.0 - self.p,
            advance: self.p,
        }
    }

    /// Draw a duration by running the stage chain.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let mut d = 0;
        for _ in 0..self.stages {
            d += 1;
            while rng.random::<f64>() >= self.p {
                d += 1;
            }
        }
        d
    }

    /// Two-line text form: `K=<int>` then `p=<decimal>`.
    pub fn to_text(&self) -> String {
        format!("K={}\np={}\n", self.stages, self.p)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut k = None;
        let mut p = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some(("K", v)) => {
                    k = Some(v.trim().parse::<usize>().map_err(|_| Error::parse(i + 1, "bad K"))?)
                }
                Some(("p", v)) => {
                    p = Some(v.trim().parse::<f64>().map_err(|_| Error::parse(i + 1, "bad p"))?)
                }
                _ => return Err(Error::parse(i + 1, format!("unexpected line {line:?}"))),
            }
        }
        match (k, p) {
            (Some(k), Some(p)) => DurationModel::new(k, p),
            _ => Err(Error::parse(0, "duration model needs both K and p")),
        }
    }
}

/// Result of maximum-likelihood fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DurationFit {
    pub model: DurationModel,
    pub log_likelihood: f64,
    /// `p` hit one of its clamp bounds, which happens on degenerate data.
    pub clamped: bool,
}

/// Maximum-likelihood fit of `(K, p)`.
///
/// For fixed `K` the MLE is `p = K / mean(d)`; `K` is searched over
/// `1..=min(k_max, min(d))` and the best total log-likelihood wins (ties go to
/// the smaller `K`).
pub fn fit_duration(durations: &[usize], k_max: usize) -> Result<DurationFit> {
    if durations.is_empty() {
        return Err(Error::InvalidData("no durations to fit".into()));
    }
    if durations.contains(&0) {
        return Err(Error::InvalidData("durations must be >= 1 frame".into()));
    }
    if k_max < 1 {
        return Err(Error::InvalidArgument("k_max must be >= 1".into()));
    }
    let mean = durations.iter().sum::<usize>() as f64 / durations.len() as f64;
    let min_d = *durations.iter().min().expect("non-empty");
    let mut best: Option<DurationFit> = None;
    for k in 1..=k_max.min(min_d) {
        let raw = k as f64 / mean;
        let p = raw.clamp(P_MIN, P_MAX);
        let model = DurationModel { stages: k, p };
        let ll = model.log_likelihood(durations);
        if best.is_none_or(|b| ll > b.log_likelihood) {
            best = Some(DurationFit {
                model,
                log_likelihood: ll,
                clamped: p != raw,
            });
        }
    }
    best.ok_or_else(|| Error::Numerical("no feasible stage count".into()))
}

/// Counts of each duration `1..=max`, index 0 holding duration 1.
pub fn duration_histogram(durations: &[usize]) -> Vec<u64> {
    let max = durations.iter().copied().max().unwrap_or(0);
    let mut hist = vec![0u64; max];
    for &d in durations {
        if d >= 1 {
            hist[d - 1] += 1;
        }
    }
    hist
}

/// Histogram CSV with the model's pmf alongside, one row per duration
/// `1..=max`.
pub fn histogram_csv(durations: &[usize], model: &DurationModel) -> String {
    let hist = duration_histogram(durations);
    let n = durations.len().max(1) as f64;
    let mut out = String::from("duration,count,frequency,pmf\n");
    for (i, c) in hist.iter().enumerate() {
        let d = i + 1;
        let _ = writeln!(out, "{d},{c},{:.9},{:.9}", *c as f64 / n, model.pmf(d));
    }
    out
}
