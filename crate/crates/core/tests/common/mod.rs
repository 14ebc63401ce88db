#![allow(dead_code)]

//! Shared test helpers: an exhaustive decoding oracle and random instances.

use chordhmm::acoustic::PosteriorMatrix;
use chordhmm::chordlm::{NGramModel, Token};
use chordhmm::durmodel::DurationModel;
use rand::Rng;

/// Log-probability of one frame labelling under the chord/duration model,
/// computed segment by segment with no reference to the flattened space.
///
/// Every stage path through the duration chain that covers `d` frames has
/// probability `p^(K-1) (1-p)^(d-K)`, times `p` for leaving the last stage.
/// Non-final segments must leave stage K; the final one may stop anywhere.
pub fn path_score(labels: &[usize], post: &PosteriorMatrix, lm: &NGramModel, dm: &DurationModel) -> f64 {
    let (k, p) = (dm.stages(), dm.p());
    let mut score: f64 = labels.iter().enumerate().map(|(t, &y)| post.row(t)[y].ln()).sum();
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for &y in labels {
        match runs.last_mut() {
            Some((c, d)) if *c == y => *d += 1,
            _ => runs.push((y, 1)),
        }
    }
    let n = lm.order();
    let vocab = lm.vocab_size();
    for (i, &(c, d)) in runs.iter().enumerate() {
        // chord term
        let chord_p = if n == 1 {
            let uni: Vec<f64> = (0..vocab).map(|y| lm.prob(&[], y)).collect();
            if i == 0 {
                uni[c]
            } else {
                let prev = runs[i - 1].0;
                let rest: f64 = (0..vocab).filter(|&y| y != prev).map(|y| uni[y]).sum();
                uni[c] / rest
            }
        } else {
            let mut hist: Vec<Token> = vec![Token::Start; n - 1];
            hist.extend(runs[..i].iter().map(|r| Token::Sym(r.0)));
            let hist = hist[hist.len() - (n - 1)..].to_vec();
            lm.prob(&hist, c)
        };
        score += chord_p.ln();
        // duration term
        let last = i + 1 == runs.len();
        if !last {
            if d < k {
                return f64::NEG_INFINITY;
            }
            score += (k - 1) as f64 * p.ln() + (d - k) as f64 * (1.0 - p).ln() + p.ln();
        } else {
            let best = (1..=k.min(d))
                .map(|j| (j - 1) as f64 * p.ln() + (d - j) as f64 * (1.0 - p).ln())
                .fold(f64::NEG_INFINITY, f64::max);
            score += best;
        }
    }
    score
}

/// Best score over all `vocab^T` labellings, with the arg max.
pub fn brute_force(post: &PosteriorMatrix, lm: &NGramModel, dm: &DurationModel) -> (f64, Vec<usize>) {
    let t = post.num_frames();
    let v = lm.vocab_size();
    let mut labels = vec![0usize; t];
    let mut best = (f64::NEG_INFINITY, labels.clone());
    loop {
        let s = path_score(&labels, post, lm, dm);
        if s > best.0 {
            best = (s, labels.clone());
        }
        // odometer increment
        let mut i = 0;
        while i < t {
            labels[i] += 1;
            if labels[i] < v {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
        if i == t {
            return best;
        }
    }
}

/// Random strictly positive posterior rows, optionally with some zeros.
pub fn random_posteriors<R: Rng>(rng: &mut R, frames: usize, vocab: usize, zeros: bool) -> PosteriorMatrix {
    let rows: Vec<Vec<f64>> = (0..frames)
        .map(|_| {
            let mut r: Vec<f64> = (0..vocab).map(|_| rng.random_range(0.01..1.0)).collect();
            if zeros {
                for v in r.iter_mut() {
                    if rng.random_bool(0.25) {
                        *v = 0.0;
                    }
                }
                if r.iter().all(|v| *v == 0.0) {
                    r[0] = 1.0;
                }
            }
            let s: f64 = r.iter().sum();
            r.into_iter().map(|v| v / s).collect()
        })
        .collect();
    PosteriorMatrix::from_rows(10.0, &rows).unwrap()
}

/// An N-gram fit on a few random change sequences.
pub fn random_lm<R: Rng>(rng: &mut R, order: usize, vocab: usize) -> NGramModel {
    let seqs: Vec<Vec<usize>> = (0..rng.random_range(1..5))
        .map(|_| {
            let mut s = vec![rng.random_range(0..vocab)];
            for _ in 0..rng.random_range(0..8) {
                let prev = *s.last().unwrap();
                let next = (prev + rng.random_range(1..vocab)) % vocab;
                s.push(next);
            }
            s
        })
        .collect();
    let alpha = [0.01, 0.1, 0.5, 1.0][rng.random_range(0..4)];
    NGramModel::fit(&seqs, order, alpha, vocab).unwrap()
}

#[derive(Debug)]
pub struct OracleCase {
    pub post: PosteriorMatrix,
    pub lm: NGramModel,
    pub dm: DurationModel,
}

/// One random instance within |Y| <= 4, T <= 8, N <= 3, K <= 2.
pub fn random_case<R: Rng>(rng: &mut R) -> OracleCase {
    let vocab = rng.random_range(2..=4);
    let frames = rng.random_range(1..=8);
    let order = rng.random_range(1..=3);
    let stages = rng.random_range(1..=2);
    let p = rng.random_range(0.05..0.95);
    let zeros = rng.random_bool(0.2);
    OracleCase {
        post: random_posteriors(rng, frames, vocab, zeros),
        lm: random_lm(rng, order, vocab),
        dm: DurationModel::new(stages, p).unwrap(),
    }
}
