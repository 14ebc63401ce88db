//! N-gram chord language model over change sequences with Lidstone smoothing.
//!
//! Sequences are compressed chord sequences, so a chord never follows itself.
//! Each training sequence is left-padded with `N - 1` [`Token::Start`]
//! symbols; the all-start history then carries the distribution of first
//! chords. The successor support of a history ending in a real chord excludes
//! that chord, giving `M = |Y| - 1` legal successors; the all-start history
//! allows all `|Y|` chords.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};

/// Default pseudo-count grid used for validation-set selection.
pub const DEFAULT_ALPHA_GRID: [f64; 5] = [0.001, 0.01, 0.1, 0.5, 1.0];

/// A history entry: a chord index, or padding before the first chord.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    Start,
    Sym(usize),
}

impl Token {
    pub fn sym(self) -> Option<usize> {
        match self {
            Token::Sym(s) => Some(s),
            Token::Start => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct SuccessorCounts {
    total: u64,
    next: BTreeMap<usize, u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    alpha: f64,
    vocab_size: usize,
    counts: BTreeMap<Vec<Token>, SuccessorCounts>,
}

fn check_params(order: usize, alpha: f64, vocab_size: usize) -> Result<()> {
    if order < 1 {
        return Err(Error::InvalidArgument("n-gram order must be >= 1".into()));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "pseudo-count must be finite and >= 0, got {alpha}"
        )));
    }
    if vocab_size < 2 {
        return Err(Error::InvalidArgument("vocabulary needs at least 2 symbols".into()));
    }
    Ok(())
}

impl NGramModel {
    /// A model with no counts; every query returns the uniform distribution
    /// over legal successors (when `alpha > 0`).
    pub fn empty(order: usize, alpha: f64, vocab_size: usize) -> Result<Self> {
        check_params(order, alpha, vocab_size)?;
        Ok(NGramModel {
            order,
            alpha,
            vocab_size,
            counts: BTreeMap::new(),
        })
    }

    /// Count n-grams over compressed chord sequences.
    pub fn fit(sequences: &[Vec<usize>], order: usize, alpha: f64, vocab_size: usize) -> Result<Self> {
        let mut model = Self::empty(order, alpha, vocab_size)?;
        for (i, seq) in sequences.iter().enumerate() {
            if let Some(&s) = seq.iter().find(|&&s| s >= vocab_size) {
                return Err(Error::InvalidData(format!(
                    "sequence {i}: symbol {s} outside vocabulary of {vocab_size}"
                )));
            }
            if seq.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidData(format!(
                    "sequence {i} has adjacent duplicates; compress it first"
                )));
            }
            for t in 0..seq.len() {
                let h = model.history_at(seq, t);
                model.add(h, seq[t], 1);
            }
        }
        Ok(model)
    }

    fn add(&mut self, history: Vec<Token>, next: usize, count: u64) {
        let entry = self.counts.entry(history).or_default();
        entry.total += count;
        *entry.next.entry(next).or_default() += count;
    }

    /// Add `count` occurrences of `history -> next`. Used to build models
    /// from explicit count tables.
    pub fn add_count(&mut self, history: &[Token], next: usize, count: u64) -> Result<()> {
        self.check_history(history)?;
        if next >= self.vocab_size {
            return Err(Error::InvalidData(format!("successor {next} outside vocabulary")));
        }
        if history.last().and_then(|t| t.sym()) == Some(next) {
            return Err(Error::InvalidData(format!(
                "self-transition {next} -> {next} is not a chord change"
            )));
        }
        if count > 0 {
            self.add(history.to_vec(), next, count);
        }
        Ok(())
    }

    fn check_history(&self, history: &[Token]) -> Result<()> {
        if history.len() != self.order - 1 {
            return Err(Error::InvalidData(format!(
                "history length {} does not match order {}",
                history.len(),
                self.order
            )));
        }
        let mut seen_sym = false;
        for (i, t) in history.iter().enumerate() {
            match t {
                Token::Start if seen_sym => {
                    return Err(Error::InvalidData("start padding after a chord".into()))
                }
                Token::Start => {}
                Token::Sym(s) if *s >= self.vocab_size => {
                    return Err(Error::InvalidData(format!("history symbol {s} outside vocabulary")))
                }
                Token::Sym(s) => {
                    if i > 0 && history[i - 1] == Token::Sym(*s) {
                        return Err(Error::InvalidData("history repeats a chord".into()));
                    }
                    seen_sym = true;
                }
            }
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// The same counts with a different pseudo-count.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        check_params(self.order, alpha, self.vocab_size)?;
        Ok(NGramModel {
            alpha,
            ..self.clone()
        })
    }

    /// Padded history (oldest first) preceding position `t` of `seq`.
    pub fn history_at(&self, seq: &[usize], t: usize) -> Vec<Token> {
        let n = self.order - 1;
        let mut h = Vec::with_capacity(n);
        for back in (1..=n).rev() {
            h.push(if t >= back {
                Token::Sym(seq[t - back])
            } else {
                Token::Start
            });
        }
        h
    }

    /// Number of legal successors after `history`.
    pub fn support_size(&self, history: &[Token]) -> usize {
        match history.last() {
            Some(Token::Sym(_)) => self.vocab_size - 1,
            _ => self.vocab_size,
        }
    }

    /// Raw count of `history -> next`.
    pub fn count(&self, history: &[Token], next: usize) -> u64 {
        self.counts
            .get(history)
            .and_then(|c| c.next.get(&next))
            .copied()
            .unwrap_or(0)
    }

    /// Total count of events observed after `history`.
    pub fn history_total(&self, history: &[Token]) -> u64 {
        self.counts.get(history).map_or(0, |c| c.total)
    }

    /// Lidstone estimate `(c(h, s) + alpha) / (c(h) + alpha * M)`.
    ///
    /// A successor equal to the history's last chord has probability 0. An
    /// unseen history with `alpha = 0` falls back to uniform over the support.
    pub fn prob(&self, history: &[Token], next: usize) -> f64 {
        assert_eq!(history.len(), self.order - 1, "history length must be order - 1");
        if next >= self.vocab_size || history.last().and_then(|t| t.sym()) == Some(next) {
            return 0.0;
        }
        let m = self.support_size(history) as f64;
        let (c, total) = match self.counts.get(history) {
            Some(sc) => (sc.next.get(&next).copied().unwrap_or(0), sc.total),
            None => (0, 0),
        };
        if total == 0 && self.alpha == 0.0 {
            return 1.0 / m;
        }
        (c as f64 + self.alpha) / (total as f64 + self.alpha * m)
    }

    /// Probabilities of every vocabulary symbol after `history`.
    pub fn successor_probs(&self, history: &[Token]) -> Vec<f64> {
        (0..self.vocab_size).map(|s| self.prob(history, s)).collect()
    }

    /// Draw the next chord after `history`.
    pub fn sample_next<R: Rng + ?Sized>(&self, history: &[Token], rng: &mut R) -> usize {
        let probs = self.successor_probs(history);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last_legal = 0;
        for (s, p) in probs.iter().enumerate() {
            if *p > 0.0 {
                last_legal = s;
            }
            acc += p;
            if u < acc {
                return s;
            }
        }
        last_legal
    }

    /// Sum of natural-log probabilities and event count over `sequences`,
    /// including each sequence's first chord.
    pub fn log_likelihood(&self, sequences: &[Vec<usize>]) -> (f64, usize) {
        let mut ll = 0.0;
        let mut n = 0;
        for seq in sequences {
            for t in 0..seq.len() {
                let p = self.prob(&self.history_at(seq, t), seq[t]);
                ll += if p > 0.0 { p.ln() } else { f64::NEG_INFINITY };
                n += 1;
            }
        }
        (ll, n)
    }

    /// Text serialisation: a `chordlm v1` header with order, alpha and
    /// vocabulary size, then one `history... successor count` line per
    /// observed n-gram (`<s>` marks start padding).
    pub fn to_text(&self) -> String {
        let mut out = String::from("chordlm v1\n");
        let _ = writeln!(out, "order {}", self.order);
        let _ = writeln!(out, "alpha {}", self.alpha);
        let _ = writeln!(out, "vocab {}", self.vocab_size);
        for (h, sc) in &self.counts {
            for (next, c) in &sc.next {
                for t in h {
                    match t {
                        Token::Start => out.push_str("<s> "),
                        Token::Sym(s) => {
                            let _ = write!(out, "{s} ");
                        }
                    }
                }
                let _ = writeln!(out, "{next} {c}");
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let mut header = |key: &str| -> Result<String> {
            let (i, line) = lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("missing `{key}` header")))?;
            line.trim()
                .strip_prefix(key)
                .map(|v| v.trim().to_string())
                .ok_or_else(|| Error::parse(i + 1, format!("expected `{key}`")))
        };
        let magic = header("chordlm")?;
        if magic != "v1" {
            return Err(Error::parse(1, format!("unsupported model version {magic:?}")));
        }
        let num = |v: String, what: &str| -> Result<f64> {
            v.parse().map_err(|_| Error::parse(0, format!("bad {what} {v:?}")))
        };
        let order = header("order")?
            .parse::<usize>()
            .map_err(|_| Error::parse(2, "bad order"))?;
        let alpha = num(header("alpha")?, "alpha")?;
        let vocab = header("vocab")?
            .parse::<usize>()
            .map_err(|_| Error::parse(4, "bad vocab"))?;
        let mut model = NGramModel::empty(order, alpha, vocab)?;
        for (i, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != order + 1 {
                return Err(Error::parse(i + 1, format!("expected {} fields", order + 1)));
            }
            let mut history = Vec::with_capacity(order - 1);
            for f in &fields[..order - 1] {
                history.push(if *f == "<s>" {
                    Token::Start
                } else {
                    Token::Sym(f.parse().map_err(|_| Error::parse(i + 1, format!("bad symbol {f:?}")))?)
                });
            }
            let next: usize = fields[order - 1]
                .parse()
                .map_err(|_| Error::parse(i + 1, "bad successor"))?;
            let count: u64 = fields[order]
                .parse()
                .map_err(|_| Error::parse(i + 1, "bad count"))?;
            model
                .add_count(&history, next, count)
                .map_err(|e| Error::parse(i + 1, e.to_string()))?;
        }
        Ok(model)
    }
}

/// Per-symbol perplexity `exp(-LL / n)`; infinite when some event has zero
/// probability, 1 for empty data.
pub fn perplexity(model: &NGramModel, sequences: &[Vec<usize>]) -> f64 {
    let (ll, n) = model.log_likelihood(sequences);
    if n == 0 {
        return 1.0;
    }
    (-ll / n as f64).exp()
}

/// Pick the pseudo-count from `grid` whose model, fit on `train`, has the
/// lowest perplexity on `valid`. Ties go to the smaller value.
pub fn select_alpha(
    train: &[Vec<usize>],
    valid: &[Vec<usize>],
    order: usize,
    vocab_size: usize,
    grid: &[f64],
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty pseudo-count grid".into()));
    }
    if let Some(a) = grid.iter().find(|a| !(**a > 0.0)) {
        return Err(Error::InvalidArgument(format!("grid values must be > 0, got {a}")));
    }
    let base = NGramModel::fit(train, order, grid[0], vocab_size)?;
    let mut best: Option<(f64, f64)> = None;
    for &alpha in grid {
        let ppl = perplexity(&base.with_alpha(alpha)?, valid);
        best = match best {
            Some((b_alpha, b_ppl)) if b_ppl < ppl || (b_ppl == ppl && b_alpha <= alpha) => {
                Some((b_alpha, b_ppl))
            }
            _ => Some((alpha, ppl)),
        };
    }
    Ok(best.map(|b| b.0).expect("grid is non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashMap;

    // C=0, G=14, F=10 in the 25-class layout.
    const C: usize = 0;
    const F: usize = 10;
    const G: usize = 14;
    const S: Token = Token::Start;

    fn sym(s: usize) -> Token {
        Token::Sym(s)
    }

    #[test]
    fn counts_bigrams_with_start_padding() {
        let m = NGramModel::fit(&[vec![C, G, C]], 2, 0.0, 25).unwrap();
        assert_eq!(m.count(&[sym(C)], G), 1);
        assert_eq!(m.count(&[sym(G)], C), 1);
        assert_eq!(m.count(&[S], C), 1);
        assert_eq!(m.history_total(&[S]), 1);
    }

    #[test]
    fn empty_corpus_is_uniform() {
        let m = NGramModel::fit(&[], 2, 1.0, 25).unwrap();
        for s in 0..25 {
            let p = m.prob(&[sym(C)], s);
            if s == C {
                assert_eq!(p, 0.0);
            } else {
                assert!((p - 1.0 / 24.0).abs() < 1e-15);
            }
        }
        assert!((m.prob(&[S], C) - 1.0 / 25.0).abs() < 1e-15);
    }

    #[test]
    fn lidstone_values() {
        let m = NGramModel::fit(&[vec![C, G], vec![C, F]], 2, 0.0, 25).unwrap();
        assert_eq!(m.prob(&[sym(C)], G), 0.5);
        let m = NGramModel::fit(&[vec![C, G, C]], 2, 1.0, 25).unwrap();
        assert!((m.prob(&[sym(C)], G) - 0.08).abs() < 1e-15);
        assert_eq!(m.prob(&[sym(C)], C), 0.0);
        // unseen history
        assert!((m.prob(&[sym(F)], G) - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(NGramModel::fit(&[vec![C, C]], 2, 1.0, 25).is_err());
        assert!(NGramModel::fit(&[vec![C]], 0, 1.0, 25).is_err());
        assert!(NGramModel::fit(&[vec![30]], 2, 1.0, 25).is_err());
        assert!(NGramModel::fit(&[vec![C]], 2, -1.0, 25).is_err());
    }

    #[test]
    fn perplexity_cases() {
        let uniform = NGramModel::fit(&[], 2, 1.0, 25).unwrap();
        // every event after a real chord has p = 1/24; first chord 1/25
        let data = vec![vec![C, G, F, G]];
        let expected = (-((1.0f64 / 25.0).ln() + 3.0 * (1.0f64 / 24.0).ln()) / 4.0).exp();
        assert!((perplexity(&uniform, &data) - expected).abs() < 1e-12);
        let uniform1 = NGramModel::fit(&[], 1, 1.0, 24).unwrap();
        assert!((perplexity(&uniform1, &data) - 24.0).abs() < 1e-9);

        let m = NGramModel::fit(&[vec![C, G, C]], 2, 0.0, 25).unwrap();
        assert!((perplexity(&m, &[vec![C, G, C]]) - 1.0).abs() < 1e-12);
        assert_eq!(perplexity(&m, &[vec![G]]), f64::INFINITY);

        let half = NGramModel::fit(&[vec![C, G], vec![C, F]], 2, 0.0, 25).unwrap();
        // history (C) -> G has p = 0.5; evaluate just that event through a 2-chord sequence
        // whose first event has p = 1.
        let ppl = perplexity(&half, &[vec![C, G]]);
        assert!((ppl - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn alpha_selection() {
        let train = vec![vec![C, G, C, F, C], vec![G, C, G]];
        assert_eq!(select_alpha(&train, &train, 2, 25, &[1e-4, 1.0]).unwrap(), 1e-4);
        assert_eq!(select_alpha(&train, &train, 2, 25, &[0.5]).unwrap(), 0.5);
        let unseen = vec![vec![3, 5, 3]];
        assert_eq!(select_alpha(&train, &unseen, 2, 25, &[0.01, 0.1, 2.0]).unwrap(), 2.0);
        assert!(select_alpha(&train, &train, 2, 25, &[]).is_err());
        assert!(select_alpha(&train, &train, 2, 25, &[0.0]).is_err());
    }

    #[test]
    fn alpha_ties_prefer_smaller() {
        // valid made only of unseen histories and a start event over an
        // empty training set: perplexity is identical for every alpha.
        assert_eq!(select_alpha(&[], &[vec![1, 2]], 2, 25, &[1.0, 0.1, 0.5]).unwrap(), 0.1);
    }

    #[test]
    fn text_round_trip() {
        let m = NGramModel::fit(&[vec![C, G, C, F], vec![F, G]], 3, 0.123456789, 25).unwrap();
        let back = NGramModel::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        let uni = NGramModel::fit(&[vec![C, G]], 1, 0.5, 25).unwrap();
        assert_eq!(NGramModel::from_text(&uni.to_text()).unwrap(), uni);
        assert!(NGramModel::from_text("chordlm v2\norder 2\nalpha 1\nvocab 25\n").is_err());
        assert!(NGramModel::from_text("chordlm v1\norder 2\nalpha 1\nvocab 25\n3 3 1\n").is_err());
    }

    #[test]
    fn huge_alpha_is_uniform() {
        let m = NGramModel::fit(&[vec![C, G, C, G, F]], 2, 1e9, 25).unwrap();
        for h in [[sym(C)], [sym(G)], [S]] {
            let m_size = m.support_size(&h) as f64;
            for s in 0..25 {
                let p = m.prob(&h, s);
                if p > 0.0 {
                    assert!((p - 1.0 / m_size).abs() < 1e-6);
                }
            }
        }
    }

    fn recount(seqs: &[Vec<usize>], order: usize) -> HashMap<(Vec<Token>, usize), u64> {
        let mut out = HashMap::new();
        for seq in seqs {
            let mut padded = vec![Token::Start; order - 1];
            padded.extend(seq.iter().map(|&s| Token::Sym(s)));
            for w in padded.windows(order) {
                let next = w[order - 1].sym().unwrap();
                *out.entry((w[..order - 1].to_vec(), next)).or_insert(0) += 1;
            }
        }
        out
    }

    fn compressed_seqs() -> impl Strategy<Value = Vec<Vec<usize>>> {
        prop::collection::vec(prop::collection::vec(0usize..4, 0..7), 0..=5)
            .prop_map(|v| v.into_iter().map(|s| crate::corpus::compress(&s)).collect())
    }

    proptest! {
        #[test]
        fn stored_counts_match_recount(seqs in compressed_seqs(), order in 1usize..=3) {
            let m = NGramModel::fit(&seqs, order, 0.0, 4).unwrap();
            let oracle = recount(&seqs, order);
            let mut stored = 0;
            for (h, sc) in &m.counts {
                for (next, c) in &sc.next {
                    prop_assert_eq!(oracle.get(&(h.clone(), *next)).copied(), Some(*c));
                    stored += 1;
                }
            }
            prop_assert_eq!(stored, oracle.len());
        }

        #[test]
        fn successor_distributions_sum_to_one(
            seqs in compressed_seqs(),
            order in 1usize..=3,
            alpha in prop::sample::select(vec![1e-3, 0.1, 1.0, 10.0]),
            h in prop::collection::vec(0usize..4, 0..3),
        ) {
            let m = NGramModel::fit(&seqs, order, alpha, 4).unwrap();
            let h = crate::corpus::compress(&h);
            let hist = m.history_at(&h, h.len());
            let total: f64 = m.successor_probs(&hist).iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }

        #[test]
        fn training_order_does_not_matter(seqs in compressed_seqs(), order in 1usize..=3) {
            let a = NGramModel::fit(&seqs, order, 0.3, 4).unwrap();
            let mut rev = seqs.clone();
            rev.reverse();
            let b = NGramModel::fit(&rev, order, 0.3, 4).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn once_observed_history_is_deterministic(a in 0usize..4, b in 0usize..4) {
            prop_assume!(a != b);
            let m = NGramModel::fit(&[vec![a, b]], 2, 0.0, 4).unwrap();
            prop_assert_eq!(m.prob(&[Token::Sym(a)], b), 1.0);
        }
    }
}
