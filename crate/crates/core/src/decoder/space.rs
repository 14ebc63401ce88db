use std::collections::HashMap;

use crate::chordlm::{NGramModel, Token};
use crate::corpus::NUM_CLASSES;
use crate::durmodel::DurationModel;
use crate::error::{Error, Result};

use super::{safe_ln, LOG_ZERO};

/// Flattened `(chord history, duration stage)` state space.
///
/// A history `h = (h_0, h_1, .., h_{N-1})` is stored newest first: `h_0` is
/// the chord the state emits and `h_1..` are the chords heard before it. At
/// the start of a piece the missing past is padded with [`Token::Start`].
/// No two adjacent real chords in a history are equal.
///
/// State `s` is history `s / K` at stage `s % K + 1`. Transitions are kept
/// in compressed sparse form grouped by destination, sources ascending:
///
/// * `(h, k) -> (h, k)` with `1 - p`
/// * `(h, k) -> (h, k + 1)` with `p`
/// * `(h', K) -> (h, 1)` with `P_L(h_0 | h_1..) * p` when `h'` is `h` shifted
///   one chord into the past, i.e. `h'_0.. = h_1..`.
#[derive(Debug, Clone)]
pub struct StateSpace {
    order: usize,
    stages: usize,
    vocab_size: usize,
    /// Flat history table, `order` tokens per history.
    histories: Vec<Token>,
    num_full_histories: usize,
    emission: Vec<u32>,
    in_offsets: Vec<usize>,
    in_src: Vec<u32>,
    in_logp: Vec<f64>,
    initial: Vec<f64>,
}

fn enumerate_histories(order: usize, vocab: usize) -> Vec<Vec<Token>> {
    fn extend(prefix: &mut Vec<Token>, order: usize, vocab: usize, out: &mut Vec<Vec<Token>>) {
        if prefix.len() == order {
            out.push(prefix.clone());
            return;
        }
        match prefix.last() {
            None => {
                for s in 0..vocab {
                    prefix.push(Token::Sym(s));
                    extend(prefix, order, vocab, out);
                    prefix.pop();
                }
            }
            Some(Token::Start) => {
                prefix.push(Token::Start);
                extend(prefix, order, vocab, out);
                prefix.pop();
            }
            Some(&Token::Sym(last)) => {
                prefix.push(Token::Start);
                extend(prefix, order, vocab, out);
                prefix.pop();
                for s in (0..vocab).filter(|&s| s != last) {
                    prefix.push(Token::Sym(s));
                    extend(prefix, order, vocab, out);
                    prefix.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(order), order, vocab, &mut out);
    out
}

/// LM history (oldest first) for predicting `h_0`.
fn lm_history(h: &[Token]) -> Vec<Token> {
    h[1..].iter().rev().copied().collect()
}

impl StateSpace {
    /// Build the flattened state space for an N-gram language model and a
    /// duration model.
    ///
    /// With `N = 1` the language model has no history, so the change
    /// distribution out of chord `y'` is the unigram renormalised over
    /// `y != y'`.
    pub fn build(lm: &NGramModel, dm: &DurationModel) -> Result<Self> {
        let order = lm.order();
        let vocab = lm.vocab_size();
        if vocab > NUM_CLASSES {
            return Err(Error::VocabularyMismatch {
                expected: NUM_CLASSES,
                actual: vocab,
            });
        }
        let stages = dm.stages();
        let chain = dm.stage_chain();
        let ln_stay = safe_ln(chain.stay);
        let ln_adv = safe_ln(chain.advance);

        let mut histories = enumerate_histories(order, vocab);
        // fully observed histories first
        histories.sort_by_key(|h| h.contains(&Token::Start));
        let num_full_histories = histories.iter().filter(|h| !h.contains(&Token::Start)).count();
        let index: HashMap<&[Token], u32> = histories
            .iter()
            .enumerate()
            .map(|(i, h)| (h.as_slice(), i as u32))
            .collect();

        let unigram = (order == 1).then(|| lm.successor_probs(&[]));
        let num_states = histories.len() * stages;
        let mut emission = Vec::with_capacity(num_states);
        let mut initial = vec![LOG_ZERO; num_states];
        let mut in_offsets = Vec::with_capacity(num_states + 1);
        let mut in_src = Vec::new();
        let mut in_logp = Vec::new();
        in_offsets.push(0);

        let start_history = vec![Token::Start; order - 1];
        let mut arcs: Vec<(u32, f64)> = Vec::with_capacity(vocab + 2);
        for (hi, h) in histories.iter().enumerate() {
            let current = h[0].sym().expect("histories start with a chord");
            let is_initial = order == 1 || h[1] == Token::Start;
            if is_initial {
                initial[hi * stages] = safe_ln(lm.prob(&start_history, current));
            }
            // chord-change arcs into stage 1
            let mut change = Vec::new();
            if order == 1 {
                let uni = unigram.as_ref().expect("unigram for order 1");
                for prev in (0..vocab).filter(|&z| z != current) {
                    let rest: f64 = (0..vocab).filter(|&y| y != prev).map(|y| uni[y]).sum();
                    let p = if rest > 0.0 {
                        uni[current] / rest
                    } else {
                        1.0 / (vocab - 1) as f64
                    };
                    change.push((index[&[Token::Sym(prev)][..]], safe_ln(p) + ln_adv));
                }
            } else if !is_initial {
                let ln_lm = safe_ln(lm.prob(&lm_history(h), current)) + ln_adv;
                let mut prev: Vec<Token> = h[1..].to_vec();
                prev.push(Token::Start);
                let oldest = h[order - 1];
                let tails: Vec<Token> = match oldest {
                    Token::Start => vec![Token::Start],
                    Token::Sym(o) => std::iter::once(Token::Start)
                        .chain((0..vocab).filter(|&z| z != o).map(Token::Sym))
                        .collect(),
                };
                for z in tails {
                    prev[order - 1] = z;
                    let src = index[prev.as_slice()];
                    change.push((src, ln_lm));
                }
            }
            for k in 0..stages {
                let s = (hi * stages + k) as u32;
                emission.push(current as u32);
                arcs.clear();
                arcs.push((s, ln_stay));
                if k > 0 {
                    arcs.push((s - 1, ln_adv));
                } else {
                    arcs.extend(change.iter().map(|&(src_h, lp)| {
                        (src_h * stages as u32 + stages as u32 - 1, lp)
                    }));
                }
                arcs.sort_by_key(|a| a.0);
                if arcs.len() > u8::MAX as usize + 1 {
                    return Err(Error::InvalidArgument(format!(
                        "state in-degree {} exceeds the decoder's limit",
                        arcs.len()
                    )));
                }
                for &(src, lp) in &arcs {
                    in_src.push(src);
                    in_logp.push(lp);
                }
                in_offsets.push(in_src.len());
            }
        }

        Ok(StateSpace {
            order,
            stages,
            vocab_size: vocab,
            histories: histories.concat(),
            num_full_histories,
            emission,
            in_offsets,
            in_src,
            in_logp,
            initial,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn num_states(&self) -> usize {
        self.emission.len()
    }

    /// States whose history has no start padding: `|Y| (|Y| - 1)^(N-1) K`.
    pub fn num_full_states(&self) -> usize {
        self.num_full_histories * self.stages
    }

    pub fn num_transitions(&self) -> usize {
        self.in_src.len()
    }

    /// History of state `s`, newest chord first.
    pub fn history(&self, s: usize) -> &[Token] {
        let h = s / self.stages;
        &self.histories[h * self.order..(h + 1) * self.order]
    }

    /// Duration stage of state `s`, in `1..=K`.
    pub fn stage(&self, s: usize) -> usize {
        s % self.stages + 1
    }

    /// Chord class emitted by state `s`.
    pub fn emission(&self, s: usize) -> usize {
        self.emission[s] as usize
    }

    pub(crate) fn emissions(&self) -> &[u32] {
        &self.emission
    }

    /// Natural-log initial probability of each state ([`LOG_ZERO`] if the
    /// state cannot start a piece).
    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// Incoming `(source, log-probability)` arcs of state `dst`, sources
    /// ascending.
    pub fn incoming(&self, dst: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.in_offsets[dst], self.in_offsets[dst + 1]);
        self.in_src[lo..hi]
            .iter()
            .zip(&self.in_logp[lo..hi])
            .map(|(&s, &lp)| (s as usize, lp))
    }

    pub(crate) fn csr(&self) -> (&[usize], &[u32], &[f64]) {
        (&self.in_offsets, &self.in_src, &self.in_logp)
    }

    /// Find the state with history `h` (newest first) and stage `k`.
    pub fn find(&self, h: &[Token], k: usize) -> Option<usize> {
        if h.len() != self.order || k == 0 || k > self.stages {
            return None;
        }
        self.histories
            .chunks_exact(self.order)
            .position(|x| x == h)
            .map(|hi| hi * self.stages + k - 1)
    }

    /// Linear-domain sum of outgoing probabilities for every state.
    pub fn outgoing_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.num_states()];
        for dst in 0..self.num_states() {
            for (src, lp) in self.incoming(dst) {
                sums[src] += lp.exp();
            }
        }
        sums
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form_full(v: usize, n: usize, k: usize) -> usize {
        v * (v - 1).pow(n as u32 - 1) * k
    }

    #[test]
    fn bigram_state_counts() {
        let lm = NGramModel::fit(&[vec![0, 14, 0]], 2, 0.1, 25).unwrap();
        let dm = DurationModel::new(2, 0.1).unwrap();
        let space = StateSpace::build(&lm, &dm).unwrap();
        assert_eq!(space.num_full_states(), 1200);
        assert_eq!(space.num_states(), 1200 + 25 * 2);
    }

    #[test]
    fn counts_match_closed_form() {
        for v in [3, 4] {
            for n in 1..=4 {
                for k in 1..=2 {
                    let lm = NGramModel::empty(n, 1.0, v).unwrap();
                    let dm = DurationModel::new(k, 0.3).unwrap();
                    let space = StateSpace::build(&lm, &dm).unwrap();
                    assert_eq!(space.num_full_states(), closed_form_full(v, n, k));
                    let padded: usize = (0..n.saturating_sub(1)).map(|j| v * (v - 1).pow(j as u32)).sum();
                    assert_eq!(space.num_states(), closed_form_full(v, n, k) + padded * k);
                }
            }
        }
    }

    #[test]
    fn first_order_hmm() {
        let lm = NGramModel::fit(&[vec![0, 1, 2, 0, 2]], 1, 0.5, 3).unwrap();
        let dm = DurationModel::new(1, 0.2).unwrap();
        let space = StateSpace::build(&lm, &dm).unwrap();
        assert_eq!(space.num_states(), 3);
        let uni = lm.successor_probs(&[]);
        for dst in 0..3 {
            for (src, lp) in space.incoming(dst) {
                let want = if src == dst {
                    0.8
                } else {
                    uni[dst] / (1.0 - uni[src]) * 0.2
                };
                assert!((lp.exp() - want).abs() < 1e-12);
            }
            assert!((space.initial()[dst].exp() - uni[dst]).abs() < 1e-12);
        }
    }

    #[test]
    fn flattened_two_chord_example() {
        // C = 0, A = 18: states (C,1), (C,2), (A,1), (A,2) of a first-order model
        let (c, a) = (0, 18);
        let lm = NGramModel::fit(&[vec![c, a, c, a], vec![c, 7]], 2, 0.5, 25).unwrap();
        let dm = DurationModel::new(2, 0.3).unwrap();
        let space = StateSpace::build(&lm, &dm).unwrap();
        let c_after_a = [Token::Sym(c), Token::Sym(a)];
        let a_after_c = [Token::Sym(a), Token::Sym(c)];
        let src = space.find(&c_after_a, 2).unwrap(); // (C, 2) having heard A
        let dst = space.find(&a_after_c, 1).unwrap(); // (A, 1) having heard C
        let arc = space.incoming(dst).find(|&(s, _)| s == src).unwrap();
        let want = lm.prob(&[Token::Sym(c)], a) * 0.3;
        assert!((arc.1.exp() - want).abs() < 1e-12);
        for s in [src, dst] {
            let self_loop = space.incoming(s).find(|&(x, _)| x == s).unwrap();
            assert!((self_loop.1.exp() - 0.7).abs() < 1e-12);
        }
        let c1 = space.find(&c_after_a, 1).unwrap();
        let adv = space.incoming(src).find(|&(x, _)| x == c1).unwrap();
        assert!((adv.1.exp() - 0.3).abs() < 1e-12);
        assert_eq!(space.incoming(src).count(), 2);
    }

    #[test]
    fn outgoing_probabilities_sum_to_one() {
        for n in 1..=3 {
            for k in 1..=3 {
                let lm = NGramModel::fit(&[vec![0, 1, 2, 3, 1, 0], vec![2, 1]], n, 0.2, 4).unwrap();
                let dm = DurationModel::new(k, 0.35).unwrap();
                let space = StateSpace::build(&lm, &dm).unwrap();
                for (s, sum) in space.outgoing_sums().iter().enumerate() {
                    assert!((sum - 1.0).abs() < 1e-9, "N={n} K={k} state {s}: {sum}");
                }
                let init: f64 = space.initial().iter().map(|l| l.exp()).sum();
                assert!((init - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn histories_never_repeat_adjacent_chords() {
        let lm = NGramModel::empty(3, 1.0, 4).unwrap();
        let space = StateSpace::build(&lm, &DurationModel::new(1, 0.5).unwrap()).unwrap();
        for s in 0..space.num_states() {
            let h = space.history(s);
            assert!(h.windows(2).all(|w| w[0] != w[1] || w[0] == Token::Start));
            assert_eq!(h[0].sym(), Some(space.emission(s)));
        }
    }
}
