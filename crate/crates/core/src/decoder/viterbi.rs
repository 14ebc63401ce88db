use crate::acoustic::PosteriorMatrix;
use crate::corpus::{AnnotatedSegment, ChordSymbol, FrameSequence};
use crate::error::{Error, Result};

use super::{safe_ln, StateSpace, LOG_ZERO};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecodeOptions {
    /// Divide posteriors by this class prior before decoding. `None` treats
    /// the prior as uniform, which only shifts every path score by a constant.
    pub label_prior: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodingResult {
    pub labels: FrameSequence,
    pub segments: Vec<AnnotatedSegment>,
    /// Natural-log score of the best path: emissions plus transitions,
    /// including the initial state.
    pub log_prob: f64,
    /// Index of the state occupied at each frame.
    pub states: Vec<usize>,
}

impl StateSpace {
    pub fn viterbi(&self, posteriors: &PosteriorMatrix) -> Result<DecodingResult> {
        self.viterbi_with(posteriors, &DecodeOptions::default())
    }

    /// Exact maximum-probability state path.
    ///
    /// Rows need not be normalised; scaling a row by a constant shifts the
    /// score without changing the path. Ties go to the lowest predecessor and
    /// final state index. The path may end in any state, so the last segment
    /// can be shorter than `K` frames.
    pub fn viterbi_with(&self, posteriors: &PosteriorMatrix, options: &DecodeOptions) -> Result<DecodingResult> {
        let n_frames = posteriors.num_frames();
        if n_frames == 0 {
            return Err(Error::InvalidData("cannot decode zero frames".into()));
        }
        let vocab = self.vocab_size();
        if posteriors.num_classes() != vocab {
            return Err(Error::VocabularyMismatch {
                expected: vocab,
                actual: posteriors.num_classes(),
            });
        }
        let ln_prior: Vec<f64> = match &options.label_prior {
            None => vec![0.0; vocab],
            Some(prior) if prior.len() == vocab => prior.iter().map(|&p| safe_ln(p)).collect(),
            Some(prior) => {
                return Err(Error::VocabularyMismatch {
                    expected: vocab,
                    actual: prior.len(),
                })
            }
        };

        let n_states = self.num_states();
        let emission = self.emissions();
        let (offsets, src, logp) = self.csr();
        let mut ln_emit = vec![0.0; vocab];
        let fill_emit = |t: usize, out: &mut [f64]| {
            for ((o, p), lp) in out.iter_mut().zip(posteriors.row(t)).zip(&ln_prior) {
                *o = safe_ln(*p) - lp;
            }
        };

        // Predecessor slot within the destination's arc group, per frame.
        let mut back = vec![0u8; n_frames * n_states];
        let mut prev = vec![0.0; n_states];
        let mut cur = vec![0.0; n_states];

        fill_emit(0, &mut ln_emit);
        for (s, v) in prev.iter_mut().enumerate() {
            *v = self.initial()[s] + ln_emit[emission[s] as usize];
        }
        for t in 1..n_frames {
            fill_emit(t, &mut ln_emit);
            let back_t = &mut back[t * n_states..(t + 1) * n_states];
            for dst in 0..n_states {
                let (lo, hi) = (offsets[dst], offsets[dst + 1]);
                let mut best = f64::NEG_INFINITY;
                let mut slot = 0;
                for (i, (&s, &lp)) in src[lo..hi].iter().zip(&logp[lo..hi]).enumerate() {
                    let v = prev[s as usize] + lp;
                    if v > best {
                        best = v;
                        slot = i;
                    }
                }
                cur[dst] = best + ln_emit[emission[dst] as usize];
                back_t[dst] = slot as u8;
            }
            std::mem::swap(&mut prev, &mut cur);
        }

        let mut last = 0;
        for (s, &v) in prev.iter().enumerate() {
            if v > prev[last] {
                last = s;
            }
        }
        let log_prob = prev[last];
        if !(log_prob > LOG_ZERO / 2.0) {
            return Err(Error::Numerical(
                "no state path has non-zero probability under the model".into(),
            ));
        }

        let mut states = vec![0usize; n_frames];
        states[n_frames - 1] = last;
        for t in (1..n_frames).rev() {
            let dst = states[t];
            let slot = back[t * n_states + dst] as usize;
            states[t - 1] = src[offsets[dst] + slot] as usize;
        }
        let labels = states
            .iter()
            .map(|&s| ChordSymbol::from_index(self.emission(s)).expect("vocabulary fits the chord classes"))
            .collect();
        let labels = FrameSequence::new(posteriors.frame_rate(), labels);
        let segments = labels.to_segments();
        Ok(DecodingResult {
            labels,
            segments,
            log_prob,
            states,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chordlm::NGramModel;
    use crate::durmodel::DurationModel;

    fn one_hot_rows(labels: &[usize], vocab: usize, eps: f64) -> PosteriorMatrix {
        let rows: Vec<Vec<f64>> = labels
            .iter()
            .map(|&l| {
                let mut r = vec![eps; vocab];
                r[l] = 1.0 - eps * (vocab - 1) as f64;
                r
            })
            .collect();
        PosteriorMatrix::from_rows(10.0, &rows).unwrap()
    }

    #[test]
    fn recovers_noiseless_path() {
        // repeated progression so the bigram model is near deterministic
        let prog = vec![0, 14, 10, 0, 14, 10, 0];
        let lm = NGramModel::fit(&vec![prog.clone(); 5], 2, 1e-3, 25).unwrap();
        let dm = DurationModel::new(2, 0.2).unwrap();
        let space = StateSpace::build(&lm, &dm).unwrap();
        let frames: Vec<usize> = prog.iter().flat_map(|&c| std::iter::repeat_n(c, 6)).collect();
        let out = space.viterbi(&one_hot_rows(&frames, 25, 0.0)).unwrap();
        let got: Vec<usize> = out.labels.labels.iter().map(|c| c.index()).collect();
        assert_eq!(got, frames);
        assert_eq!(out.segments.len(), prog.len());
    }

    #[test]
    fn short_flicker_is_smoothed_out() {
        let lm = NGramModel::empty(1, 1.0, 25).unwrap();
        let dm = DurationModel::new(3, 0.2).unwrap();
        let space = StateSpace::build(&lm, &dm).unwrap();
        let mut frames = vec![0; 10];
        frames[5] = 9; // single-frame blip
        frames.extend(vec![2; 10]);
        let out = space.viterbi(&one_hot_rows(&frames, 25, 0.01)).unwrap();
        let segs = &out.segments;
        assert_eq!(segs.len(), 2);
        for s in &segs[..segs.len() - 1] {
            assert!(((s.end - s.start) * 10.0).round() as usize >= 3);
        }
    }

    #[test]
    fn errors() {
        let lm = NGramModel::empty(2, 1.0, 4).unwrap();
        let space = StateSpace::build(&lm, &DurationModel::new(1, 0.5).unwrap()).unwrap();
        let empty = PosteriorMatrix::new(10.0, 4, vec![]).unwrap();
        assert!(space.viterbi(&empty).is_err());
        let wrong = PosteriorMatrix::from_rows(10.0, &[vec![0.5, 0.5]]).unwrap();
        assert!(matches!(space.viterbi(&wrong), Err(Error::VocabularyMismatch { .. })));
        let zero = PosteriorMatrix::from_rows(10.0, &[vec![0.0; 4]]).unwrap();
        assert!(matches!(space.viterbi(&zero), Err(Error::Numerical(_))));
    }

    #[test]
    fn label_prior_shifts_scores() {
        let lm = NGramModel::fit(&[vec![0, 1, 2]], 2, 0.5, 3).unwrap();
        let space = StateSpace::build(&lm, &DurationModel::new(1, 0.4).unwrap()).unwrap();
        let post = PosteriorMatrix::from_rows(10.0, &[vec![0.5, 0.3, 0.2], vec![0.2, 0.3, 0.5]]).unwrap();
        let plain = space.viterbi(&post).unwrap();
        let uniform = DecodeOptions { label_prior: Some(vec![1.0 / 3.0; 3]) };
        let shifted = space.viterbi_with(&post, &uniform).unwrap();
        assert_eq!(plain.states, shifted.states);
        assert!((shifted.log_prob - plain.log_prob - 2.0 * 3f64.ln()).abs() < 1e-12);
        let bad = DecodeOptions { label_prior: Some(vec![1.0]) };
        assert!(space.viterbi_with(&post, &bad).is_err());
    }
}
