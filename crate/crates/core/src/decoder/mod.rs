//! Exact decoding with the flattened hierarchical HMM.
//!
//! All scores are natural logarithms. Zero probabilities are represented by
//! [`LOG_ZERO`] rather than `-inf`, so that sums along impossible paths stay
//! finite and comparable; a best path scoring below `LOG_ZERO / 2` means no
//! path with non-zero probability exists.

mod space;
mod viterbi;

pub use space::StateSpace;
pub use viterbi::{DecodeOptions, DecodingResult};

use crate::acoustic::PosteriorMatrix;
use crate::corpus::{AnnotatedSegment, ChordSymbol, FrameSequence};
use crate::error::{Error, Result};

/// Log of zero probability.
pub const LOG_ZERO: f64 = -1e300;

/// Natural log with `ln 0` mapped to [`LOG_ZERO`].
pub fn safe_ln(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        LOG_ZERO
    }
}

/// Segments of a frame labelling, with boundaries on frame edges.
pub fn decode_segments(labels: &FrameSequence) -> Vec<AnnotatedSegment> {
    labels.to_segments()
}

/// Frame-wise argmax of the posteriors, with no temporal model at all.
pub fn decode_argmax(posteriors: &PosteriorMatrix) -> Result<FrameSequence> {
    let labels = posteriors
        .argmax()
        .into_iter()
        .map(|i| {
            ChordSymbol::from_index(i).ok_or(Error::VocabularyMismatch {
                expected: crate::corpus::NUM_CLASSES,
                actual: posteriors.num_classes(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrameSequence::new(posteriors.frame_rate(), labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_from_frames() {
        let c: ChordSymbol = "C".parse().unwrap();
        let a: ChordSymbol = "A".parse().unwrap();
        let segs = decode_segments(&FrameSequence::new(10.0, vec![c, c, a]));
        assert_eq!(segs.len(), 2);
        assert_eq!((segs[0].start, segs[0].end, segs[0].label), (0.0, 0.2, c));
        assert!((segs[1].start - 0.2).abs() < 1e-12 && (segs[1].end - 0.3).abs() < 1e-12);
        let one = decode_segments(&FrameSequence::new(10.0, vec![a]));
        assert_eq!((one[0].start, one[0].end), (0.0, 0.1));
    }

    #[test]
    fn frame_aligned_round_trip() {
        let c: ChordSymbol = "C".parse().unwrap();
        let a: ChordSymbol = "A:min".parse().unwrap();
        let segs = vec![AnnotatedSegment::new(0.0, 0.3, c), AnnotatedSegment::new(0.3, 0.5, a)];
        let frames = crate::corpus::sample_frames(&segs, 10.0).unwrap();
        let back = decode_segments(&frames);
        for (x, y) in segs.iter().zip(&back) {
            assert!((x.start - y.start).abs() < 1e-12 && (x.end - y.end).abs() < 1e-12);
            assert_eq!(x.label, y.label);
        }
    }

    #[test]
    fn safe_log() {
        assert_eq!(safe_ln(0.0), LOG_ZERO);
        assert_eq!(safe_ln(1.0), 0.0);
    }
}
