//! Temporal models for automatic chord recognition.
//!
//! Chord sequences are modelled at the level of chord *changes* by an N-gram
//! language model ([`chordlm`]) and at the level of chord *durations* by a
//! negative binomial model realised as a small left-to-right Markov chain
//! ([`durmodel`]). The two are flattened into a single first-order HMM over
//! `(chord history, duration stage)` states and decoded exactly with Viterbi
//! against frame-wise acoustic posteriors ([`decoder`]).
//!
//! Around that core sit the pieces needed to run experiments end to end:
//! `.lab` annotation handling ([`corpus`]), posterior files, temperature and
//! target smoothing plus a synthetic posterior simulator and a toy frame
//! classifier ([`acoustic`]), and weighted chord symbol recall scoring
//! ([`evalkit`]).
//!
//! ```
//! use chordhmm::chordlm::NGramModel;
//! use chordhmm::decoder::StateSpace;
//! use chordhmm::durmodel::DurationModel;
//!
//! let lm = NGramModel::fit(&[vec![0, 14, 0, 10]], 2, 0.1, 25).unwrap();
//! let dm = DurationModel::new(2, 0.1).unwrap();
//! let space = StateSpace::build(&lm, &dm).unwrap();
//! assert_eq!(space.num_full_states(), 25 * 24 * 2);
//! ```

// `!(x > 0.0)` style checks are there to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acoustic;
pub mod chordlm;
pub mod cli;
pub mod corpus;
pub mod decoder;
pub mod durmodel;
pub mod error;
pub mod evalkit;
pub mod pipeline;
pub mod synth;

pub use corpus::{AnnotatedSegment, ChordSymbol, FrameSequence, NUM_CLASSES};
pub use error::{Error, Result};
