//! Seeded synthetic corpora: chord sequences drawn from a generating bigram
//! model, durations from a negative binomial, and simulated posteriors.
//!
//! All randomness descends from one root seed. A component seed is
//! `splitmix64(root ^ fnv1a64(tag))`, so adding a song or a component never
//! shifts the streams of the others.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::acoustic::{simulate_posteriors, PosteriorMatrix, SimulatorParams};
use crate::chordlm::{NGramModel, Token};
use crate::corpus::{AnnotatedSegment, ChordSymbol, FrameSequence, NUM_CLASSES};
use crate::durmodel::DurationModel;
use crate::error::{Error, Result};

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// One round of the splitmix64 output function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the component named `tag` under `root`.
pub fn derive_seed(root: u64, tag: &str) -> u64 {
    splitmix64(root ^ fnv1a64(tag.as_bytes()))
}

/// A random sparse bigram model over the 24 major/minor chords. Each chord
/// gets `favoured` preferred successors with geometrically decaying weights;
/// every other chord keeps a small pseudo-count. No-chord is never generated.
pub fn random_bigram(favoured: usize, seed: u64) -> Result<NGramModel> {
    if favoured == 0 || favoured >= NUM_CLASSES - 1 {
        return Err(Error::InvalidArgument(format!(
            "favoured successors must lie in 1..{}, got {favoured}",
            NUM_CLASSES - 2
        )));
    }
    let chords = NUM_CLASSES - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lm = NGramModel::empty(2, 0.05, NUM_CLASSES)?;
    for c in 0..chords {
        lm.add_count(&[Token::Start], c, 10)?;
    }
    for h in 0..chords {
        let mut others: Vec<usize> = (0..chords).filter(|&c| c != h).collect();
        others.shuffle(&mut rng);
        for (rank, &next) in others.iter().enumerate() {
            let count = if rank < favoured { 64 >> rank.min(5) } else { 1 };
            lm.add_count(&[Token::Sym(h)], next, count)?;
        }
    }
    // Smoothing mass on no-chord is not wanted in a generator.
    lm.with_alpha(1e-9)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub songs: usize,
    /// Chord segments per song, drawn uniformly from this inclusive range.
    pub min_segments: usize,
    pub max_segments: usize,
    pub frame_rate: f64,
    pub duration: DurationModel,
    pub simulator: SimulatorParams,
    /// Successors favoured by the random generating bigram.
    pub favoured: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            songs: 200,
            min_segments: 20,
            max_segments: 60,
            frame_rate: crate::corpus::DEFAULT_FRAME_RATE,
            duration: DurationModel::new(2, 0.1).expect("valid default"),
            simulator: SimulatorParams::default(),
            favoured: 3,
        }
    }
}

impl GeneratorConfig {
    /// The end-to-end benchmark: 200 songs, NB(2, 0.1) durations and
    /// moderate, strongly time-correlated posterior noise, so that errors come
    /// in bursts as they do with real acoustic models.
    pub fn benchmark() -> Self {
        GeneratorConfig {
            simulator: SimulatorParams {
                confusion_temperature: 1.0,
                noise_scale: 0.2,
                noise_correlation: 0.9,
            },
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSong {
    pub id: String,
    /// Reference annotation, frame aligned.
    pub segments: Vec<AnnotatedSegment>,
    pub frames: FrameSequence,
    /// Absent when only labels were requested.
    pub posteriors: Option<PosteriorMatrix>,
}

/// Draw one song's change sequence and durations in frames.
pub fn sample_song<R: Rng + ?Sized>(
    lm: &NGramModel,
    dm: &DurationModel,
    segments: usize,
    rng: &mut R,
) -> Vec<(ChordSymbol, usize)> {
    let mut chords: Vec<usize> = Vec::with_capacity(segments);
    let mut out = Vec::with_capacity(segments);
    for _ in 0..segments {
        let history = lm.history_at(&chords, chords.len());
        let mut next = lm.sample_next(&history, rng);
        // The generator never repeats; guard against smoothing leaks anyway.
        while chords.last() == Some(&next) || next >= NUM_CLASSES {
            next = lm.sample_next(&history, rng);
        }
        chords.push(next);
        let label = ChordSymbol::from_index(next).expect("index below NUM_CLASSES");
        out.push((label, dm.sample(rng)));
    }
    out
}

/// Generate a corpus. Song `i` is named `song_{i:04}` and depends only on the
/// root seed and its own name.
pub fn generate_corpus(lm: &NGramModel, config: &GeneratorConfig, seed: u64, with_posteriors: bool) -> Result<Vec<SyntheticSong>> {
    if config.min_segments == 0 || config.min_segments > config.max_segments {
        return Err(Error::InvalidArgument(format!(
            "segment range {}..={} is empty",
            config.min_segments, config.max_segments
        )));
    }
    if !(config.frame_rate > 0.0 && config.frame_rate.is_finite()) {
        return Err(Error::InvalidArgument("frame rate must be positive".into()));
    }
    if lm.vocab_size() != NUM_CLASSES {
        return Err(Error::VocabularyMismatch {
            expected: NUM_CLASSES,
            actual: lm.vocab_size(),
        });
    }
    (0..config.songs)
        .map(|i| {
            let id = format!("song_{i:04}");
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("{id}/labels")));
            let n = rng.random_range(config.min_segments..=config.max_segments);
            let runs = sample_song(lm, &config.duration, n, &mut rng);
            let labels: Vec<ChordSymbol> = crate::corpus::expand_runs(&runs);
            let frames = FrameSequence::new(config.frame_rate, labels);
            let segments = frames.to_segments();
            let posteriors = if with_posteriors {
                let s = derive_seed(seed, &format!("{id}/posteriors"));
                Some(simulate_posteriors(&frames, config.simulator, s)?)
            } else {
                None
            };
            Ok(SyntheticSong {
                id,
                segments,
                frames,
                posteriors,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::run_lengths;

    #[test]
    fn seed_derivation_is_stable() {
        // FNV-1a reference values
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_ne!(derive_seed(1, "a"), derive_seed(1, "b"));
        assert_ne!(derive_seed(1, "a"), derive_seed(2, "a"));
        assert_eq!(derive_seed(7, "x"), derive_seed(7, "x"));
    }

    #[test]
    fn bigram_generator_never_repeats_or_emits_no_chord() {
        let lm = random_bigram(3, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let song = sample_song(&lm, &DurationModel::new(2, 0.3).unwrap(), 500, &mut rng);
        assert!(song.windows(2).all(|w| w[0].0 != w[1].0));
        assert!(song.iter().all(|(c, d)| !c.is_no_chord() && *d >= 2));
        let probs = lm.successor_probs(&[Token::Sym(0)]);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(probs[24] < 1e-9);
    }

    #[test]
    fn corpus_is_deterministic_and_aligned() {
        let lm = random_bigram(3, 5).unwrap();
        let cfg = GeneratorConfig { songs: 4, ..Default::default() };
        let a = generate_corpus(&lm, &cfg, 9, true).unwrap();
        let b = generate_corpus(&lm, &cfg, 9, true).unwrap();
        assert_eq!(a, b);
        let bigger = generate_corpus(&lm, &GeneratorConfig { songs: 5, ..cfg.clone() }, 9, false).unwrap();
        assert_eq!(a[3].frames, bigger[3].frames);
        for s in &a {
            let p = s.posteriors.as_ref().unwrap();
            assert_eq!(p.num_frames(), s.frames.len());
            let runs = run_lengths(&s.frames.labels);
            assert!(runs.len() >= cfg.min_segments && runs.len() <= cfg.max_segments);
            assert_eq!(runs.len(), s.segments.len());
        }
    }
    #[test]
    fn sampled_durations_follow_the_pmf() {
        let lm = random_bigram(3, 5).unwrap();
        let cfg = GeneratorConfig { songs: 2600, ..Default::default() };
        let songs = generate_corpus(&lm, &cfg, 11, false).unwrap();
        let durations: Vec<usize> = songs
            .iter()
            .flat_map(|s| run_lengths(&s.frames.labels).into_iter().map(|r| r.1))
            .collect();
        assert!(durations.len() >= 100_000, "{}", durations.len());
        let n = durations.len() as f64;
        let hist = crate::durmodel::duration_histogram(&durations);
        let seen: f64 = hist.iter().enumerate().map(|(i, &c)| (c as f64 / n - cfg.duration.pmf(i + 1)).abs()).sum();
        let tail: f64 = 1.0 - (1..=hist.len()).map(|d| cfg.duration.pmf(d)).sum::<f64>();
        let tv = 0.5 * (seen + tail);
        assert!(tv < 0.02, "total variation {tv}");
    }
}
