//! Synthetic posteriors standing in for a trained acoustic model.
//!
//! Confusions follow the cosine similarity of 12-bin chroma templates, so
//! chords sharing two notes (relative, parallel and mediant chords) are far
//! more likely to be mistaken for each other than unrelated ones. Each row is
//!
//! ```text
//! softmax_c( (sim(y, c) - 1) / (tau * sigma) + eps_c )
//! ```
//!
//! for true class `y`, confusion temperature `tau`, noise scale `sigma` and
//! standard normal noise `eps` (optionally AR(1)-correlated across frames).
//! As `sigma -> 0` every row collapses onto the true class.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::corpus::{ChordSymbol, FrameSequence, NUM_CLASSES};
use crate::error::{Error, Result};

use super::PosteriorMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulatorParams {
    pub confusion_temperature: f64,
    pub noise_scale: f64,
    /// Lag-one correlation of the per-class noise across frames, in `[0, 1)`.
    pub noise_correlation: f64,
}

impl Default for SimulatorParams {
    fn default() -> Self {
        SimulatorParams {
            confusion_temperature: 1.0,
            noise_scale: 0.25,
            noise_correlation: 0.0,
        }
    }
}

/// Unit-norm chroma template of a chord class; no-chord is flat.
pub(crate) fn chroma_template(c: ChordSymbol) -> [f64; 12] {
    let mut t = [0.0; 12];
    if c.is_no_chord() {
        t.fill(1.0 / 12f64.sqrt());
    } else {
        for pc in c.pitch_classes() {
            t[pc as usize] = 1.0 / 3f64.sqrt();
        }
    }
    t
}

/// Cosine similarity between the chroma templates of two classes.
pub fn chroma_similarity(a: ChordSymbol, b: ChordSymbol) -> f64 {
    let (ta, tb) = (chroma_template(a), chroma_template(b));
    ta.iter().zip(&tb).map(|(x, y)| x * y).sum()
}

/// Simulate a posterior matrix for `truth`, deterministic in `seed`.
pub fn simulate_posteriors(truth: &FrameSequence, params: SimulatorParams, seed: u64) -> Result<PosteriorMatrix> {
    let SimulatorParams {
        confusion_temperature: tau,
        noise_scale: sigma,
        noise_correlation: rho,
    } = params;
    if !(tau > 0.0 && tau.is_finite()) || !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(
            "confusion temperature must be positive and noise scale non-negative".into(),
        ));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidArgument(format!("noise correlation must lie in [0, 1), got {rho}")));
    }
    let sim: Vec<Vec<f64>> = ChordSymbol::all()
        .map(|a| ChordSymbol::all().map(|b| chroma_similarity(a, b)).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let innovation = (1.0 - rho * rho).sqrt();
    let mut eps = [0.0; NUM_CLASSES];
    let mut values = Vec::with_capacity(truth.len() * NUM_CLASSES);
    let mut z = [0.0; NUM_CLASSES];
    for (t, y) in truth.labels.iter().enumerate() {
        for e in eps.iter_mut() {
            let n: f64 = StandardNormal.sample(&mut rng);
            *e = if t == 0 { n } else { rho * *e + innovation * n };
        }
        let row_sim = &sim[y.index()];
        if sigma == 0.0 {
            let mut hot = vec![0.0; NUM_CLASSES];
            hot[y.index()] = 1.0;
            values.extend(hot);
            continue;
        }
        for c in 0..NUM_CLASSES {
            z[c] = (row_sim[c] - 1.0) / (tau * sigma) + eps[c];
        }
        let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let norm: f64 = z.iter().map(|v| (v - max).exp()).sum();
        values.extend(z.iter().map(|v| (v - max).exp() / norm));
    }
    PosteriorMatrix::new(truth.frame_rate, NUM_CLASSES, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Mode;
    use rand::Rng;

    fn random_truth(n: usize, seed: u64) -> FrameSequence {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut labels = Vec::with_capacity(n);
        while labels.len() < n {
            let c = ChordSymbol::from_index(rng.random_range(0..NUM_CLASSES)).unwrap();
            let d = rng.random_range(3..30);
            labels.extend(std::iter::repeat_n(c, d));
        }
        labels.truncate(n);
        FrameSequence::new(10.0, labels)
    }

    fn accuracy(p: &PosteriorMatrix, truth: &FrameSequence) -> f64 {
        let hits = p
            .argmax()
            .iter()
            .zip(&truth.labels)
            .filter(|(a, b)| **a == b.index())
            .count();
        hits as f64 / truth.len() as f64
    }

    #[test]
    fn similarity_structure() {
        let c = ChordSymbol::new(0, Mode::Major);
        let am = ChordSymbol::new(9, Mode::Minor);
        let fs = ChordSymbol::new(6, Mode::Major);
        assert!((chroma_similarity(c, c) - 1.0).abs() < 1e-12);
        assert!((chroma_similarity(c, am) - 2.0 / 3.0).abs() < 1e-12);
        assert!(chroma_similarity(c, fs).abs() < 1e-12);
        assert!((chroma_similarity(c, ChordSymbol::NO_CHORD) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_limit_is_one_hot() {
        let truth = random_truth(200, 1);
        for sigma in [1e-3, 0.0] {
            let params = SimulatorParams { noise_scale: sigma, ..Default::default() };
            let p = simulate_posteriors(&truth, params, 7).unwrap();
            for (row, y) in p.rows().zip(&truth.labels) {
                assert!(row[y.index()] > 1.0 - 1e-9, "sigma {sigma}: {}", row[y.index()]);
            }
        }
    }

    #[test]
    fn seeded_determinism() {
        let truth = random_truth(300, 2);
        let a = simulate_posteriors(&truth, SimulatorParams::default(), 11).unwrap();
        let b = simulate_posteriors(&truth, SimulatorParams::default(), 11).unwrap();
        let c = simulate_posteriors(&truth, SimulatorParams::default(), 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rows_are_distributions() {
        let truth = random_truth(100, 3);
        for tau in [0.1, 1.0, 10.0] {
            for sigma in [0.0, 0.01, 0.25, 5.0] {
                for rho in [0.0, 0.9] {
                    let params = SimulatorParams {
                        confusion_temperature: tau,
                        noise_scale: sigma,
                        noise_correlation: rho,
                    };
                    let p = simulate_posteriors(&truth, params, 5).unwrap();
                    assert!(p.check_rows(1e-9).is_ok());
                }
            }
        }
        let bad = SimulatorParams { noise_correlation: 1.0, ..Default::default() };
        assert!(simulate_posteriors(&truth, bad, 0).is_err());
    }

    #[test]
    fn golden_default_accuracy() {
        let truth = random_truth(10_000, 2024);
        let p = simulate_posteriors(&truth, SimulatorParams::default(), 2024).unwrap();
        let acc = accuracy(&p, &truth);
        assert_eq!(format!("{acc:.4}"), "0.6100");
    }
}
