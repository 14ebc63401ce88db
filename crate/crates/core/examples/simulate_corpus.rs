//! Generate a synthetic corpus: a sparse random bigram over chord changes,
//! negative binomial durations and simulated posteriors with correlated noise.

use chordhmm::corpus::write_lab;
use chordhmm::decoder::decode_argmax;
use chordhmm::synth::{derive_seed, generate_corpus, random_bigram, GeneratorConfig};

pub fn main() -> chordhmm::Result<()> {
    let seed = 11;
    let config = GeneratorConfig { songs: 5, ..GeneratorConfig::benchmark() };
    let lm = random_bigram(config.favoured, derive_seed(seed, "generator-lm"))?;
    let songs = generate_corpus(&lm, &config, seed, true)?;
    for s in &songs {
        let post = s.posteriors.as_ref().unwrap();
        let hits = decode_argmax(post)?.labels.iter().zip(&s.frames.labels).filter(|(a, b)| a == b).count();
        println!(
            "{}: {} segments, {} frames, argmax frame accuracy {:.3}",
            s.id,
            s.segments.len(),
            s.frames.len(),
            hits as f64 / s.frames.len() as f64
        );
    }
    print!("first segments of {}:\n{}", songs[0].id, write_lab(&songs[0].segments[..4]));
    Ok(())
}
