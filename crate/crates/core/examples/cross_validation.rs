//! Song-level cross-validated ablation of the temporal models on a
//! synthetic corpus: no smoothing, duration only, and N-gram chord models.

use chordhmm::pipeline::{cross_validate, DecodeMode, Song, TemporalConfig};
use chordhmm::synth::{generate_corpus, random_bigram, GeneratorConfig};

pub fn main() -> chordhmm::Result<()> {
    let config = GeneratorConfig { songs: 60, ..GeneratorConfig::benchmark() };
    let lm = random_bigram(config.favoured, 21)?;
    let songs: Vec<Song> = generate_corpus(&lm, &config, 21, true)?
        .into_iter()
        .map(|s| Song {
            id: s.id,
            reference: s.segments,
            posteriors: s.posteriors.unwrap(),
        })
        .collect();
    let modes = [DecodeMode::None, DecodeMode::Dur, DecodeMode::NGram(1), DecodeMode::NGram(2)];
    let cv = cross_validate(&songs, &modes, 4, &TemporalConfig::default(), 1.0, 1)?;
    for (mode, report) in &cv.results {
        println!("{:>7}: WCSR {:6.2}%", mode.to_string(), 100.0 * report.wcsr());
    }
    Ok(())
}
