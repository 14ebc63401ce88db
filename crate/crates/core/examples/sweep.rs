//! A small grid over softmax temperature, target smoothing and decode mode,
//! with the toy classifier supplying cross-validated posteriors.

use chordhmm::acoustic::TrainConfig;
use chordhmm::pipeline::{sweep, sweep_csv, DecodeMode, PosteriorSource, SmoothingChoice, Song, SweepGrid, TemporalConfig, ToyConfig};
use chordhmm::synth::{generate_corpus, random_bigram, GeneratorConfig};

pub fn main() -> chordhmm::Result<()> {
    let config = GeneratorConfig { songs: 16, ..Default::default() };
    let lm = random_bigram(config.favoured, 5)?;
    let songs: Vec<Song> = generate_corpus(&lm, &config, 5, true)?
        .into_iter()
        .map(|s| Song {
            id: s.id,
            reference: s.segments,
            posteriors: s.posteriors.unwrap(),
        })
        .collect();
    let grid = SweepGrid {
        temperatures: vec![1.0, 3.0],
        smoothing: vec![SmoothingChoice::None, SmoothingChoice::Uniform(0.8), SmoothingChoice::Smear(5)],
        modes: vec![DecodeMode::None, DecodeMode::NGram(2)],
    };
    let toy = ToyConfig {
        feature_noise: 0.6,
        train: TrainConfig { epochs: 60, learning_rate: 0.5 },
        stride: 2,
        seed: 1,
    };
    let (rows, _) = sweep(&songs, &grid, &PosteriorSource::Toy(toy), 4, &TemporalConfig::default(), false, 1)?;
    print!("{}", sweep_csv(&rows));
    Ok(())
}
