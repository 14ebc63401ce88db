//! Build the flattened chord/duration state space and Viterbi-decode noisy
//! simulated posteriors, comparing against frame-wise argmax.

use chordhmm::chordlm::NGramModel;
use chordhmm::corpus::{change_sequence, run_lengths};
use chordhmm::decoder::{decode_argmax, StateSpace};
use chordhmm::synth::{generate_corpus, random_bigram, GeneratorConfig};
use chordhmm::NUM_CLASSES;

fn accuracy(a: &chordhmm::FrameSequence, b: &chordhmm::FrameSequence) -> f64 {
    a.labels.iter().zip(&b.labels).filter(|(x, y)| x == y).count() as f64 / a.len() as f64
}

pub fn main() -> chordhmm::Result<()> {
    let generator = random_bigram(3, 1)?;
    let config = GeneratorConfig { songs: 41, ..GeneratorConfig::benchmark() };
    let songs = generate_corpus(&generator, &config, 2, true)?;
    let (train, test) = songs.split_at(40);

    let seqs: Vec<Vec<usize>> = train.iter().map(|s| change_sequence(&s.frames.labels)).collect();
    let lm = NGramModel::fit(&seqs, 2, 0.1, NUM_CLASSES)?;
    let space = StateSpace::build(&lm, &config.duration)?;
    println!(
        "{} states ({} with histories fully observed), {} transitions",
        space.num_states(),
        space.num_full_states(),
        space.num_transitions()
    );

    let song = &test[0];
    let post = song.posteriors.as_ref().expect("simulated with posteriors");
    let argmax = decode_argmax(post)?;
    let best = space.viterbi(post)?;
    println!("{}: {} frames, {} reference segments", song.id, song.frames.len(), song.segments.len());
    println!("argmax : {:.3} frame accuracy, {} segments", accuracy(&argmax, &song.frames), run_lengths(&argmax.labels).len());
    println!("viterbi: {:.3} frame accuracy, {} segments, log prob {:.2}", accuracy(&best.labels, &song.frames), best.segments.len(), best.log_prob);
    Ok(())
}
