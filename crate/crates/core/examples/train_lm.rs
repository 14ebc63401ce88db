//! Fit chord-change N-gram models of several orders, choosing the
//! pseudo-count on a held-out fold, and compare perplexities.

use chordhmm::chordlm::{perplexity, NGramModel, Token};
use chordhmm::corpus::change_sequence;
use chordhmm::pipeline::{fit_lm, AlphaChoice};
use chordhmm::synth::{generate_corpus, random_bigram, GeneratorConfig};
use chordhmm::NUM_CLASSES;

pub fn main() -> chordhmm::Result<()> {
    let generator = random_bigram(3, 1)?;
    let config = GeneratorConfig { songs: 120, ..Default::default() };
    let songs = generate_corpus(&generator, &config, 7, false)?;
    let seqs: Vec<Vec<usize>> = songs.iter().map(|s| change_sequence(&s.frames.labels)).collect();
    let (train, test) = seqs.split_at(100);

    for order in 1..=3 {
        let fit = fit_lm(train, order, NUM_CLASSES, &AlphaChoice::default(), 3)?;
        println!(
            "{order}-gram: alpha {:<5} train ppl {:7.3}  test ppl {:7.3}",
            fit.model.alpha(),
            fit.train_perplexity,
            perplexity(&fit.model, test)
        );
    }

    // hand-checkable bigram
    let lm = NGramModel::fit(&[vec![0, 14, 0, 10]], 2, 0.5, NUM_CLASSES)?;
    println!("P(G | C) = {:.5} (1.5 / 14)", lm.prob(&[Token::Sym(0)], 14));
    print!("{}", lm.to_text());
    Ok(())
}
