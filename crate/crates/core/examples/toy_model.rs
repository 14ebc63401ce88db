//! Train the softmax toy classifier on noisy chroma features with hard and
//! smoothed targets, and compare accuracy and confidence.

use chordhmm::acoustic::{one_hot, smooth_targets, synth_features, Matrix, SmoothingSpec, ToyModel, TrainConfig};
use chordhmm::{ChordSymbol, NUM_CLASSES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn main() -> chordhmm::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let labels: Vec<ChordSymbol> = (0..3000)
        .map(|_| ChordSymbol::from_index(rng.random_range(0..NUM_CLASSES)).unwrap())
        .collect();
    let idx: Vec<usize> = labels.iter().map(|c| c.index()).collect();
    let x = synth_features(&labels, 0.3, &mut rng);
    let hard = one_hot(&idx, NUM_CLASSES);

    for (name, targets) in [
        ("one-hot", hard.clone()),
        ("uniform 0.9", smooth_targets(&hard, &SmoothingSpec::Uniform { beta: 0.9 })?),
    ] {
        let (model, report) = ToyModel::train(&x, &targets, TrainConfig::default())?;
        let p: Matrix = model.predict(&x);
        let mut hits = 0;
        let mut conf = 0.0;
        for (t, row) in p.iter_rows().enumerate() {
            let (best, top) = row.iter().enumerate().fold((0, 0.0), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
            hits += usize::from(best == idx[t]);
            conf += top;
        }
        println!(
            "{name:>12}: loss {:.3} -> {:.3}, accuracy {:.3}, mean top probability {:.3}",
            report.losses[0],
            report.losses.last().unwrap(),
            hits as f64 / idx.len() as f64,
            conf / idx.len() as f64
        );
    }
    Ok(())
}
