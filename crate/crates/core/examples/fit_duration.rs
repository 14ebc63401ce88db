//! Recover a negative binomial segment-duration model from samples.

use chordhmm::durmodel::{fit_duration, histogram_csv, DurationModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn main() -> chordhmm::Result<()> {
    let truth = DurationModel::new(3, 0.15)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let durations: Vec<usize> = (0..20_000).map(|_| truth.sample(&mut rng)).collect();

    let fit = fit_duration(&durations, 16)?;
    println!(
        "true K={} p={}  fitted K={} p={:.4}  mean {:.2} frames  LL {:.1}",
        truth.stages(),
        truth.p(),
        fit.model.stages(),
        fit.model.p(),
        fit.model.mean(),
        fit.log_likelihood
    );
    for line in histogram_csv(&durations, &fit.model).lines().take(12) {
        println!("{line}");
    }
    Ok(())
}
