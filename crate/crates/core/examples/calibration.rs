//! Temperature scaling of posteriors and the three target-smoothing schemes.

use chordhmm::acoustic::{apply_temperature, one_hot, smooth_targets, PosteriorMatrix, SmoothingSpec};

fn show(name: &str, row: &[f64]) {
    let cells: Vec<String> = row.iter().map(|v| format!("{v:.3}")).collect();
    println!("{name:>14}: {}", cells.join(" "));
}

pub fn main() -> chordhmm::Result<()> {
    let post = PosteriorMatrix::from_rows(10.0, &[vec![0.7, 0.2, 0.05, 0.05]])?;
    for t in [0.5, 1.0, 2.0, 10.0] {
        show(&format!("T = {t}"), apply_temperature(&post, t)?.row(0));
    }

    let targets = one_hot(&[0, 0, 0, 1, 1, 1, 1, 2], 4);
    let marginal = vec![0.5, 0.3, 0.15, 0.05];
    let specs = [
        SmoothingSpec::Uniform { beta: 0.9 },
        SmoothingSpec::Unigram { beta: 0.9, marginal },
        SmoothingSpec::Smear { width: 3 },
    ];
    for spec in &specs {
        let smoothed = smooth_targets(&targets, spec)?;
        println!("{}:", spec.kind());
        for t in [2, 3] {
            show(&format!("frame {t}"), smoothed.row(t));
        }
    }
    Ok(())
}
