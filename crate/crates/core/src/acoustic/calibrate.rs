use crate::error::{Error, Result};

use super::{Matrix, PosteriorMatrix};

/// Probabilities are floored at this value before taking logs.
pub const TEMPERATURE_FLOOR: f64 = 1e-12;

/// Temperature softmax applied to log-posteriors: each row `p` becomes
/// `p^(1/T)` renormalised. `T = 1` is the identity, `T > 1` flattens and
/// `T < 1` sharpens; the argmax never changes.
pub fn apply_temperature(posteriors: &PosteriorMatrix, temperature: f64) -> Result<PosteriorMatrix> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let mut out = Vec::with_capacity(posteriors.values().len());
    let mut logits = vec![0.0; posteriors.num_classes()];
    for row in posteriors.rows() {
        for (z, p) in logits.iter_mut().zip(row) {
            *z = p.max(TEMPERATURE_FLOOR).ln() / temperature;
        }
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let norm: f64 = logits.iter().map(|z| (z - max).exp()).sum();
        out.extend(logits.iter().map(|z| (z - max).exp() / norm));
    }
    PosteriorMatrix::new(posteriors.frame_rate(), posteriors.num_classes(), out)
}

/// How one-hot training targets are softened.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothingSpec {
    /// Keep `beta` on the true class, spread `1 - beta` evenly over the others.
    Uniform { beta: f64 },
    /// `beta * onehot + (1 - beta) * marginal`; the true class also receives
    /// its marginal share.
    Unigram { beta: f64, marginal: Vec<f64> },
    /// Centred running mean of odd width over time, truncated at the edges.
    Smear { width: usize },
}

impl SmoothingSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            SmoothingSpec::Uniform { .. } => "uniform",
            SmoothingSpec::Unigram { .. } => "unigram",
            SmoothingSpec::Smear { .. } => "smear",
        }
    }

    fn validate(&self, num_classes: usize) -> Result<()> {
        let check_beta = |beta: f64| {
            if beta > 0.0 && beta <= 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("beta must lie in (0, 1], got {beta}")))
            }
        };
        match self {
            SmoothingSpec::Uniform { beta } => check_beta(*beta),
            SmoothingSpec::Unigram { beta, marginal } => {
                check_beta(*beta)?;
                if marginal.len() != num_classes {
                    return Err(Error::VocabularyMismatch {
                        expected: num_classes,
                        actual: marginal.len(),
                    });
                }
                let total: f64 = marginal.iter().sum();
                if marginal.iter().any(|m| !(*m >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(
                        "class marginal must be a probability distribution".into(),
                    ));
                }
                Ok(())
            }
            SmoothingSpec::Smear { width } => {
                if *width == 0 || width % 2 == 0 {
                    Err(Error::InvalidArgument(format!(
                        "smearing width must be odd and >= 1, got {width}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// One-hot rows for class indices.
pub fn one_hot(labels: &[usize], num_classes: usize) -> Matrix {
    let mut m = Matrix::zeros(labels.len(), num_classes);
    for (t, &l) in labels.iter().enumerate() {
        m.row_mut(t)[l] = 1.0;
    }
    m
}

/// Smooth one-hot `targets` according to `spec`.
pub fn smooth_targets(targets: &Matrix, spec: &SmoothingSpec) -> Result<Matrix> {
    let n = targets.cols();
    spec.validate(n)?;
    let mut hot = Vec::with_capacity(targets.rows());
    for (t, row) in targets.iter_rows().enumerate() {
        let ones: Vec<usize> = (0..n).filter(|&j| row[j] == 1.0).collect();
        if ones.len() != 1 || row.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidData(format!("target row {t} is not one-hot")));
        }
        hot.push(ones[0]);
    }
    let mut out = Matrix::zeros(targets.rows(), n);
    match spec {
        SmoothingSpec::Uniform { beta } => {
            let rest = if n > 1 { (1.0 - beta) / (n - 1) as f64 } else { 0.0 };
            for (t, &y) in hot.iter().enumerate() {
                let row = out.row_mut(t);
                row.fill(rest);
                row[y] = *beta;
            }
        }
        SmoothingSpec::Unigram { beta, marginal } => {
            for (t, &y) in hot.iter().enumerate() {
                let row = out.row_mut(t);
                for (v, m) in row.iter_mut().zip(marginal) {
                    *v = (1.0 - beta) * m;
                }
                row[y] += beta;
            }
        }
        SmoothingSpec::Smear { width } => {
            let half = width / 2;
            let len = hot.len();
            for t in 0..len {
                let lo = t.saturating_sub(half);
                let hi = (t + half).min(len - 1);
                let share = 1.0 / (hi - lo + 1) as f64;
                let row = out.row_mut(t);
                for &y in &hot[lo..=hi] {
                    row[y] += share;
                }
            }
        }
    }
    Ok(out)
}
