//! A linear softmax frame classifier trained by full-batch gradient descent
//! on (possibly smoothed) targets, and synthetic chroma-like features to train
//! it on.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::corpus::ChordSymbol;
use crate::error::{Error, Result};

use super::{Matrix, PosteriorMatrix};

/// Training stops with an error after this many consecutive loss increases.
const DIVERGENCE_PATIENCE: usize = 5;

/// Counts consecutive loss increases.
#[derive(Debug, Default)]
struct RiseCounter {
    last: Option<f64>,
    rising: usize,
}

impl RiseCounter {
    /// Record a loss; true once it has risen `DIVERGENCE_PATIENCE` times in a row.
    fn observe(&mut self, loss: f64) -> bool {
        match self.last {
            Some(prev) if loss > prev => self.rising += 1,
            _ => self.rising = 0,
        }
        self.last = Some(loss);
        self.rising >= DIVERGENCE_PATIENCE
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            learning_rate: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean cross-entropy before each update, plus the final loss.
    pub losses: Vec<f64>,
}

/// `softmax(x W + b)` over `classes` outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    /// `features x classes`
    weights: Matrix,
    bias: Vec<f64>,
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

fn check_finite(m: &Matrix, what: &str) -> Result<()> {
    if m.data().iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidData(format!("{what} contain non-finite values")))
    }
}

impl ToyModel {
    pub fn zeros(features: usize, classes: usize) -> Self {
        ToyModel {
            weights: Matrix::zeros(features, classes),
            bias: vec![0.0; classes],
        }
    }

    /// Random weights with standard deviation `scale`.
    pub fn random<R: Rng + ?Sized>(features: usize, classes: usize, scale: f64, rng: &mut R) -> Self {
        let mut m = Self::zeros(features, classes);
        for w in m.weights.data_mut().iter_mut().chain(m.bias.iter_mut()) {
            *w = scale * rng.sample::<f64, _>(StandardNormal);
        }
        m
    }

    pub fn num_features(&self) -> usize {
        self.weights.rows()
    }

    pub fn num_classes(&self) -> usize {
        self.weights.cols()
    }

    /// All parameters, weights row-major then bias.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.weights.data().to_vec();
        p.extend_from_slice(&self.bias);
        p
    }

    pub fn set_params(&mut self, params: &[f64]) {
        let nw = self.weights.data().len();
        assert_eq!(params.len(), nw + self.bias.len());
        self.weights.data_mut().copy_from_slice(&params[..nw]);
        self.bias.copy_from_slice(&params[nw..]);
    }

    fn scores_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.bias);
        for (f, &xf) in x.iter().enumerate() {
            if xf != 0.0 {
                for (o, w) in out.iter_mut().zip(self.weights.row(f)) {
                    *o += xf * w;
                }
            }
        }
    }

    /// Class probabilities for each feature row.
    pub fn predict(&self, features: &Matrix) -> Matrix {
        let c = self.num_classes();
        let mut out = Matrix::zeros(features.rows(), c);
        for (t, x) in features.iter_rows().enumerate() {
            let row = out.row_mut(t);
            self.scores_into(x, row);
            softmax_in_place(row);
        }
        out
    }

    pub fn predict_posteriors(&self, features: &Matrix, frame_rate: f64) -> Result<PosteriorMatrix> {
        let p = self.predict(features);
        PosteriorMatrix::new(frame_rate, p.cols(), p.data().to_vec())
    }

    /// Mean cross-entropy `-1/n sum_t sum_c y_tc ln q_tc` and its gradient
    /// with respect to [`ToyModel::params`].
    pub fn loss_and_gradient(&self, features: &Matrix, targets: &Matrix) -> (f64, Vec<f64>) {
        let c = self.num_classes();
        let f = self.num_features();
        let n = features.rows().max(1) as f64;
        let mut grad = vec![0.0; f * c + c];
        let mut q = vec![0.0; c];
        let mut loss = 0.0;
        for (x, y) in features.iter_rows().zip(targets.iter_rows()) {
            self.scores_into(x, &mut q);
            softmax_in_place(&mut q);
            for (yc, qc) in y.iter().zip(&q) {
                if *yc > 0.0 {
                    loss -= yc * qc.max(f64::MIN_POSITIVE).ln();
                }
            }
            // d loss / d score = q - y (targets sum to one)
            for j in 0..c {
                q[j] -= y[j];
            }
            for (fi, &xf) in x.iter().enumerate() {
                if xf != 0.0 {
                    let g = &mut grad[fi * c..(fi + 1) * c];
                    for (gj, dj) in g.iter_mut().zip(&q) {
                        *gj += xf * dj;
                    }
                }
            }
            for (gj, dj) in grad[f * c..].iter_mut().zip(&q) {
                *gj += dj;
            }
        }
        for g in grad.iter_mut() {
            *g /= n;
        }
        (loss / n, grad)
    }

    /// Plain full-batch gradient descent from zero weights.
    pub fn train(features: &Matrix, targets: &Matrix, config: TrainConfig) -> Result<(ToyModel, TrainReport)> {
        if features.rows() != targets.rows() {
            return Err(Error::InvalidData(format!(
                "{} feature rows but {} target rows",
                features.rows(),
                targets.rows()
            )));
        }
        if features.rows() == 0 {
            return Err(Error::InvalidData("no training frames".into()));
        }
        check_finite(features, "features")?;
        check_finite(targets, "targets")?;
        for (t, row) in targets.iter_rows().enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-6 || row.iter().any(|v| *v < 0.0) {
                return Err(Error::InvalidData(format!("target row {t} is not a distribution")));
            }
        }
        if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        let mut model = ToyModel::zeros(features.cols(), targets.cols());
        let mut params = model.params();
        let mut losses = Vec::with_capacity(config.epochs + 1);
        let mut rises = RiseCounter::default();
        for epoch in 0..=config.epochs {
            let (loss, grad) = model.loss_and_gradient(features, targets);
            if !loss.is_finite() {
                return Err(Error::Numerical(format!("loss became {loss} at epoch {epoch}")));
            }
            if rises.observe(loss) {
                return Err(Error::Numerical(format!(
                    "training diverged: loss rose for {DIVERGENCE_PATIENCE} epochs \
                     (now {loss:.6} at epoch {epoch}); lower the learning rate"
                )));
            }
            losses.push(loss);
            if epoch == config.epochs {
                break;
            }
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= config.learning_rate * g;
            }
            if params.iter().any(|p| !p.is_finite()) {
                return Err(Error::Numerical(format!(
                    "parameters became non-finite after epoch {epoch}; lower the learning rate"
                )));
            }
            model.set_params(&params);
        }
        Ok((model, TrainReport { losses }))
    }

    /// Weights as CSV: header `feature,c0,...`, one row per input feature and
    /// a final `bias` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature");
        for j in 0..self.num_classes() {
            let _ = write!(out, ",c{j}");
        }
        out.push('\n');
        for (f, row) in self.weights.iter_rows().enumerate() {
            let _ = write!(out, "{f}");
            for w in row {
                let _ = write!(out, ",{w:e}");
            }
            out.push('\n');
        }
        out.push_str("bias");
        for b in &self.bias {
            let _ = write!(out, ",{b:e}");
        }
        out.push('\n');
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut bias = None;
        let mut width = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if i == 0 {
                width = Some(fields.len() - 1);
                continue;
            }
            if Some(fields.len() - 1) != width {
                return Err(Error::parse(i + 1, "wrong number of columns"));
            }
            let vals = fields[1..]
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| Error::parse(i + 1, "bad weight"))?;
            if fields[0] == "bias" {
                bias = Some(vals);
            } else {
                rows.push(vals);
            }
        }
        let bias = bias.ok_or_else(|| Error::parse(0, "missing bias row"))?;
        let mut weights = Matrix::from_rows(&rows)?;
        if rows.is_empty() {
            weights = Matrix::zeros(0, bias.len());
        }
        Ok(ToyModel { weights, bias })
    }
}

/// Noisy 12-bin chroma features for frame labels: the unit-norm triad
/// template (flat for no-chord) plus Gaussian noise of standard deviation
/// `noise`.
pub fn synth_features<R: Rng + ?Sized>(labels: &[ChordSymbol], noise: f64, rng: &mut R) -> Matrix {
    let mut m = Matrix::zeros(labels.len(), 12);
    for (t, l) in labels.iter().enumerate() {
        let row = m.row_mut(t);
        let template = super::simulate::chroma_template(*l);
        for (v, c) in row.iter_mut().zip(template) {
            *v = c + noise * rng.sample::<f64, _>(StandardNormal);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustic::{one_hot, smooth_targets, SmoothingSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn separable(n: usize, rng: &mut ChaCha8Rng) -> (Matrix, Vec<usize>) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let y = i % 2;
            let centre = if y == 0 { -2.0 } else { 2.0 };
            let a: f64 = centre + 0.5 * rng.sample::<f64, _>(StandardNormal);
            let b: f64 = rng.sample::<f64, _>(StandardNormal);
            rows.push(vec![a, b]);
            labels.push(y);
        }
        (Matrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn learns_separable_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (x, y) = separable(200, &mut rng);
        let cfg = TrainConfig { epochs: 300, learning_rate: 0.5 };
        let (model, report) = ToyModel::train(&x, &one_hot(&y, 2), cfg).unwrap();
        let pred = model.predict_posteriors(&x, 10.0).unwrap().argmax();
        let acc = pred.iter().zip(&y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64;
        assert!(acc >= 0.99, "accuracy {acc}");
        assert!(report.losses.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    fn finite_difference_check(seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, c, n) = (4, 3, 7);
        let x = Matrix::from_vec(n, f, (0..n * f).map(|_| rng.sample(StandardNormal)).collect()).unwrap();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let y = smooth_targets(&one_hot(&labels, c), &SmoothingSpec::Uniform { beta: 0.8 }).unwrap();
        let mut model = ToyModel::random(f, c, 1.0, &mut rng);
        let (_, grad) = model.loss_and_gradient(&x, &y);
        let params = model.params();
        let h = 1e-5;
        let mut diff2 = 0.0;
        let mut norm2 = 0.0;
        for i in 0..params.len() {
            let mut p = params.clone();
            p[i] += h;
            model.set_params(&p);
            let up = model.loss_and_gradient(&x, &y).0;
            p[i] -= 2.0 * h;
            model.set_params(&p);
            let down = model.loss_and_gradient(&x, &y).0;
            let fd = (up - down) / (2.0 * h);
            diff2 += (fd - grad[i]).powi(2);
            norm2 += fd.powi(2);
        }
        // relative error of the whole gradient vector
        (diff2 / norm2).sqrt()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..100 {
            let rel = finite_difference_check(seed);
            assert!(rel <= 1e-4, "seed {seed}: relative error {rel}");
        }
    }

    #[test]
    fn divergence_rule() {
        let mut c = RiseCounter::default();
        let hits: Vec<bool> = [1.0, 2.0, 3.0, 4.0, 5.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]
            .iter()
            .map(|&l| c.observe(l))
            .collect();
        assert_eq!(hits.iter().position(|&h| h), Some(10));
        let mut c = RiseCounter::default();
        assert!([1.0, 2.0, 3.0, 4.0, 5.0].iter().all(|&l| !c.observe(l)));
        assert!(c.observe(6.0));
    }

    #[test]
    fn overflowing_training_is_reported() {
        let x = Matrix::from_rows(&[vec![1e200], vec![-1e200]]).unwrap();
        let cfg = TrainConfig { epochs: 10, learning_rate: 1e200 };
        let err = ToyModel::train(&x, &one_hot(&[0, 1], 2), cfg).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)), "{err}");
    }

    #[test]
    fn rejects_non_finite_inputs() {
        let x = Matrix::from_rows(&[vec![f64::NAN]]).unwrap();
        assert!(ToyModel::train(&x, &one_hot(&[0], 2), TrainConfig::default()).is_err());
    }

    #[test]
    fn smoothing_lowers_confidence() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (x, y) = separable(200, &mut rng);
        let hot = one_hot(&y, 2);
        let cfg = TrainConfig { epochs: 300, learning_rate: 0.5 };
        let mean_max = |targets: &Matrix| {
            let (m, _) = ToyModel::train(&x, targets, cfg).unwrap();
            let p = m.predict(&x);
            p.iter_rows().map(|r| r.iter().cloned().fold(0.0, f64::max)).sum::<f64>() / p.rows() as f64
        };
        let sharp = mean_max(&hot);
        let smooth = mean_max(&smooth_targets(&hot, &SmoothingSpec::Uniform { beta: 0.9 }).unwrap());
        assert!(smooth < sharp, "smoothed {smooth} vs one-hot {sharp}");
    }

    #[test]
    fn weights_csv_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = ToyModel::random(3, 4, 0.7, &mut rng);
        assert_eq!(ToyModel::from_csv(&m.to_csv()).unwrap(), m);
    }
}
