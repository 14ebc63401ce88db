//! Frame-wise acoustic posteriors: the matrix type, its CSV file format,
//! post-hoc calibration, target smoothing, a synthetic simulator and a toy
//! linear softmax classifier.

mod calibrate;
mod simulate;
mod toy;

pub use calibrate::{apply_temperature, one_hot, smooth_targets, SmoothingSpec, TEMPERATURE_FLOOR};
pub use simulate::{chroma_similarity, simulate_posteriors, SimulatorParams};
pub use toy::{synth_features, ToyModel, TrainConfig, TrainReport};

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Row-sum tolerance applied when reading posterior files.
pub const FILE_ROW_SUM_TOLERANCE: f64 = 1e-4;

/// Dense row-major matrix of reals used for features, targets and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidData(format!(
                "{} values do not fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidData("ragged matrix rows".into()));
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Copy of the rows selected by `index`, in that order.
    pub fn select_rows(&self, index: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(index.len(), self.cols);
        for (i, &r) in index.iter().enumerate() {
            out.row_mut(i).copy_from_slice(self.row(r));
        }
        out
    }

    /// Stack matrices with equal column counts.
    pub fn vstack(parts: &[Matrix]) -> Result<Matrix> {
        let cols = parts.first().map_or(0, |m| m.cols);
        if parts.iter().any(|m| m.cols != cols) {
            return Err(Error::InvalidData("cannot stack matrices of different widths".into()));
        }
        let data: Vec<f64> = parts.iter().flat_map(|m| m.data.iter().copied()).collect();
        let rows = parts.iter().map(|m| m.rows).sum();
        Ok(Matrix { rows, cols, data })
    }
}

/// `T x |Y|` matrix of per-frame class probabilities, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMatrix {
    frame_rate: f64,
    num_classes: usize,
    values: Vec<f64>,
}

impl PosteriorMatrix {
    /// Wrap row-major `values`. Entries must be finite and non-negative; rows
    /// are not required to be normalised (see [`PosteriorMatrix::check_rows`]).
    pub fn new(frame_rate: f64, num_classes: usize, values: Vec<f64>) -> Result<Self> {
        if num_classes == 0 || !values.len().is_multiple_of(num_classes) {
            return Err(Error::InvalidData(format!(
                "{} values do not form rows of {num_classes}",
                values.len()
            )));
        }
        if !(frame_rate > 0.0 && frame_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad frame rate {frame_rate}")));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidData(format!(
                "row {}: entry {} is not a finite non-negative number",
                i / num_classes,
                values[i]
            )));
        }
        Ok(PosteriorMatrix {
            frame_rate,
            num_classes,
            values,
        })
    }

    pub fn from_rows(frame_rate: f64, rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidData("ragged posterior rows".into()));
        }
        Self::new(frame_rate, n, rows.concat())
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_frames(&self) -> usize {
        self.values.len() / self.num_classes
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.num_classes..(t + 1) * self.num_classes]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.num_classes)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Index of the largest entry per row (lowest index on ties).
    pub fn argmax(&self) -> Vec<usize> {
        self.rows()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b })
                    .0
            })
            .collect()
    }

    /// Fail on the first row whose sum is off by more than `tolerance`.
    pub fn check_rows(&self, tolerance: f64) -> Result<()> {
        for (t, r) in self.rows().enumerate() {
            let s: f64 = r.iter().sum();
            if (s - 1.0).abs() > tolerance {
                return Err(Error::InvalidData(format!("row {t} sums to {s}, not 1")));
            }
        }
        Ok(())
    }

    /// CSV form: a `# frame_rate=<Hz>` line, a `frame,p0,...` header and one
    /// row per frame in 13-significant-digit scientific notation.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 20 + 64);
        let _ = writeln!(out, "# frame_rate={}", self.frame_rate);
        out.push_str("frame");
        for j in 0..self.num_classes {
            let _ = write!(out, ",p{j}");
        }
        out.push('\n');
        for (t, r) in self.rows().enumerate() {
            let _ = write!(out, "{t}");
            for v in r {
                let _ = write!(out, ",{v:.12e}");
            }
            out.push('\n');
        }
        out
    }

    /// Parse the CSV form, requiring exactly `num_classes` probability columns
    /// and rows summing to 1 within [`FILE_ROW_SUM_TOLERANCE`].
    pub fn from_csv(text: &str, num_classes: usize) -> Result<Self> {
        let mut frame_rate = None;
        let mut header_seen = false;
        let mut values = Vec::new();
        let mut row = 0usize;
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                if let Some(v) = meta.trim().strip_prefix("frame_rate=") {
                    frame_rate = Some(
                        v.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::parse(lineno, format!("bad frame rate {v:?}")))?,
                    );
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if !header_seen {
                if fields.first().map(|f| f.trim()) != Some("frame") {
                    return Err(Error::parse(lineno, "expected `frame,p0,...` header"));
                }
                if fields.len() != num_classes + 1 {
                    return Err(Error::VocabularyMismatch {
                        expected: num_classes,
                        actual: fields.len() - 1,
                    });
                }
                header_seen = true;
                continue;
            }
            if fields.len() != num_classes + 1 {
                return Err(Error::parse(
                    lineno,
                    format!("row {row} has {} columns, expected {}", fields.len(), num_classes + 1),
                ));
            }
            let mut sum = 0.0;
            for f in &fields[1..] {
                let v: f64 = f
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("bad probability {f:?}")))?;
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::parse(lineno, format!("row {row}: invalid probability {v}")));
                }
                sum += v;
                values.push(v);
            }
            if (sum - 1.0).abs() > FILE_ROW_SUM_TOLERANCE {
                return Err(Error::parse(lineno, format!("row {row} sums to {sum}, not 1")));
            }
            row += 1;
        }
        if !header_seen {
            return Err(Error::parse(0, "missing header"));
        }
        let frame_rate = frame_rate.ok_or_else(|| Error::parse(0, "missing `# frame_rate=` line"))?;
        Self::new(frame_rate, num_classes, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PosteriorMatrix {
        PosteriorMatrix::from_rows(
            10.0,
            &[vec![0.1, 0.2, 0.7], vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], vec![0.0, 1.0, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let m = sample();
        let text = m.to_csv();
        assert!(text.starts_with("# frame_rate=10\nframe,p0,p1,p2\n"));
        let back = PosteriorMatrix::from_csv(&text, 3).unwrap();
        assert_eq!(back.frame_rate(), 10.0);
        for (a, b) in m.values().iter().zip(back.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn column_count_mismatch() {
        let text = sample().to_csv();
        assert!(matches!(
            PosteriorMatrix::from_csv(&text, 4),
            Err(Error::VocabularyMismatch { expected: 4, actual: 3 })
        ));
        let short_row = "# frame_rate=10\nframe,p0,p1\n0,0.5\n";
        assert!(PosteriorMatrix::from_csv(short_row, 2).is_err());
    }

    #[test]
    fn rejects_bad_row_sum() {
        let text = "# frame_rate=10\nframe,p0,p1\n0,0.5,0.5\n1,0.25,0.25\n";
        let err = PosteriorMatrix::from_csv(text, 2).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
        // within tolerance
        let ok = "# frame_rate=10\nframe,p0,p1\n0,0.50004,0.5\n";
        assert!(PosteriorMatrix::from_csv(ok, 2).is_ok());
        assert!(PosteriorMatrix::from_csv("frame,p0,p1\n0,0.5,0.5\n", 2).is_err());
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(sample().argmax(), vec![2, 0, 1]);
    }

    #[test]
    fn constructor_checks() {
        assert!(PosteriorMatrix::new(10.0, 3, vec![0.5; 4]).is_err());
        assert!(PosteriorMatrix::new(10.0, 2, vec![-0.1, 1.1]).is_err());
        assert!(PosteriorMatrix::new(0.0, 2, vec![0.5, 0.5]).is_err());
        assert!(sample().check_rows(1e-9).is_ok());
        let bad = PosteriorMatrix::new(10.0, 2, vec![0.5, 0.4]).unwrap();
        assert!(bad.check_rows(1e-6).is_err());
    }
}
