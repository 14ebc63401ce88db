//! Chord annotations: `.lab` parsing, frame sampling, change sequences and run
//! lengths.

mod chord;

pub use chord::{reduce_chord, ChordSymbol, Mode, Reduced, RejectPolicy, NUM_CLASSES};

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Default analysis frame rate in Hz.
pub const DEFAULT_FRAME_RATE: f64 = 10.0;

/// A labelled time span `[start, end)` in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedSegment {
    pub start: f64,
    pub end: f64,
    pub label: ChordSymbol,
    /// Label text as it appeared in the source file, if any.
    pub raw: Option<String>,
}

impl AnnotatedSegment {
    pub fn new(start: f64, end: f64, label: ChordSymbol) -> Self {
        AnnotatedSegment {
            start,
            end,
            label,
            raw: None,
        }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Frame-wise chord labels at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub frame_rate: f64,
    pub labels: Vec<ChordSymbol>,
}

impl FrameSequence {
    pub fn new(frame_rate: f64, labels: Vec<ChordSymbol>) -> Self {
        FrameSequence { frame_rate, labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// CSV with header `frame,chord_index`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame,chord_index\n");
        for (t, c) in self.labels.iter().enumerate() {
            let _ = writeln!(out, "{t},{}", c.index());
        }
        out
    }

    /// Run-length segments with boundaries on frame edges.
    pub fn to_segments(&self) -> Vec<AnnotatedSegment> {
        let mut t = 0usize;
        run_lengths(&self.labels)
            .into_iter()
            .map(|(label, d)| {
                let seg = AnnotatedSegment::new(
                    t as f64 / self.frame_rate,
                    (t + d) as f64 / self.frame_rate,
                    label,
                );
                t += d;
                seg
            })
            .collect()
    }
}

/// Parse `.lab` annotation text, rejecting unknown labels.
pub fn parse_lab(text: &str) -> Result<Vec<AnnotatedSegment>> {
    parse_lab_with(text, RejectPolicy::Error)
}

/// Parse `.lab` annotation text: one `start end label` triple per line,
/// whitespace separated. Blank lines and `#` comments are skipped, CRLF is
/// accepted. Segments must be in time order and must not overlap.
pub fn parse_lab_with(text: &str, policy: RejectPolicy) -> Result<Vec<AnnotatedSegment>> {
    let mut segments: Vec<AnnotatedSegment> = Vec::new();
    let mut prev_end = f64::NEG_INFINITY;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 3 {
            return Err(Error::parse(lineno, "expected `start end label`"));
        }
        let start: f64 = fields[0]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad start time {:?}", fields[0])))?;
        let end: f64 = fields[1]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad end time {:?}", fields[1])))?;
        if !start.is_finite() || !end.is_finite() || start < 0.0 {
            return Err(Error::parse(lineno, "times must be finite and non-negative"));
        }
        if end <= start {
            return Err(Error::parse(lineno, format!("end {end} <= start {start}")));
        }
        if start < prev_end {
            return Err(Error::parse(
                lineno,
                format!("segment starting at {start} overlaps previous one ending at {prev_end}"),
            ));
        }
        // Labels never contain whitespace in Harte syntax, but tolerate it.
        let raw = fields[2..].join(" ");
        let label = match (reduce_chord(&raw), policy) {
            (Reduced::Chord(c), _) => c,
            (Reduced::Reject, RejectPolicy::NoChord) => ChordSymbol::NO_CHORD,
            (Reduced::Reject, RejectPolicy::Exclude) => {
                prev_end = end;
                continue;
            }
            (Reduced::Reject, RejectPolicy::Error) => {
                return Err(Error::parse(lineno, format!("unparseable chord label {raw:?}")))
            }
        };
        prev_end = end;
        segments.push(AnnotatedSegment {
            start,
            end,
            label,
            raw: Some(raw),
        });
    }
    Ok(segments)
}

/// Render segments in `.lab` format.
pub fn write_lab(segments: &[AnnotatedSegment]) -> String {
    let mut out = String::new();
    for s in segments {
        let _ = writeln!(out, "{:.6} {:.6} {}", s.start, s.end, s.label);
    }
    out
}

/// Sample segments at frame centres `(t + 0.5) / rate`, using half-open
/// `[start, end)` intervals. Frames not covered by any segment are no-chord.
pub fn sample_frames(segments: &[AnnotatedSegment], frame_rate: f64) -> Result<FrameSequence> {
    if !(frame_rate > 0.0 && frame_rate.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "frame rate must be positive, got {frame_rate}"
        )));
    }
    let last = segments
        .last()
        .ok_or_else(|| Error::InvalidData("no segments to sample".into()))?;
    let n_frames = (last.end * frame_rate).ceil() as usize;
    let mut labels = Vec::with_capacity(n_frames);
    let mut seg = 0usize;
    for t in 0..n_frames {
        let centre = (t as f64 + 0.5) / frame_rate;
        while seg < segments.len() && segments[seg].end <= centre {
            seg += 1;
        }
        let label = match segments.get(seg) {
            Some(s) if s.start <= centre => s.label,
            _ => ChordSymbol::NO_CHORD,
        };
        labels.push(label);
    }
    Ok(FrameSequence::new(frame_rate, labels))
}

/// Remove consecutive duplicates: `(a,a,b,b,a)` becomes `(a,b,a)`.
pub fn compress<T: PartialEq + Copy>(labels: &[T]) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(labels.len());
    for &l in labels {
        if out.last() != Some(&l) {
            out.push(l);
        }
    }
    out
}

/// Run-length encoding: `(a,a,b,b,a)` becomes `[(a,2),(b,2),(a,1)]`.
pub fn run_lengths<T: PartialEq + Copy>(labels: &[T]) -> Vec<(T, usize)> {
    let mut out: Vec<(T, usize)> = Vec::new();
    for &l in labels {
        match out.last_mut() {
            Some((prev, n)) if *prev == l => *n += 1,
            _ => out.push((l, 1)),
        }
    }
    out
}

/// Decode run-length pairs back into frame labels.
pub fn expand_runs<T: Copy>(runs: &[(T, usize)]) -> Vec<T> {
    runs.iter()
        .flat_map(|&(l, n)| std::iter::repeat_n(l, n))
        .collect()
}

/// Chord indices of a compressed sequence, the form the language model trains on.
pub fn change_sequence(labels: &[ChordSymbol]) -> Vec<usize> {
    compress(labels).into_iter().map(ChordSymbol::index).collect()
}
