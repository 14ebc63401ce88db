//! Weighted chord symbol recall, song-level folds and result tables.
//!
//! WCSR is `t_c / t_a`: `t_a` is the annotated time carrying a major or minor
//! chord (no-chord is excluded) and `t_c` the part of it where the estimate
//! has the same label. Both are computed by exact interval intersection and
//! pooled over songs by summing durations, so long songs weigh more.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::AnnotatedSegment;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SongScore {
    pub song: String,
    pub t_c: f64,
    pub t_a: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WcsrReport {
    /// Seconds of correctly recognised major/minor annotation.
    pub t_c: f64,
    /// Seconds of major/minor annotation.
    pub t_a: f64,
    pub songs: Vec<SongScore>,
}

impl WcsrReport {
    /// `t_c / t_a`, or 0 when nothing was annotated.
    pub fn wcsr(&self) -> f64 {
        if self.t_a > 0.0 {
            self.t_c / self.t_a
        } else {
            0.0
        }
    }
}

fn check_segments(segs: &[AnnotatedSegment], which: &str) -> Result<()> {
    for (i, w) in segs.windows(2).enumerate() {
        if w[1].start < w[0].end {
            return Err(Error::InvalidData(format!(
                "{which} segments {i} and {} overlap or are out of order",
                i + 1
            )));
        }
    }
    if let Some(s) = segs.iter().find(|s| !(s.end >= s.start)) {
        return Err(Error::InvalidData(format!("{which} segment ends before it starts at {}", s.start)));
    }
    Ok(())
}

/// Score one estimate against its reference. Estimate time outside the
/// reference span is ignored; reference time the estimate does not cover
/// counts as wrong.
pub fn wcsr(reference: &[AnnotatedSegment], estimate: &[AnnotatedSegment]) -> Result<WcsrReport> {
    check_segments(reference, "reference")?;
    check_segments(estimate, "estimate")?;
    let mut t_a = 0.0;
    let mut t_c = 0.0;
    let mut j = 0;
    for r in reference.iter().filter(|r| !r.label.is_no_chord()) {
        t_a += r.end - r.start;
        while j < estimate.len() && estimate[j].end <= r.start {
            j += 1;
        }
        let mut k = j;
        while k < estimate.len() && estimate[k].start < r.end {
            let e = &estimate[k];
            if e.label == r.label {
                let overlap = e.end.min(r.end) - e.start.max(r.start);
                if overlap > 0.0 {
                    t_c += overlap;
                }
            }
            k += 1;
        }
    }
    Ok(WcsrReport {
        t_c,
        t_a,
        songs: Vec::new(),
    })
}

/// [`wcsr`] with the song recorded in the per-song breakdown.
pub fn score_song(song: &str, reference: &[AnnotatedSegment], estimate: &[AnnotatedSegment]) -> Result<WcsrReport> {
    let mut r = wcsr(reference, estimate)?;
    r.songs.push(SongScore {
        song: song.to_string(),
        t_c: r.t_c,
        t_a: r.t_a,
    });
    Ok(r)
}

/// Pool reports by summing `t_c` and `t_a`.
pub fn aggregate(reports: &[WcsrReport]) -> WcsrReport {
    let mut out = WcsrReport::default();
    for r in reports {
        out.t_c += r.t_c;
        out.t_a += r.t_a;
        out.songs.extend(r.songs.iter().cloned());
    }
    out
}

/// Assign each song to one of `n_folds` folds by a seeded shuffle. Fold sizes
/// differ by at most one. Returns the fold of each input song, in order.
pub fn make_folds<S: AsRef<str>>(songs: &[S], n_folds: usize, seed: u64) -> Result<Vec<usize>> {
    if n_folds < 2 {
        return Err(Error::InvalidArgument("need at least 2 folds".into()));
    }
    if songs.len() < n_folds {
        return Err(Error::InvalidArgument(format!(
            "{} songs cannot fill {n_folds} folds",
            songs.len()
        )));
    }
    let mut order: Vec<usize> = (0..songs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![0; songs.len()];
    for (pos, &song) in order.iter().enumerate() {
        folds[song] = pos % n_folds;
    }
    Ok(folds)
}

/// Per-song table: `song,<system>...`, one row per song in the first
/// system's order, then a `pooled` row.
pub fn song_table_csv(systems: &[(String, WcsrReport)]) -> String {
    let mut out = String::from("song");
    for (name, _) in systems {
        let _ = write!(out, ",{name}");
    }
    out.push('\n');
    if let Some((_, first)) = systems.first() {
        for (i, s) in first.songs.iter().enumerate() {
            out.push_str(&s.song);
            for (_, r) in systems {
                match r.songs.get(i) {
                    Some(x) if x.t_a > 0.0 => {
                        let _ = write!(out, ",{:.6}", x.t_c / x.t_a);
                    }
                    _ => out.push(','),
                }
            }
            out.push('\n');
        }
    }
    out.push_str("pooled");
    for (_, r) in systems {
        let _ = write!(out, ",{:.6}", r.wcsr());
    }
    out.push('\n');
    out
}

/// One-row ablation table, e.g. columns `none,dur,2-gram,3-gram`.
pub fn ablation_table_csv(systems: &[(String, WcsrReport)]) -> String {
    let header: Vec<&str> = systems.iter().map(|(n, _)| n.as_str()).collect();
    let row: Vec<String> = systems.iter().map(|(_, r)| format!("{:.6}", r.wcsr())).collect();
    format!("{}\n{}\n", header.join(","), row.join(","))
}
