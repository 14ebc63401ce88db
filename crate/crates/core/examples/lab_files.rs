//! Parse a .lab annotation, reduce it to the 25-class vocabulary, sample it
//! into frames and recover the chord-change sequence.

use chordhmm::corpus::{change_sequence, parse_lab_with, reduce_chord, run_lengths, sample_frames, write_lab, Reduced, RejectPolicy};

const LAB: &str = "\
0.000 1.250 N
1.250 3.100 C:maj7
3.100 4.900 A:min7
4.900 6.000 F
6.000 7.500 G:7
7.500 8.000 X
";

pub fn main() -> chordhmm::Result<()> {
    for raw in ["C:maj7", "A:min7", "Eb:sus4", "Bb:dim", "X", "H:min"] {
        match reduce_chord(raw) {
            Reduced::Chord(c) => println!("{raw:>8} -> {c} (class {})", c.index()),
            other => println!("{raw:>8} -> {other:?}"),
        }
    }

    let segments = parse_lab_with(LAB, RejectPolicy::NoChord)?;
    print!("reduced:\n{}", write_lab(&segments));

    let frames = sample_frames(&segments, 10.0)?;
    let runs: Vec<String> = run_lengths(&frames.labels).iter().map(|(c, d)| format!("{c}x{d}")).collect();
    println!("{} frames at 10 Hz: {}", frames.len(), runs.join(" "));
    println!("change sequence (class indices): {:?}", change_sequence(&frames.labels));
    Ok(())
}
