//! The 25-class major/minor chord vocabulary and reduction of Harte-style
//! chord labels onto it.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Number of classes in the major/minor vocabulary (12 roots x 2 modes + no-chord).
pub const NUM_CLASSES: usize = 25;

const PITCH_NAMES: [&str; 12] = [
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Major,
    Minor,
}

/// One of the 25 chord classes.
///
/// Index layout: `root * 2 + mode` for roots C=0..B=11 (major=0, minor=1),
/// and 24 for no-chord.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChordSymbol(u8);

impl ChordSymbol {
    pub const NO_CHORD: ChordSymbol = ChordSymbol(24);

    pub fn new(root: u8, mode: Mode) -> Self {
        assert!(root < 12, "root pitch class out of range: {root}");
        let m = match mode {
            Mode::Major => 0,
            Mode::Minor => 1,
        };
        ChordSymbol(root * 2 + m)
    }

    pub fn from_index(index: usize) -> Option<Self> {
        (index < NUM_CLASSES).then_some(ChordSymbol(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_no_chord(self) -> bool {
        self == Self::NO_CHORD
    }

    /// Pitch class of the root, `None` for no-chord.
    pub fn root(self) -> Option<u8> {
        (!self.is_no_chord()).then_some(self.0 / 2)
    }

    pub fn mode(self) -> Option<Mode> {
        match (self.is_no_chord(), self.0 % 2) {
            (true, _) => None,
            (false, 0) => Some(Mode::Major),
            (false, _) => Some(Mode::Minor),
        }
    }

    /// Pitch classes of the triad (empty for no-chord).
    pub fn pitch_classes(self) -> Vec<u8> {
        match (self.root(), self.mode()) {
            (Some(r), Some(Mode::Major)) => vec![r, (r + 4) % 12, (r + 7) % 12],
            (Some(r), Some(Mode::Minor)) => vec![r, (r + 3) % 12, (r + 7) % 12],
            _ => Vec::new(),
        }
    }

    pub fn all() -> impl Iterator<Item = ChordSymbol> {
        (0..NUM_CLASSES as u8).map(ChordSymbol)
    }
}

impl fmt::Display for ChordSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.root(), self.mode()) {
            (Some(r), Some(Mode::Major)) => write!(f, "{}:maj", PITCH_NAMES[r as usize]),
            (Some(r), Some(Mode::Minor)) => write!(f, "{}:min", PITCH_NAMES[r as usize]),
            _ => f.write_str("N"),
        }
    }
}

impl FromStr for ChordSymbol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match reduce_chord(s) {
            Reduced::Chord(c) => Ok(c),
            Reduced::Reject => Err(Error::InvalidData(format!(
                "unparseable chord label {s:?}"
            ))),
        }
    }
}

/// Outcome of reducing a chord label to the major/minor vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduced {
    Chord(ChordSymbol),
    /// "X" or a label outside the grammar.
    Reject,
}

/// What to do with labels that reduce to [`Reduced::Reject`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RejectPolicy {
    /// Fail the parse.
    #[default]
    Error,
    /// Drop the segment; the gap later samples as no-chord.
    Exclude,
    /// Keep the segment, labelled no-chord.
    NoChord,
}

// Shorthands whose third is minor.
const MINOR_QUALITIES: &[&str] = &[
    "min", "min7", "minmaj7", "min6", "min9", "min11", "min13", "dim", "dim7", "hdim7",
];

// Everything else we accept maps to major, including suspended and power chords.
const MAJOR_QUALITIES: &[&str] = &[
    "maj", "maj7", "7", "maj6", "6", "9", "maj9", "11", "maj11", "13", "maj13", "aug", "sus2",
    "sus4", "1", "5",
];

fn parse_root(s: &str) -> Option<u8> {
    let mut chars = s.chars();
    let base: i32 = match chars.next()? {
        'C' => 0,
        'D' => 2,
        'E' => 4,
        'F' => 5,
        'G' => 7,
        'A' => 9,
        'B' => 11,
        _ => return None,
    };
    let mut offset = 0i32;
    for c in chars {
        match c {
            '#' => offset += 1,
            'b' => offset -= 1,
            _ => return None,
        }
    }
    Some((base + offset).rem_euclid(12) as u8)
}

fn is_interval(s: &str) -> bool {
    let s = s.strip_prefix('*').unwrap_or(s);
    let digits = s.trim_start_matches(['b', '#']);
    !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit())
}

/// Decide major/minor from the quality part (text after ':', bass removed).
fn parse_quality(q: &str) -> Option<Mode> {
    let (shorthand, intervals) = match q.find('(') {
        Some(open) => {
            let list = q[open + 1..].strip_suffix(')')?;
            let items: Vec<&str> = list.split(',').map(str::trim).collect();
            if items.iter().any(|i| !is_interval(i)) {
                return None;
            }
            (&q[..open], Some(items))
        }
        None => (q, None),
    };
    if shorthand.is_empty() {
        let items = intervals?;
        return Some(if items.contains(&"b3") {
            Mode::Minor
        } else {
            Mode::Major
        });
    }
    if MINOR_QUALITIES.contains(&shorthand) {
        Some(Mode::Minor)
    } else if MAJOR_QUALITIES.contains(&shorthand) {
        Some(Mode::Major)
    } else {
        None
    }
}

/// Reduce a Harte-style label (`root[:quality][/bass]`, `N` or `X`) to the
/// major/minor vocabulary.
///
/// Roots are normalised enharmonically (`Db` == `C#`), a bare root is major,
/// the bass note is ignored and the mode is taken from the quality's third.
pub fn reduce_chord(label: &str) -> Reduced {
    let label = label.trim();
    if label == "N" {
        return Reduced::Chord(ChordSymbol::NO_CHORD);
    }
    if label == "X" || label.is_empty() {
        return Reduced::Reject;
    }
    let (body, bass) = match label.split_once('/') {
        Some((b, bass)) => (b, Some(bass)),
        None => (label, None),
    };
    if let Some(bass) = bass {
        if !is_interval(bass) && parse_root(bass).is_none() {
            return Reduced::Reject;
        }
    }
    let (root, quality) = match body.split_once(':') {
        Some((r, q)) => (r, Some(q)),
        None => (body, None),
    };
    let Some(root) = parse_root(root) else {
        return Reduced::Reject;
    };
    let mode = match quality {
        None => Some(Mode::Major),
        Some(q) => parse_quality(q),
    };
    match mode {
        Some(m) => Reduced::Chord(ChordSymbol::new(root, m)),
        None => Reduced::Reject,
    }
}
