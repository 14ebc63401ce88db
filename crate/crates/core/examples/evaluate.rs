//! Weighted chord symbol recall for two songs and two systems, pooled by
//! duration.

use chordhmm::corpus::parse_lab;
use chordhmm::evalkit::{ablation_table_csv, aggregate, score_song, song_table_csv};

pub fn main() -> chordhmm::Result<()> {
    let refs = [
        ("short", parse_lab("0 2 C\n2 4 G\n")?),
        ("long", parse_lab("0 1 N\n1 9 A:min\n9 12 F\n")?),
    ];
    let systems = [
        ("argmax", ["0 1 C\n1 4 G\n", "0 5 A:min\n5 12 F\n"]),
        ("smoothed", ["0 2 C\n2 4 G\n", "0 9 A:min\n9 12 C\n"]),
    ];
    let mut table = Vec::new();
    for (name, estimates) in systems {
        let mut reports = Vec::new();
        for ((id, reference), est) in refs.iter().zip(estimates) {
            reports.push(score_song(id, reference, &parse_lab(est)?)?);
        }
        table.push((name.to_string(), aggregate(&reports)));
    }
    print!("{}", song_table_csv(&table));
    print!("{}", ablation_table_csv(&table));
    Ok(())
}
