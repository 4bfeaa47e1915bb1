//! Annotates the synthetic corpus and shows how the designed emphasis and
//! pauses come out. Usage: `cargo run --example fixture_report [seed]`.
//!
//! Each word prints as `<role><pause>:<prominence>/<boundary><p_class>`,
//! where role is E (emphasized), d (deaccented) or n, and `|` marks a pause.

use prosody_core::fixtures::{generate, FixtureOptions, Role};
use prosody_core::labeler::annotate_utterance;
use prosody_core::Config;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = match std::env::args().nth(1) {
        Some(s) => s.parse()?,
        None => FixtureOptions::default().seed,
    };
    let cfg = Config::default();
    let corpus = generate(&FixtureOptions { seed, ..FixtureOptions::default() })?;

    let (mut p_win, mut p_n, mut b_win, mut b_n, mut emph2, mut emph) = (0, 0, 0, 0, 0, 0);
    for u in &corpus {
        let ann = annotate_utterance(&u.audio, &u.alignment, &cfg)?;
        let mut line = String::new();
        for (a, d) in ann.iter().zip(&u.design.words) {
            let role = match d.role {
                Role::Emphasized => 'E',
                Role::Deaccented => 'd',
                Role::Neutral => 'n',
            };
            let pause = if d.pause_after { "|" } else { "" };
            line += &format!("{role}{pause}:{:.2}/{:.2}{} ", a.prominence, a.boundary, a.p_class);
            if d.role == Role::Emphasized {
                emph += 1;
                emph2 += usize::from(a.p_class == 2);
            }
        }
        for (hi, lo) in u.design.prominence_pairs() {
            p_n += 1;
            p_win += usize::from(ann[hi].prominence > ann[lo].prominence);
        }
        for (pause, joint) in u.design.boundary_pairs() {
            b_n += 1;
            b_win += usize::from(ann[pause].boundary > ann[joint].boundary);
        }
        println!("{} {}", u.id, line.trim_end());
    }
    println!("prominence pairs {p_win}/{p_n}, boundary pairs {b_win}/{b_n}, emphasized p2 {emph2}/{emph}");
    Ok(())
}
