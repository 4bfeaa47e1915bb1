//! Synthetic speech-like corpus with designed prosody.
//!
//! Each utterance is a harmonic source whose f0, level and word durations
//! follow a per-word design: one emphasized word, two deaccented words, the
//! rest neutral, and one or two phrase-internal pauses. Alignments are exact
//! by construction, so the corpus doubles as an oracle for the labeler.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{write_wav, Alignment, AudioBuffer, Interval, Lexicon, WavEncoding, SILENCE};

pub const SAMPLE_RATE: u32 = 16_000;

const VOCABULARY: &[(&str, &str)] = &[
    ("THE", "DH AH0"),
    ("A", "AH0"),
    ("CAT", "K AE1 T"),
    ("DOG", "D AO1 G"),
    ("SAW", "S AO1"),
    ("RED", "R EH1 D"),
    ("BIG", "B IH1 G"),
    ("HOUSE", "HH AW1 S"),
    ("MARY", "M EH1 R IY0"),
    ("JOHN", "JH AA1 N"),
    ("LIKES", "L AY1 K S"),
    ("GAVE", "G EY1 V"),
    ("BOOK", "B UH1 K"),
    ("GREEN", "G R IY1 N"),
    ("GARDEN", "G AA1 R D AH0 N"),
    ("YESTERDAY", "Y EH1 S T ER0 D EY2"),
    ("MORNING", "M AO1 R N IH0 NG"),
    ("WATER", "W AO1 T ER0"),
    ("RIVER", "R IH1 V ER0"),
    ("OLD", "OW1 L D"),
    ("MAN", "M AE1 N"),
    ("WOMAN", "W UH1 M AH0 N"),
    ("BLUE", "B L UW1"),
    ("CAR", "K AA1 R"),
    ("NEAR", "N IH1 R"),
    ("TOWN", "T AW1 N"),
    ("WALKED", "W AO1 K T"),
    ("SLOWLY", "S L OW1 L IY0"),
    ("I", "AY1"),
    ("INSIST", "IH2 N S IH1 S T"),
    ("THAT", "DH AE1 T"),
];

/// Pronunciations for every word the generator can emit.
pub fn lexicon() -> Lexicon {
    let text: String = VOCABULARY
        .iter()
        .map(|(w, p)| format!("{w}  {p}\n"))
        .collect();
    Lexicon::parse(&text).expect("built-in vocabulary is well formed")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Neutral,
    Emphasized,
    Deaccented,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignedWord {
    pub word: String,
    pub role: Role,
    pub pause_after: bool,
}

/// Designed prosody of one utterance, persisted as `design.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub id: String,
    pub words: Vec<DesignedWord>,
}

impl Design {
    /// (emphasized, deaccented) word-index pairs.
    pub fn prominence_pairs(&self) -> Vec<(usize, usize)> {
        let idx = |r: Role| -> Vec<usize> {
            self.words
                .iter()
                .enumerate()
                .filter(|(_, w)| w.role == r)
                .map(|(i, _)| i)
                .collect()
        };
        let deacc = idx(Role::Deaccented);
        idx(Role::Emphasized)
            .into_iter()
            .flat_map(|e| deacc.iter().map(move |&d| (e, d)))
            .collect()
    }

    /// (word before a pause, word joined to its successor) index pairs; the
    /// utterance-final word belongs to neither set.
    pub fn boundary_pairs(&self) -> Vec<(usize, usize)> {
        let last = self.words.len() - 1;
        let pauses: Vec<usize> = (0..last).filter(|&i| self.words[i].pause_after).collect();
        let joints: Vec<usize> = (0..last).filter(|&i| !self.words[i].pause_after).collect();
        pauses
            .iter()
            .flat_map(|&p| joints.iter().map(move |&j| (p, j)))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct FixtureUtterance {
    pub id: String,
    pub audio: AudioBuffer,
    pub alignment: Alignment,
    /// Orthographic text with punctuation, e.g. `The cat saw, a dog.`
    pub text: String,
    pub design: Design,
}

/// Generator settings. Two corpora with the same `seed` and `n_utterances`
/// share words, roles and pause positions, so a variant with
/// `prosody_scale < 1` or `tempo != 1` acts as a "synthetic system" output
/// for the same material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixtureOptions {
    pub seed: u64,
    pub n_utterances: usize,
    /// Scales the designed f0, level and duration contrasts.
    pub prosody_scale: f64,
    /// Speaking-rate factor: > 1 is faster.
    pub tempo: f64,
}

impl Default for FixtureOptions {
    fn default() -> Self {
        Self {
            seed: 2020,
            n_utterances: 20,
            prosody_scale: 1.0,
            tempo: 1.0,
        }
    }
}

struct Segment {
    start: f64,
    end: f64,
    /// Semitone offset of the accent peak above the declination line.
    accent_st: f64,
    gain_db: f64,
    base_hz: f64,
    /// Semitones of falling f0 over the second half of a phrase-final word.
    final_fall_st: f64,
}

fn base_duration(n_phones: usize) -> f64 {
    (0.14 + 0.055 * n_phones as f64).clamp(0.22, 0.48)
}

fn capitalize(word: &str) -> String {
    let lower = word.to_lowercase();
    let mut chars = lower.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => lower,
    }
}

fn design_utterance(rng: &mut ChaCha8Rng, id: String) -> Design {
    let n_words = rng.gen_range(6..=8);
    let words: Vec<&str> = (0..n_words)
        .map(|_| VOCABULARY[rng.gen_range(0..VOCABULARY.len())].0)
        .collect();

    let mut roles = vec![Role::Neutral; n_words];
    let mut order: Vec<usize> = (0..n_words).collect();
    order.shuffle(rng);
    roles[order[0]] = Role::Emphasized;
    roles[order[1]] = Role::Deaccented;
    roles[order[2]] = Role::Deaccented;

    // pauses after words 1..n-2, at least two words apart
    let n_pauses = rng.gen_range(1..=2);
    let mut pause_after = vec![false; n_words];
    let mut candidates: Vec<usize> = (1..n_words - 2).collect();
    candidates.shuffle(rng);
    let mut placed = Vec::new();
    for c in candidates {
        if placed.len() == n_pauses {
            break;
        }
        if placed.iter().all(|&p: &usize| p.abs_diff(c) >= 2) {
            placed.push(c);
            pause_after[c] = true;
        }
    }

    Design {
        id,
        words: words
            .iter()
            .zip(roles)
            .zip(pause_after)
            .map(|((w, role), pause_after)| DesignedWord {
                word: w.to_string(),
                role,
                pause_after,
            })
            .collect(),
    }
}

fn render(
    design: &Design,
    lex: &Lexicon,
    opts: &FixtureOptions,
    rng: &mut ChaCha8Rng,
) -> Result<FixtureUtterance> {
    let k = opts.prosody_scale;
    let rate = opts.tempo;
    let lead = 0.15;

    let mut t = lead;
    let mut words_tier = vec![Interval::new(SILENCE, 0.0, lead)];
    let mut phones_tier = vec![Interval::new(SILENCE, 0.0, lead)];
    let mut segments = Vec::new();
    let mut phrase_start = true;
    let mut phrase_pos = 0usize;
    let mut text = String::new();

    for (i, dw) in design.words.iter().enumerate() {
        let phones = lex
            .lookup(&dw.word)
            .ok_or_else(|| Error::OutOfVocabulary(dw.word.clone()))?;
        let (dur_factor, accent_st, gain_db) = match dw.role {
            Role::Neutral => (1.0, 2.0, 0.0),
            Role::Emphasized => (1.0 + 0.8 * k, 2.0 + 4.0 * k, 6.0 * k),
            Role::Deaccented => (1.0 - 0.2 * k, 2.0 - 2.0 * k, -3.0 * k),
        };
        let jitter = rng.gen_range(0.95..1.05);
        let dur = base_duration(phones.len()) * dur_factor * jitter / rate;
        let (start, end) = (round_ms(t), round_ms(t + dur));

        if phrase_start {
            phrase_pos = 0;
            phrase_start = false;
        }
        // declination within the phrase, reset after pauses
        let base_hz = 125.0 * 2f64.powf(-1.2 * phrase_pos as f64 / 12.0);
        phrase_pos += 1;

        segments.push(Segment {
            start,
            end,
            accent_st,
            gain_db,
            base_hz,
            final_fall_st: if dw.pause_after { 4.0 } else { 0.0 },
        });
        words_tier.push(Interval::new(dw.word.to_lowercase(), start, end));
        let step = (end - start) / phones.len() as f64;
        for (j, p) in phones.iter().enumerate() {
            let ps = if j == 0 { start } else { round_ms(start + j as f64 * step) };
            let pe = if j + 1 == phones.len() {
                end
            } else {
                round_ms(start + (j + 1) as f64 * step)
            };
            phones_tier.push(Interval::new(p.clone(), ps, pe));
        }

        if i > 0 {
            text.push(' ');
        }
        if i == 0 {
            text.push_str(&capitalize(&dw.word));
        } else {
            text.push_str(&dw.word.to_lowercase());
        }

        t = end;
        if dw.pause_after {
            let pause = round_ms(rng.gen_range(0.40..0.60) / rate);
            words_tier.push(Interval::new(SILENCE, t, round_ms(t + pause)));
            phones_tier.push(Interval::new(SILENCE, t, round_ms(t + pause)));
            t = round_ms(t + pause);
            text.push(',');
            phrase_start = true;
        }
    }
    text.push('.');
    let total = round_ms(t + 0.15);
    words_tier.push(Interval::new(SILENCE, t, total));
    phones_tier.push(Interval::new(SILENCE, t, total));

    let audio = synthesize(&segments, total, rng)?;
    let alignment = Alignment::from_tiers(design.id.clone(), words_tier, phones_tier)?;
    Ok(FixtureUtterance {
        id: design.id.clone(),
        audio,
        alignment,
        text,
        design: design.clone(),
    })
}

fn round_ms(t: f64) -> f64 {
    (t * 1e4).round() / 1e4
}

fn synthesize(segments: &[Segment], total: f64, rng: &mut ChaCha8Rng) -> Result<AudioBuffer> {
    let sr = f64::from(SAMPLE_RATE);
    let n = (total * sr).round() as usize;
    let mut samples: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.002..0.002)).collect();
    let ramp = 0.02;
    let mut phase = 0.0f64;
    for seg in segments {
        let (s0, s1) = ((seg.start * sr).round() as usize, (seg.end * sr).round() as usize);
        let len = (seg.end - seg.start).max(1e-6);
        let gain = 0.07 * 10f64.powf(seg.gain_db / 20.0);
        for (i, slot) in samples.iter_mut().enumerate().take(s1.min(n)).skip(s0) {
            let tt = i as f64 / sr - seg.start;
            let x = tt / len;
            let fall = seg.final_fall_st * (2.0 * x - 1.0).max(0.0);
            let f0 = seg.base_hz * 2f64.powf((seg.accent_st * (PI * x).sin() - fall) / 12.0);
            phase += 2.0 * PI * f0 / sr;
            let env = if tt < ramp {
                0.5 - 0.5 * (PI * tt / ramp).cos()
            } else if len - tt < ramp {
                0.5 - 0.5 * (PI * (len - tt) / ramp).cos()
            } else {
                1.0
            };
            let voice: f64 = (1..=10).map(|h| (h as f64 * phase).sin() / h as f64).sum();
            *slot += gain * env * voice;
        }
    }
    for s in &mut samples {
        *s = s.clamp(-1.0, 1.0);
    }
    AudioBuffer::new(samples, SAMPLE_RATE)
}

/// Generates the corpus in memory.
pub fn generate(opts: &FixtureOptions) -> Result<Vec<FixtureUtterance>> {
    if !(opts.tempo > 0.2 && opts.tempo < 5.0) || !(0.0..=2.0).contains(&opts.prosody_scale) {
        return Err(Error::InvalidInput(format!(
            "tempo {} / prosody_scale {}",
            opts.tempo, opts.prosody_scale
        )));
    }
    let lex = lexicon();
    let mut design_rng = ChaCha8Rng::seed_from_u64(opts.seed);
    (0..opts.n_utterances)
        .map(|i| {
            let id = format!("fx{i:03}");
            let design = design_utterance(&mut design_rng, id);
            // rendering randomness is separate so variants share designs
            let mut render_rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (0x9e37_79b9 + i as u64));
            render(&design, &lex, opts, &mut render_rng)
        })
        .collect()
}

/// Writes `wavs/<id>.wav`, `align/<id>.{words,phones}.tsv`, `metadata.csv`
/// (`id|text`), `lexicon.dict` and `design.jsonl` under `dir`.
pub fn write_corpus(dir: impl AsRef<Path>, corpus: &[FixtureUtterance]) -> Result<()> {
    let dir = dir.as_ref();
    let mkdir = |p: &Path| std::fs::create_dir_all(p).map_err(|e| Error::io(p, e));
    let write = |p: &Path, s: &str| std::fs::write(p, s).map_err(|e| Error::io(p, e));
    mkdir(&dir.join("wavs"))?;
    mkdir(&dir.join("align"))?;

    let mut metadata = String::new();
    let mut design = String::new();
    for u in corpus {
        write_wav(dir.join("wavs").join(format!("{}.wav", u.id)), &u.audio, WavEncoding::Pcm16)?;
        let (words, phones) = u.alignment.to_tsv();
        write(&dir.join("align").join(format!("{}.words.tsv", u.id)), &words)?;
        write(&dir.join("align").join(format!("{}.phones.tsv", u.id)), &phones)?;
        let _ = writeln!(metadata, "{}|{}", u.id, u.text);
        design.push_str(&serde_json::to_string(&u.design)?);
        design.push('\n');
    }
    write(&dir.join("metadata.csv"), &metadata)?;
    write(&dir.join("design.jsonl"), &design)?;
    write(&dir.join("lexicon.dict"), &lexicon().to_text())
}
