//! Word-level prominence and boundary estimates from wavelet lines, and their
//! three-way discretization.

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::ingest::{Alignment, AudioBuffer};
use crate::signals::{
    combine_boundary, combine_prominence, duration_signal_with, extract_energy, extract_f0, znorm,
    ProsodicSignal,
};
use crate::wavelet::{cwt, track_lines, Line, Polarity, Scalogram};

/// Audio may end at most this much before the alignment does.
pub const DURATION_TOLERANCE: f64 = 0.05;

/// Class boundaries `[t1, t2]` for prominence and boundary strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub prominence: [f64; 2],
    pub boundary: [f64; 2],
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            prominence: [0.2, 0.45],
            boundary: [0.3, 0.6],
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, [t1, t2]) in [("prominence", self.prominence), ("boundary", self.boundary)] {
            if !(t1.is_finite() && t2.is_finite() && t1 < t2) {
                return Err(Error::Config(format!(
                    "{name} thresholds [{t1}, {t2}] must satisfy t1 < t2"
                )));
            }
        }
        Ok(())
    }
}

/// 0 below `t1`, 1 in `[t1, t2)`, 2 from `t2` up.
pub fn discretize(value: f64, [t1, t2]: [f64; 2]) -> Result<u8> {
    if value < 0.0 || value.is_nan() {
        return Err(Error::NegativeValue(value));
    }
    Ok(if value < t1 {
        0
    } else if value < t2 {
        1
    } else {
        2
    })
}

/// One spoken word with its continuous and discrete labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordAnnotation {
    #[serde(rename = "w")]
    pub word: String,
    pub start: f64,
    pub end: f64,
    pub prominence: f64,
    pub boundary: f64,
    #[serde(rename = "p")]
    pub p_class: u8,
    #[serde(rename = "b")]
    pub b_class: u8,
}

impl WordAnnotation {
    /// Re-derives both classes from the stored continuous values.
    pub fn relabel(&self, thresholds: &Thresholds) -> Result<Self> {
        Ok(Self {
            p_class: discretize(self.prominence, thresholds.prominence)?,
            b_class: discretize(self.boundary, thresholds.boundary)?,
            ..self.clone()
        })
    }
}

/// Continuous per-word scores.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WordScores {
    pub prominence: f64,
    pub boundary: f64,
}

/// Maps ridge lines to the word containing their anchor and valley lines to
/// the word whose end is nearest their anchor. Valleys anchored inside a pause
/// go to the word before the pause. Returns one entry per spoken word.
pub fn assign_word_scores(
    ridges: &[Line],
    valleys: &[Line],
    alignment: &Alignment,
    frame_period: f64,
) -> Result<Vec<WordScores>> {
    let words: Vec<_> = alignment.spoken_words().collect();
    if words.is_empty() {
        return Err(Error::EmptyAlignment);
    }
    let mut scores = vec![WordScores::default(); words.len()];

    for ridge in ridges {
        let t = ridge.anchor_time(frame_period);
        if let Some(i) = words.iter().position(|w| w.start <= t && t < w.end) {
            scores[i].prominence = scores[i].prominence.max(ridge.strength);
        }
    }

    let pauses = alignment.pauses();
    for valley in valleys {
        let t = valley.anchor_time(frame_period);
        let target = if pauses.iter().any(|&(s, e)| s <= t && t < e) {
            words.iter().rposition(|w| w.end <= t + 1e-9)
        } else {
            // strict `<` keeps the earlier word on ties
            let mut best: Option<(usize, f64)> = None;
            for (i, w) in words.iter().enumerate() {
                let d = (w.end - t).abs();
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((i, d));
                }
            }
            best.map(|(i, _)| i)
        };
        if let Some(i) = target {
            scores[i].boundary = scores[i].boundary.max(valley.strength);
        }
    }
    Ok(scores)
}

/// Rounds to the 4 decimals used in persisted annotations.
pub fn round4(x: f64) -> f64 {
    let r = (x * 1e4).round() / 1e4;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Intermediate products of one annotation run.
#[derive(Debug, Clone)]
pub struct AnnotationTrace {
    pub f0: ProsodicSignal,
    pub energy: ProsodicSignal,
    pub duration: ProsodicSignal,
    pub prominence_signal: ProsodicSignal,
    pub boundary_signal: ProsodicSignal,
    pub prominence_scalogram: Scalogram,
    pub boundary_scalogram: Scalogram,
    pub ridges: Vec<Line>,
    pub valleys: Vec<Line>,
    pub words: Vec<WordAnnotation>,
}

/// Full pipeline, keeping every intermediate signal.
pub fn annotate_traced(
    audio: &AudioBuffer,
    alignment: &Alignment,
    cfg: &Config,
) -> Result<AnnotationTrace> {
    if alignment.spoken_words().next().is_none() {
        return Err(Error::EmptyAlignment);
    }
    let audio_end = audio.duration();
    if audio_end < alignment.end() - DURATION_TOLERANCE {
        return Err(Error::DurationMismatch {
            audio: audio_end,
            alignment: alignment.end(),
        });
    }

    let sc = &cfg.signals;
    let fp = sc.frame_period;
    let pitch = extract_f0(audio, fp, &sc.pitch())?;
    let f0 = pitch.semitones(sc.f0_gap_fill)?;
    let energy = extract_energy(audio, fp, &sc.energy())?;

    let needed = (alignment.end() / fp).round() as usize + 1;
    let n_frames = f0.len().max(needed);
    let f0 = f0.resized(n_frames);
    let energy = energy.resized(n_frames);
    let duration = duration_signal_with(alignment, n_frames, fp, sc.duration_transform)?;

    let (f0n, enn, dun) = (znorm(&f0), znorm(&energy), znorm(&duration));
    let prominence_signal = combine_prominence(&f0n, &enn, &dun, &sc.weights)?;
    let boundary_signal = combine_boundary(&f0n, &enn, &dun)?;

    let wc = &cfg.wavelet;
    let bank = wc.bank()?;
    let prominence_scalogram = cwt(&prominence_signal, &bank)?;
    let boundary_scalogram = cwt(&boundary_signal, &bank)?;
    let word_band = bank.band(wc.word_band[0], wc.word_band[1]);
    let phrase_band = bank.band(wc.phrase_band[0], wc.phrase_band[1]);
    let ridges = track_lines(
        &prominence_scalogram,
        Polarity::Ridge,
        word_band,
        wc.link_window_factor,
    )?;
    let valleys = track_lines(
        &boundary_scalogram,
        Polarity::Valley,
        phrase_band,
        wc.link_window_factor,
    )?;

    let scores = assign_word_scores(&ridges, &valleys, alignment, fp)?;
    let thresholds = &cfg.labeler.thresholds;
    let words = alignment
        .spoken_words()
        .zip(&scores)
        .map(|(w, s)| {
            let prominence = round4(s.prominence);
            let boundary = round4(s.boundary);
            Ok(WordAnnotation {
                word: w.label.clone(),
                start: round4(w.start),
                end: round4(w.end),
                prominence,
                boundary,
                p_class: discretize(prominence, thresholds.prominence)?,
                b_class: discretize(boundary, thresholds.boundary)?,
            })
        })
        .collect::<Result<_>>()?;

    Ok(AnnotationTrace {
        f0,
        energy,
        duration,
        prominence_signal,
        boundary_signal,
        prominence_scalogram,
        boundary_scalogram,
        ridges,
        valleys,
        words,
    })
}

/// Signals → combination → CWT → line tracking → word scores → classes.
/// One annotation per spoken word, in alignment order.
pub fn annotate_utterance(
    audio: &AudioBuffer,
    alignment: &Alignment,
    cfg: &Config,
) -> Result<Vec<WordAnnotation>> {
    Ok(annotate_traced(audio, alignment, cfg)?.words)
}

/// One line of an annotation JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceAnnotation {
    pub id: String,
    pub words: Vec<WordAnnotation>,
    pub config_hash: String,
}

impl UtteranceAnnotation {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("annotations always serialize")
    }
}

/// Parses annotation JSONL, skipping blank lines.
pub fn read_annotations(text: &str) -> Result<Vec<UtteranceAnnotation>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}
