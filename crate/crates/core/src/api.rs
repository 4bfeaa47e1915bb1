//! JSON payloads served to the tuning console.

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::Result;
use crate::ingest::{Alignment, AudioBuffer};
use crate::labeler::{annotate_traced, round4, Thresholds, WordAnnotation};
use crate::signals::ProsodicSignal;
use crate::wavelet::{Line, Polarity, Scalogram};

/// Upper bound on points per signal series.
pub const MAX_POINTS: usize = 2000;
/// Upper bound on time columns per scalogram.
pub const MAX_SCALOGRAM_COLUMNS: usize = 1000;

/// Evenly spaced samples: point `k` sits at `start + k·step` seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

/// Block means over `ceil(n / max_points)` frames, so at most `max_points` remain.
pub fn downsample(values: &[f64], frame_period: f64, max_points: usize) -> Series {
    let factor = values.len().div_ceil(max_points.max(1)).max(1);
    Series {
        start: 0.5 * (factor - 1) as f64 * frame_period,
        step: factor as f64 * frame_period,
        values: values
            .chunks(factor)
            .map(|c| round4(c.iter().sum::<f64>() / c.len() as f64))
            .collect(),
    }
}

fn series(s: &ProsodicSignal) -> Series {
    downsample(s.values(), s.frame_period(), MAX_POINTS)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signals {
    pub f0: Series,
    pub energy: Series,
    pub duration: Series,
    pub prominence: Series,
    pub boundary: Series,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    /// Period in seconds of each row, finest first.
    pub periods: Vec<f64>,
    pub start: f64,
    pub step: f64,
    pub rows: Vec<Vec<f64>>,
}

fn heatmap(sc: &Scalogram) -> Heatmap {
    let rows: Vec<Series> = sc
        .rows()
        .iter()
        .map(|r| downsample(r, sc.frame_period(), MAX_SCALOGRAM_COLUMNS))
        .collect();
    let (start, step) = rows.first().map_or((0.0, sc.frame_period()), |s| (s.start, s.step));
    Heatmap {
        periods: sc.bank().periods().to_vec(),
        start,
        step,
        rows: rows.into_iter().map(|s| s.values).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinePayload {
    pub polarity: Polarity,
    pub strength: f64,
    pub anchor_time: f64,
    /// `[time_s, period_s, coefficient]` from finest to coarsest scale.
    pub points: Vec<[f64; 3]>,
}

fn line_payload(line: &Line, sc: &Scalogram) -> LinePayload {
    let fp = sc.frame_period();
    LinePayload {
        polarity: line.polarity,
        strength: round4(line.strength),
        anchor_time: round4(line.anchor_time(fp)),
        points: line
            .points
            .iter()
            .map(|p| {
                [
                    round4(p.frame as f64 * fp),
                    sc.bank().periods()[p.scale],
                    round4(p.amplitude),
                ]
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceSummary {
    pub id: String,
    pub n_words: usize,
    pub duration: f64,
}

impl UtteranceSummary {
    pub fn new(id: &str, alignment: &Alignment, audio: &AudioBuffer) -> Self {
        Self {
            id: id.to_string(),
            n_words: alignment.spoken_words().count(),
            duration: round4(audio.duration()),
        }
    }
}

/// Everything the console draws for one utterance under one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtterancePayload {
    pub id: String,
    pub config_hash: String,
    pub duration: f64,
    pub thresholds: Thresholds,
    pub signals: Signals,
    /// CWT of the prominence signal.
    pub scalogram: Heatmap,
    /// CWT of the boundary signal.
    pub boundary_scalogram: Heatmap,
    pub lines: Vec<LinePayload>,
    pub words: Vec<WordAnnotation>,
}

pub fn utterance_payload(
    id: &str,
    audio: &AudioBuffer,
    alignment: &Alignment,
    config: &Config,
) -> Result<UtterancePayload> {
    config.validate()?;
    let t = annotate_traced(audio, alignment, config)?;
    let lines = t
        .ridges
        .iter()
        .map(|l| line_payload(l, &t.prominence_scalogram))
        .chain(t.valleys.iter().map(|l| line_payload(l, &t.boundary_scalogram)))
        .collect();
    Ok(UtterancePayload {
        id: id.to_string(),
        config_hash: config.hash(),
        duration: round4(audio.duration()),
        thresholds: config.labeler.thresholds,
        signals: Signals {
            f0: series(&t.f0),
            energy: series(&t.energy),
            duration: series(&t.duration),
            prominence: series(&t.prominence_signal),
            boundary: series(&t.boundary_signal),
        },
        scalogram: heatmap(&t.prominence_scalogram),
        boundary_scalogram: heatmap(&t.boundary_scalogram),
        lines,
        words: t.words,
    })
}
