//! Prosodic signal extraction (f0, energy, word duration) and the two
//! combination schemes used for prominence and boundary estimation.
//!
//! All signals for one utterance share a frame grid. Frame `i` is centred at
//! `offset + i * frame_period` seconds; see [`Framing`].

mod duration;
mod energy;
mod pitch;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use duration::{duration_signal, duration_signal_with, DurationTransform};
pub use energy::{extract_energy, extract_energy_on, EnergyConfig};
pub use pitch::{extract_f0, extract_f0_on, GapFill, PitchConfig, PitchTrack};

/// What a [`ProsodicSignal`] measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    F0Semitones,
    EnergyDb,
    DurationSeconds,
    Combined,
}

/// A gapless, finite, uniformly sampled series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProsodicSignal {
    values: Vec<f64>,
    frame_period: f64,
    kind: SignalKind,
}

impl ProsodicSignal {
    pub fn new(values: Vec<f64>, frame_period: f64, kind: SignalKind) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty signal".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value at frame {i}")));
        }
        if !(frame_period > 0.0 && frame_period.is_finite()) {
            return Err(Error::InvalidInput(format!("frame period {frame_period}")));
        }
        Ok(Self {
            values,
            frame_period,
            kind,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn frame_period(&self) -> f64 {
        self.frame_period
    }

    pub fn kind(&self) -> SignalKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Extends (by repeating the last value) or truncates to `n` frames.
    pub fn resized(&self, n: usize) -> Self {
        let mut values = self.values.clone();
        let last = *values.last().expect("non-empty");
        values.resize(n.max(1), last);
        Self { values, ..*self }
    }

    fn with_values(&self, values: Vec<f64>, kind: SignalKind) -> Self {
        Self {
            values,
            frame_period: self.frame_period,
            kind,
        }
    }
}

/// Frame centres, in samples, for a signal computed from audio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Framing {
    /// Seconds between consecutive frame centres.
    pub frame_period: f64,
    /// Centre of frame 0 in seconds.
    pub offset: f64,
    pub n_frames: usize,
}

impl Framing {
    /// Frames centred at `0, hop, 2·hop, …` covering every sample.
    pub fn centered(n_samples: usize, sample_rate: u32, frame_period: f64) -> Self {
        let duration = n_samples.saturating_sub(1) as f64 / f64::from(sample_rate);
        Self {
            frame_period,
            offset: 0.0,
            n_frames: 1 + (duration / frame_period + 1e-9).floor() as usize,
        }
    }

    /// Frames whose `window`-second analysis windows lie fully inside the audio,
    /// the first starting at sample 0 (the usual spectrogram convention).
    pub fn windowed(n_samples: usize, sample_rate: u32, hop: f64, window: f64) -> Option<Self> {
        let sr = f64::from(sample_rate);
        let win = (window * sr).round() as usize;
        let hop_samples = (hop * sr).round() as usize;
        if n_samples < win || hop_samples == 0 {
            return None;
        }
        Some(Self {
            frame_period: hop,
            offset: 0.5 * win as f64 / sr,
            n_frames: 1 + (n_samples - win) / hop_samples,
        })
    }

    /// Centre sample of frame `i`.
    pub fn center_sample(&self, i: usize, sample_rate: u32) -> i64 {
        ((self.offset + i as f64 * self.frame_period) * f64::from(sample_rate)).round() as i64
    }
}

/// Copies `len` samples starting at `start` (possibly negative), zero-padding outside the audio.
pub(crate) fn window_at(samples: &[f64], start: i64, len: usize, out: &mut Vec<f64>) {
    out.clear();
    out.extend((0..len as i64).map(|k| {
        let idx = start + k;
        if idx >= 0 && (idx as usize) < samples.len() {
            samples[idx as usize]
        } else {
            0.0
        }
    }));
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Zero mean, unit population standard deviation. A (near-)constant input maps to zeros.
pub fn znorm(signal: &ProsodicSignal) -> ProsodicSignal {
    let (mean, std) = mean_std(&signal.values);
    let values = if std > 1e-12 {
        let centered: Vec<f64> = signal.values.iter().map(|v| v - mean).collect();
        // second pass removes the rounding left by the first
        let (m2, s2) = mean_std(&centered);
        centered.iter().map(|v| (v - m2) / s2).collect()
    } else {
        vec![0.0; signal.len()]
    };
    signal.with_values(values, signal.kind)
}

/// Non-negative weights of the f0, energy and duration signals in the prominence sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalWeights {
    pub f0: f64,
    pub energy: f64,
    pub duration: f64,
}

impl Default for SignalWeights {
    fn default() -> Self {
        Self {
            f0: 1.0,
            energy: 0.5,
            duration: 1.0,
        }
    }
}

impl SignalWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.f0, self.energy, self.duration];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config(format!("weights must be non-negative: {all:?}")));
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err(Error::Config("at least one weight must be positive".into()));
        }
        Ok(())
    }
}

fn check_same_grid(signals: &[&ProsodicSignal]) -> Result<()> {
    let first = signals[0];
    for s in &signals[1..] {
        if s.len() != first.len() {
            return Err(Error::LengthMismatch(format!(
                "{} vs {} frames",
                first.len(),
                s.len()
            )));
        }
        if (s.frame_period - first.frame_period).abs() > 1e-12 {
            return Err(Error::LengthMismatch(format!(
                "frame period {} vs {}",
                first.frame_period, s.frame_period
            )));
        }
    }
    Ok(())
}

/// Weighted sum of the normalized f0, energy and duration signals, before
/// the final normalization. Exposed for inspection and tests.
pub fn weighted_sum(
    f0n: &ProsodicSignal,
    enn: &ProsodicSignal,
    dun: &ProsodicSignal,
    w: &SignalWeights,
) -> Result<ProsodicSignal> {
    check_same_grid(&[f0n, enn, dun])?;
    let values = f0n
        .values
        .iter()
        .zip(&enn.values)
        .zip(&dun.values)
        .map(|((f, e), d)| w.f0 * f + w.energy * e + w.duration * d)
        .collect();
    Ok(f0n.with_values(values, SignalKind::Combined))
}

/// Prominence signal: weighted sum of the three normalized inputs, z-normalized.
pub fn combine_prominence(
    f0n: &ProsodicSignal,
    enn: &ProsodicSignal,
    dun: &ProsodicSignal,
    w: &SignalWeights,
) -> Result<ProsodicSignal> {
    Ok(znorm(&weighted_sum(f0n, enn, dun, w)?))
}

/// Rescales to [0, 1] over the utterance; a constant signal maps to all ones.
pub fn minmax(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;
    if range > 1e-12 {
        values.iter().map(|v| (v - lo) / range).collect()
    } else {
        vec![1.0; values.len()]
    }
}

/// Per-frame product of the three min-max rescaled inputs, before normalization.
pub fn boundary_product(
    f0n: &ProsodicSignal,
    enn: &ProsodicSignal,
    dun: &ProsodicSignal,
) -> Result<ProsodicSignal> {
    check_same_grid(&[f0n, enn, dun])?;
    let (f, e, d) = (minmax(&f0n.values), minmax(&enn.values), minmax(&dun.values));
    let values = f
        .iter()
        .zip(&e)
        .zip(&d)
        .map(|((f, e), d)| f * e * d)
        .collect();
    Ok(f0n.with_values(values, SignalKind::Combined))
}

/// Boundary signal: product of the rescaled inputs, z-normalized.
pub fn combine_boundary(
    f0n: &ProsodicSignal,
    enn: &ProsodicSignal,
    dun: &ProsodicSignal,
) -> Result<ProsodicSignal> {
    Ok(znorm(&boundary_product(f0n, enn, dun)?))
}
