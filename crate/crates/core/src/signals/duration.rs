use serde::{Deserialize, Serialize};

use super::{ProsodicSignal, SignalKind};
use crate::error::{Error, Result};
use crate::ingest::Alignment;

/// Transform applied to word durations before they become anchor values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationTransform {
    /// Seconds.
    #[default]
    Linear,
    /// `ln(1 + seconds)`; keeps silences at 0.
    Log,
}

impl DurationTransform {
    fn apply(self, seconds: f64) -> f64 {
        match self {
            DurationTransform::Linear => seconds,
            DurationTransform::Log => seconds.ln_1p(),
        }
    }
}

/// Word-duration signal with linear durations. See [`duration_signal_with`].
pub fn duration_signal(
    alignment: &Alignment,
    n_frames: usize,
    frame_period: f64,
) -> Result<ProsodicSignal> {
    duration_signal_with(alignment, n_frames, frame_period, DurationTransform::Linear)
}

/// Places each spoken word's duration at its midpoint frame and each pause's
/// zero at its midpoint frame, then interpolates linearly between anchors and
/// holds the end values outside them.
pub fn duration_signal_with(
    alignment: &Alignment,
    n_frames: usize,
    frame_period: f64,
    transform: DurationTransform,
) -> Result<ProsodicSignal> {
    if alignment.spoken_words().next().is_none() {
        return Err(Error::EmptyAlignment);
    }
    let frame_of = |t: f64| (t / frame_period).round() as usize;

    let mut anchors: Vec<(usize, f64)> = alignment
        .spoken_words()
        .map(|w| (frame_of(w.midpoint()), transform.apply(w.duration())))
        .chain(
            alignment
                .pauses()
                .into_iter()
                .map(|(s, e)| (frame_of(0.5 * (s + e)), 0.0)),
        )
        .collect();
    anchors.sort_by_key(|a| a.0);
    anchors.dedup_by_key(|a| a.0);

    if let Some(&(last, _)) = anchors.last() {
        if last >= n_frames {
            return Err(Error::TooFewFrames(format!(
                "anchor at frame {last} but only {n_frames} frames"
            )));
        }
    }

    let mut values = vec![0.0; n_frames];
    let (first_f, first_v) = anchors[0];
    let (last_f, last_v) = anchors[anchors.len() - 1];
    values[..first_f].fill(first_v);
    values[last_f..].fill(last_v);
    for pair in anchors.windows(2) {
        let ((f0, v0), (f1, v1)) = (pair[0], pair[1]);
        let span = (f1 - f0) as f64;
        for (k, slot) in values[f0..f1].iter_mut().enumerate() {
            *slot = v0 + (v1 - v0) * k as f64 / span;
        }
    }
    ProsodicSignal::new(values, frame_period, SignalKind::DurationSeconds)
}
