use serde::{Deserialize, Serialize};

use super::{window_at, Framing, ProsodicSignal, SignalKind};
use crate::error::{Error, Result};
use crate::ingest::AudioBuffer;

/// Autocorrelation pitch tracker settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchConfig {
    pub f0_min: f64,
    pub f0_max: f64,
    pub voicing_threshold: f64,
    /// Analysis window length in seconds.
    pub window: f64,
    pub median_length: usize,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            f0_min: 60.0,
            f0_max: 400.0,
            voicing_threshold: 0.45,
            window: 0.040,
            median_length: 5,
        }
    }
}

/// How unvoiced stretches are filled when converting to a gapless signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapFill {
    /// Linear interpolation between the surrounding voiced frames.
    #[default]
    Linear,
    /// Hold the previous voiced value.
    Hold,
}

/// Per-frame f0 estimates. `f0_hz[i] > 0` exactly when `voiced[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchTrack {
    pub f0_hz: Vec<f64>,
    pub voiced: Vec<bool>,
    pub frame_period: f64,
}

impl PitchTrack {
    pub fn len(&self) -> usize {
        self.f0_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0_hz.is_empty()
    }

    pub fn voiced_fraction(&self) -> f64 {
        self.voiced.iter().filter(|v| **v).count() as f64 / self.len().max(1) as f64
    }

    /// Semitones re 100 Hz on voiced frames; `None` where unvoiced.
    pub fn semitones_sparse(&self) -> Vec<Option<f64>> {
        self.f0_hz
            .iter()
            .zip(&self.voiced)
            .map(|(&hz, &v)| v.then(|| 12.0 * (hz / 100.0).log2()))
            .collect()
    }

    /// Gapless semitone signal. Gaps are filled per `fill`, edges are held
    /// constant; a track with no voiced frames becomes all zeros.
    pub fn semitones(&self, fill: GapFill) -> Result<ProsodicSignal> {
        let values = fill_gaps(&self.semitones_sparse(), fill);
        ProsodicSignal::new(values, self.frame_period, SignalKind::F0Semitones)
    }
}

pub(crate) fn fill_gaps(sparse: &[Option<f64>], fill: GapFill) -> Vec<f64> {
    let known: Vec<(usize, f64)> = sparse
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .collect();
    if known.is_empty() {
        return vec![0.0; sparse.len()];
    }
    let mut out = vec![0.0; sparse.len()];
    let (first_i, first_v) = known[0];
    let (last_i, last_v) = known[known.len() - 1];
    out[..first_i].fill(first_v);
    out[last_i..].fill(last_v);
    for pair in known.windows(2) {
        let ((i0, v0), (i1, v1)) = (pair[0], pair[1]);
        for (k, slot) in out[i0..i1].iter_mut().enumerate() {
            *slot = match fill {
                GapFill::Linear => v0 + (v1 - v0) * k as f64 / (i1 - i0) as f64,
                GapFill::Hold => v0,
            };
        }
    }
    out
}

/// Normalized autocorrelation of `x` at `lag`, over the overlapping part.
fn normalized_autocorrelation(x: &[f64], lag: usize) -> f64 {
    let n = x.len() - lag;
    let (mut num, mut e0, mut e1) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let (a, b) = (x[k], x[k + lag]);
        num += a * b;
        e0 += a * a;
        e1 += b * b;
    }
    let denom = (e0 * e1).sqrt();
    if denom > 1e-20 {
        num / denom
    } else {
        0.0
    }
}

/// Lag of the pitch period, fractional, or `None` if the frame is unvoiced.
fn frame_period_lag(window: &[f64], lag_min: usize, lag_max: usize, threshold: f64) -> Option<f64> {
    // one extra lag on each side so the range ends can be local maxima
    let lo = lag_min.saturating_sub(1).max(1);
    let hi = (lag_max + 1).min(window.len() - 1);
    let r: Vec<f64> = (lo..=hi)
        .map(|lag| normalized_autocorrelation(window, lag))
        .collect();
    let at = |lag: usize| r[lag - lo];

    let best = (lag_min..=lag_max.min(hi)).map(at).fold(f64::NEG_INFINITY, f64::max);
    if best < threshold {
        return None;
    }
    // Shortest lag that is a local peak close to the global maximum; picking the
    // global maximum alone would prefer multiples of the period.
    let lag = (lag_min.max(lo + 1)..=lag_max.min(hi - 1))
        .find(|&l| at(l) >= 0.9 * best && at(l) >= at(l - 1) && at(l) >= at(l + 1))?;
    let (y0, y1, y2) = (at(lag - 1), at(lag), at(lag + 1));
    let curvature = y0 - 2.0 * y1 + y2;
    let shift = if curvature.abs() > 1e-12 {
        (0.5 * (y0 - y2) / curvature).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Some(lag as f64 + shift)
}

fn median_filter_runs(f0: &mut [f64], voiced: &[bool], length: usize) {
    if length < 2 {
        return;
    }
    let half = length / 2;
    let mut i = 0;
    while i < f0.len() {
        if !voiced[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < f0.len() && voiced[i] {
            i += 1;
        }
        let run = f0[start..i].to_vec();
        let mut buf = Vec::with_capacity(length);
        for k in 0..run.len() {
            buf.clear();
            buf.extend_from_slice(&run[k.saturating_sub(half)..(k + half + 1).min(run.len())]);
            buf.sort_by(f64::total_cmp);
            f0[start + k] = buf[buf.len() / 2];
        }
    }
}

/// Autocorrelation f0 tracker on an explicit frame grid.
pub fn extract_f0_on(audio: &AudioBuffer, framing: &Framing, cfg: &PitchConfig) -> Result<PitchTrack> {
    let sr = audio.sample_rate();
    let srf = f64::from(sr);
    let win = (cfg.window * srf).round() as usize;
    if audio.len() < win {
        return Err(Error::TooShort(format!(
            "{} samples is shorter than one {:.0} ms analysis window",
            audio.len(),
            cfg.window * 1e3
        )));
    }
    if !(cfg.f0_min > 0.0 && cfg.f0_min < cfg.f0_max) {
        return Err(Error::Config(format!(
            "f0 range [{}, {}]",
            cfg.f0_min, cfg.f0_max
        )));
    }
    let lag_min = ((srf / cfg.f0_max).floor() as usize).max(2);
    let lag_max = ((srf / cfg.f0_min).ceil() as usize).min(win.saturating_sub(2));
    if lag_min >= lag_max {
        return Err(Error::Config("f0 range does not fit the analysis window".into()));
    }

    let mut f0 = vec![0.0; framing.n_frames];
    let mut voiced = vec![false; framing.n_frames];
    let mut buf = Vec::with_capacity(win);
    for i in 0..framing.n_frames {
        let centre = framing.center_sample(i, sr);
        window_at(audio.samples(), centre - (win / 2) as i64, win, &mut buf);
        if let Some(lag) = frame_period_lag(&buf, lag_min, lag_max, cfg.voicing_threshold) {
            f0[i] = (srf / lag).clamp(cfg.f0_min, cfg.f0_max);
            voiced[i] = true;
        }
    }
    median_filter_runs(&mut f0, &voiced, cfg.median_length);

    Ok(PitchTrack {
        f0_hz: f0,
        voiced,
        frame_period: framing.frame_period,
    })
}

/// f0 track at `frame_period` hop, frames centred at multiples of the hop.
pub fn extract_f0(audio: &AudioBuffer, frame_period: f64, cfg: &PitchConfig) -> Result<PitchTrack> {
    let framing = Framing::centered(audio.len(), audio.sample_rate(), frame_period);
    extract_f0_on(audio, &framing, cfg)
}
