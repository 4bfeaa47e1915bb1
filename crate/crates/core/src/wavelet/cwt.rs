use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::ProsodicSignal;

/// Kernels are truncated at this many scale units either side of the centre.
const SUPPORT: f64 = 5.0;

/// Geometrically spaced scale periods in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleBank {
    periods: Vec<f64>,
    scales_per_octave: u32,
}

impl ScaleBank {
    /// Periods `period_min · 2^(k / scales_per_octave)` up to and including `period_max`.
    pub fn new(period_min: f64, period_max: f64, scales_per_octave: u32) -> Result<Self> {
        if !(period_min > 0.0 && period_max > period_min && scales_per_octave > 0) {
            return Err(Error::Config(format!(
                "scale bank [{period_min}, {period_max}] at {scales_per_octave}/octave"
            )));
        }
        let octaves = (period_max / period_min).log2();
        let n = (octaves * f64::from(scales_per_octave) + 1e-9).floor() as usize + 1;
        let periods = (0..n)
            .map(|k| period_min * 2f64.powf(k as f64 / f64::from(scales_per_octave)))
            .collect();
        Ok(Self {
            periods,
            scales_per_octave,
        })
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    pub fn scales_per_octave(&self) -> u32 {
        self.scales_per_octave
    }

    /// Indices of the scales whose periods lie in `[lo, hi]` seconds.
    pub fn band(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let tol = 1e-9;
        let start = self
            .periods
            .iter()
            .position(|&p| p >= lo * (1.0 - tol))
            .unwrap_or(self.len());
        let end = self
            .periods
            .iter()
            .rposition(|&p| p <= hi * (1.0 + tol))
            .map_or(0, |i| i + 1);
        start..end.max(start)
    }

    /// Mexican-hat dilation for scale `k`, in seconds.
    pub fn dilation(&self, k: usize) -> f64 {
        self.periods[k] * MEXICAN_HAT_CENTER_FREQUENCY
    }
}

/// Cycles per unit time at which a unit-scale Mexican hat responds most strongly
/// (with L2-normalized dilations): `sqrt(5/2) / (2π)`.
pub const MEXICAN_HAT_CENTER_FREQUENCY: f64 = 0.251_646_060_522_435_2;

/// Mexican hat with unit L2 norm: `2 / (sqrt(3) π^¼) · (1 − t²) · exp(−t²/2)`.
pub fn mexican_hat(t: f64) -> f64 {
    let norm = 2.0 / (3f64.sqrt() * PI.powf(0.25));
    let t2 = t * t;
    norm * (1.0 - t2) * (-0.5 * t2).exp()
}

/// Wavelet coefficients, one row per scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scalogram {
    rows: Vec<Vec<f64>>,
    bank: ScaleBank,
    frame_period: f64,
}

impl Scalogram {
    /// Wraps precomputed rows (used for synthetic inputs to line tracking).
    pub fn from_rows(rows: Vec<Vec<f64>>, bank: ScaleBank, frame_period: f64) -> Result<Self> {
        if rows.len() != bank.len() {
            return Err(Error::LengthMismatch(format!(
                "{} rows for {} scales",
                rows.len(),
                bank.len()
            )));
        }
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::LengthMismatch("ragged scalogram rows".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        Ok(Self {
            rows,
            bank,
            frame_period,
        })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.rows[k]
    }

    pub fn bank(&self) -> &ScaleBank {
        &self.bank
    }

    pub fn frame_period(&self) -> f64 {
        self.frame_period
    }

    pub fn n_scales(&self) -> usize {
        self.rows.len()
    }

    pub fn n_frames(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }
}

/// Maps any integer index onto `0..n` by whole-sample symmetric reflection
/// (`x[-1] = x[0]`), repeating as often as needed.
fn reflect(idx: i64, n: usize) -> usize {
    let n = n as i64;
    let period = 2 * n;
    let m = idx.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Continuous wavelet transform with the Mexican hat.
///
/// Row `k` is the signal convolved with `a^(-1/2) ψ(t / a)` sampled at the
/// frame period, where `a` is [`ScaleBank::dilation`]. Edges are reflected.
pub fn cwt(signal: &ProsodicSignal, bank: &ScaleBank) -> Result<Scalogram> {
    let x = signal.values();
    let n = x.len();
    if n < 2 {
        return Err(Error::TooFewFrames(format!(
            "CWT needs at least 2 frames, got {n}"
        )));
    }
    let dt = signal.frame_period();
    let rows = (0..bank.len())
        .map(|k| {
            let a = bank.dilation(k);
            let half = (SUPPORT * a / dt).ceil() as i64;
            let gain = dt / a.sqrt();
            let kernel: Vec<f64> = (-half..=half)
                .map(|m| gain * mexican_hat(m as f64 * dt / a))
                .collect();
            (0..n as i64)
                .map(|i| {
                    kernel
                        .iter()
                        .zip(-half..=half)
                        .map(|(w, m)| w * x[reflect(i + m, n)])
                        .sum()
                })
                .collect()
        })
        .collect();
    Ok(Scalogram {
        rows,
        bank: bank.clone(),
        frame_period: dt,
    })
}
