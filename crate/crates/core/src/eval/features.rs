use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::AudioBuffer;
use crate::signals::Framing;

pub const MEL_BANDS: usize = 40;
pub const MEL_HOP: f64 = 0.010;
pub const MEL_WINDOW: f64 = 0.025;
const MEL_FMAX: f64 = 8000.0;
const LOG_FLOOR: f64 = 1e-10;

/// Frames × bands of log energies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    frames: Vec<Vec<f64>>,
    n_bands: usize,
    pub hop: f64,
    pub window: f64,
}

impl FeatureMatrix {
    /// Rows must be non-empty, equally long and finite.
    pub fn new(frames: Vec<Vec<f64>>, hop: f64, window: f64) -> Result<Self> {
        let n_bands = frames.first().map_or(0, Vec::len);
        if n_bands == 0 {
            return Err(Error::InvalidInput("feature matrix needs at least one band".into()));
        }
        if frames.iter().any(|f| f.len() != n_bands) {
            return Err(Error::LengthMismatch("ragged feature frames".into()));
        }
        if frames.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite feature".into()));
        }
        Ok(Self {
            frames,
            n_bands,
            hop,
            window,
        })
    }

    /// One band per frame, handy for tests and scalar sequences.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| vec![v]).collect(), 1.0, 1.0)
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn n_bands(&self) -> usize {
        self.n_bands
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters on FFT bins `0..=n_fft/2`, equally spaced in HTK mel.
fn mel_filterbank(n_fft: usize, sample_rate: u32, n_bands: usize, fmax: f64) -> Vec<Vec<(usize, f64)>> {
    let fmax = fmax.min(f64::from(sample_rate) / 2.0);
    let mel_max = hz_to_mel(fmax);
    let edges: Vec<f64> = (0..n_bands + 2)
        .map(|i| mel_to_hz(mel_max * i as f64 / (n_bands + 1) as f64))
        .collect();
    let bin_hz = f64::from(sample_rate) / n_fft as f64;
    (0..n_bands)
        .map(|b| {
            let (lo, mid, hi) = (edges[b], edges[b + 1], edges[b + 2]);
            (0..=n_fft / 2)
                .filter_map(|k| {
                    let f = k as f64 * bin_hz;
                    let w = if f > lo && f <= mid {
                        (f - lo) / (mid - lo)
                    } else if f > mid && f < hi {
                        (hi - f) / (hi - mid)
                    } else {
                        0.0
                    };
                    (w > 0.0).then_some((k, w))
                })
                .collect()
        })
        .collect()
}

/// The frame grid shared by [`mel_features`] and the evaluation f0/energy tracks.
pub fn mel_framing(audio: &AudioBuffer) -> Result<Framing> {
    Framing::windowed(audio.len(), audio.sample_rate(), MEL_HOP, MEL_WINDOW).ok_or_else(|| {
        Error::TooShort(format!(
            "{} samples is shorter than one {:.0} ms mel window",
            audio.len(),
            MEL_WINDOW * 1e3
        ))
    })
}

/// 40 log-mel band energies every 10 ms over 25 ms Hann windows:
/// power spectrum, HTK triangular filters from 0 to 8 kHz (or Nyquist),
/// natural log floored at 1e-10.
pub fn mel_features(audio: &AudioBuffer) -> Result<FeatureMatrix> {
    let framing = mel_framing(audio)?;
    let sr = audio.sample_rate();
    let win = (MEL_WINDOW * f64::from(sr)).round() as usize;
    let hop = (MEL_HOP * f64::from(sr)).round() as usize;
    let n_fft = win.next_power_of_two();
    let hann: Vec<f64> = (0..win)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / win as f64).cos())
        .collect();
    let bank = mel_filterbank(n_fft, sr, MEL_BANDS, MEL_FMAX);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);

    let mut spectrum = vec![Complex::new(0.0, 0.0); n_fft];
    let mut power = vec![0.0; n_fft / 2 + 1];
    let frames = (0..framing.n_frames)
        .map(|i| {
            let frame = &audio.samples()[i * hop..i * hop + win];
            for (k, s) in spectrum.iter_mut().enumerate() {
                *s = if k < win {
                    Complex::new(frame[k] * hann[k], 0.0)
                } else {
                    Complex::new(0.0, 0.0)
                };
            }
            fft.process(&mut spectrum);
            for (p, c) in power.iter_mut().zip(&spectrum) {
                *p = c.norm_sqr();
            }
            bank.iter()
                .map(|filter| {
                    let e: f64 = filter.iter().map(|&(k, w)| w * power[k]).sum();
                    e.max(LOG_FLOOR).ln()
                })
                .collect()
        })
        .collect();
    FeatureMatrix::new(frames, MEL_HOP, MEL_WINDOW)
}
