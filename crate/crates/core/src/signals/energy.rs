use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{window_at, Framing, ProsodicSignal, SignalKind};
use crate::error::{Error, Result};
use crate::ingest::AudioBuffer;

const FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyConfig {
    /// RMS window length in seconds.
    pub window: f64,
    /// Optional pass band in Hz; `None` measures the full band.
    pub band: Option<(f64, f64)>,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            window: 0.030,
            band: None,
        }
    }
}

/// Frame energy in dB, `20·log10(rms + 1e-10)`, on an explicit frame grid.
pub fn extract_energy_on(
    audio: &AudioBuffer,
    framing: &Framing,
    cfg: &EnergyConfig,
) -> Result<ProsodicSignal> {
    let sr = audio.sample_rate();
    let win = (cfg.window * f64::from(sr)).round() as usize;
    if win == 0 || audio.len() < win {
        return Err(Error::TooShort(format!(
            "{} samples is shorter than one {:.0} ms energy window",
            audio.len(),
            cfg.window * 1e3
        )));
    }

    let band = match cfg.band {
        Some((lo, hi)) if lo >= 0.0 && lo < hi => {
            let bin_hz = f64::from(sr) / win as f64;
            Some((lo / bin_hz, hi / bin_hz))
        }
        Some((lo, hi)) => return Err(Error::Config(format!("energy band [{lo}, {hi}]"))),
        None => None,
    };
    let fft = band.map(|_| FftPlanner::<f64>::new().plan_fft_forward(win));

    let mut buf = Vec::with_capacity(win);
    let mut spectrum = vec![Complex::new(0.0, 0.0); win];
    let values = (0..framing.n_frames)
        .map(|i| {
            let centre = framing.center_sample(i, sr);
            window_at(audio.samples(), centre - (win / 2) as i64, win, &mut buf);
            let mean_square = match (band, &fft) {
                (Some((lo, hi)), Some(fft)) => {
                    for (s, x) in spectrum.iter_mut().zip(&buf) {
                        *s = Complex::new(*x, 0.0);
                    }
                    fft.process(&mut spectrum);
                    // Parseval over the bins whose (folded) frequency lies in the band
                    let power: f64 = spectrum
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| {
                            let folded = (*k).min(win - *k) as f64;
                            folded >= lo && folded <= hi
                        })
                        .map(|(_, c)| c.norm_sqr())
                        .sum();
                    power / (win * win) as f64
                }
                _ => buf.iter().map(|x| x * x).sum::<f64>() / win as f64,
            };
            20.0 * (mean_square.sqrt() + FLOOR).log10()
        })
        .collect();
    ProsodicSignal::new(values, framing.frame_period, SignalKind::EnergyDb)
}

/// Energy at `frame_period` hop, frames centred at multiples of the hop.
pub fn extract_energy(
    audio: &AudioBuffer,
    frame_period: f64,
    cfg: &EnergyConfig,
) -> Result<ProsodicSignal> {
    let framing = Framing::centered(audio.len(), audio.sample_rate(), frame_period);
    extract_energy_on(audio, &framing, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(amp: f64, hz: f64, n: usize, sr: u32) -> AudioBuffer {
        let samples = (0..n)
            .map(|i| amp * (2.0 * PI * hz * i as f64 / f64::from(sr)).sin())
            .collect();
        AudioBuffer::new(samples, sr).unwrap()
    }

    #[test]
    fn sine_level_matches_closed_form() {
        let audio = sine(0.5, 200.0, 16000, 16000);
        let e = extract_energy(&audio, 0.005, &EnergyConfig::default()).unwrap();
        let expected = 20.0 * (0.5 / 2f64.sqrt()).log10();
        assert!((expected + 9.03).abs() < 0.01);
        for &v in &e.values()[5..e.len() - 5] {
            assert!((v - expected).abs() < 0.5, "{v}");
        }
    }

    #[test]
    fn silence_hits_floor() {
        let audio = AudioBuffer::new(vec![0.0; 8000], 16000).unwrap();
        let e = extract_energy(&audio, 0.005, &EnergyConfig::default()).unwrap();
        assert!(e.values().iter().all(|v| (*v + 200.0).abs() < 1e-9));
    }

    #[test]
    fn scaling_shifts_every_frame() {
        let audio = sine(0.3, 150.0, 8000, 16000);
        let cfg = EnergyConfig::default();
        let e1 = extract_energy(&audio, 0.005, &cfg).unwrap();
        let e2 = extract_energy(&audio.scaled(2.0), 0.005, &cfg).unwrap();
        let shift = 20.0 * 2f64.log10();
        for (a, b) in e1.values().iter().zip(e2.values()) {
            assert!((b - a - shift).abs() < 0.01);
        }
    }

    #[test]
    fn band_limited_energy_rejects_out_of_band_tone() {
        let audio = sine(0.5, 3000.0, 16000, 16000);
        let full = extract_energy(&audio, 0.005, &EnergyConfig::default()).unwrap();
        let banded = extract_energy(
            &audio,
            0.005,
            &EnergyConfig {
                band: Some((50.0, 1000.0)),
                ..EnergyConfig::default()
            },
        )
        .unwrap();
        let mid = full.len() / 2;
        assert!(full.values()[mid] - banded.values()[mid] > 20.0);

        // in-band: matches the full-band level
        let audio = sine(0.5, 400.0, 16000, 16000);
        let banded = extract_energy(
            &audio,
            0.005,
            &EnergyConfig {
                band: Some((50.0, 1000.0)),
                ..EnergyConfig::default()
            },
        )
        .unwrap();
        assert!((banded.values()[mid] + 9.03).abs() < 0.5);
    }

    #[test]
    fn too_short() {
        let audio = AudioBuffer::new(vec![0.0; 100], 16000).unwrap();
        assert!(extract_energy(&audio, 0.005, &EnergyConfig::default()).is_err());
    }
}
