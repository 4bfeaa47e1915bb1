use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::Scalogram;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    /// Local maxima.
    Ridge,
    /// Local minima.
    Valley,
}

impl Polarity {
    /// +1 for ridges, −1 for valleys.
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Ridge => 1.0,
            Polarity::Valley => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinePoint {
    pub scale: usize,
    pub frame: usize,
    /// Raw (unsigned-by-polarity) coefficient.
    pub amplitude: f64,
}

/// A chain of extrema followed from fine to coarse scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub polarity: Polarity,
    pub points: Vec<LinePoint>,
    pub strength: f64,
    /// Frame of the point at the finest scale.
    pub anchor_frame: usize,
}

impl Line {
    pub fn anchor_time(&self, frame_period: f64) -> f64 {
        self.anchor_frame as f64 * frame_period
    }
}

/// Mean polarity-signed amplitude over a band of `band_size` scales, with
/// negative contributions clipped to zero.
pub fn line_strength(polarity: Polarity, points: &[LinePoint], band_size: usize) -> f64 {
    if band_size == 0 {
        return 0.0;
    }
    let total: f64 = points
        .iter()
        .map(|p| (polarity.sign() * p.amplitude).max(0.0))
        .sum();
    total / band_size as f64
}

/// Strict interior local maxima of `sign · row`.
fn extrema(row: &[f64], sign: f64) -> Vec<usize> {
    (1..row.len().saturating_sub(1))
        .filter(|&i| {
            let v = sign * row[i];
            v > sign * row[i - 1] && v > sign * row[i + 1]
        })
        .collect()
}

/// Follows ridges or valleys through `band`, finest scale first.
///
/// At each coarser scale `s`, live lines claim extrema greedily by ascending
/// frame distance (ties: older line, then earlier frame), within
/// `window_factor · period(s) / frame_period` frames. Lines that find no
/// extremum close; unclaimed extrema open new lines.
pub fn track_lines(
    scalogram: &Scalogram,
    polarity: Polarity,
    band: Range<usize>,
    window_factor: f64,
) -> Result<Vec<Line>> {
    if band.is_empty() {
        return Err(Error::EmptyBand);
    }
    if band.end > scalogram.n_scales() {
        return Err(Error::InvalidInput(format!(
            "band {band:?} exceeds {} scales",
            scalogram.n_scales()
        )));
    }
    let sign = polarity.sign();
    let periods = scalogram.bank().periods();

    let mut lines: Vec<Vec<LinePoint>> = Vec::new();
    let mut live: Vec<usize> = Vec::new();

    for scale in band.clone() {
        let row = scalogram.row(scale);
        let found = extrema(row, sign);
        let point = |frame: usize| LinePoint {
            scale,
            frame,
            amplitude: row[frame],
        };

        let mut claimed = vec![false; found.len()];
        let mut next_live = Vec::with_capacity(live.len());
        if scale > band.start {
            let window = window_factor * periods[scale] / scalogram.frame_period();
            let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
            for &line in &live {
                let last = lines[line].last().expect("live lines are non-empty").frame;
                for (e, &frame) in found.iter().enumerate() {
                    let dist = last.abs_diff(frame);
                    if dist as f64 <= window {
                        candidates.push((dist, line, e));
                    }
                }
            }
            candidates.sort_unstable();
            let mut extended = vec![false; lines.len()];
            for (_, line, e) in candidates {
                if extended[line] || claimed[e] {
                    continue;
                }
                extended[line] = true;
                claimed[e] = true;
                lines[line].push(point(found[e]));
                next_live.push(line);
            }
        }
        for (e, &frame) in found.iter().enumerate() {
            if !claimed[e] {
                next_live.push(lines.len());
                lines.push(vec![point(frame)]);
            }
        }
        next_live.sort_unstable();
        live = next_live;
    }

    let band_size = band.len();
    Ok(lines
        .into_iter()
        .map(|points| Line {
            polarity,
            strength: line_strength(polarity, &points, band_size),
            anchor_frame: points[0].frame,
            points,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::ScaleBank;

    /// Scalogram with Gaussian bumps; `centres(scale)` lists bump frames per scale.
    fn bumps(
        n_scales: usize,
        n_frames: usize,
        frame_period: f64,
        amp: impl Fn(usize) -> f64,
        centres: impl Fn(usize) -> Vec<usize>,
    ) -> Scalogram {
        let bank = ScaleBank::new(0.1, 0.1 * 2f64.powi(n_scales as i32 - 1), 1).unwrap();
        let rows = (0..n_scales)
            .map(|s| {
                (0..n_frames)
                    .map(|i| {
                        centres(s)
                            .iter()
                            .map(|&c| amp(s) * (-((i as f64 - c as f64) / 4.0).powi(2)).exp())
                            .sum()
                    })
                    .collect()
            })
            .collect();
        Scalogram::from_rows(rows, bank, frame_period).unwrap()
    }

    #[test]
    fn strength_examples() {
        let pts = |amps: &[f64]| -> Vec<LinePoint> {
            amps.iter()
                .enumerate()
                .map(|(s, &a)| LinePoint { scale: s, frame: 0, amplitude: a })
                .collect()
        };
        assert_eq!(line_strength(Polarity::Ridge, &pts(&[1.0, 2.0, 3.0]), 3), 2.0);
        assert_eq!(line_strength(Polarity::Valley, &pts(&[-1.0, -1.0]), 4), 0.5);
        assert!((line_strength(Polarity::Ridge, &pts(&[1.0, -5.0, 1.0]), 3) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_bump_single_line() {
        let sc = bumps(5, 200, 0.01, |s| 1.0 + s as f64, |_| vec![50]);
        let lines = track_lines(&sc, Polarity::Ridge, 0..5, 0.5).unwrap();
        assert_eq!(lines.len(), 1);
        let line = &lines[0];
        assert_eq!(line.anchor_frame, 50);
        assert_eq!(line.points.len(), 5);
        // mean of per-scale peak amplitudes 1..=5
        assert!((line.strength - 3.0).abs() < 1e-12);
        assert!(track_lines(&sc, Polarity::Valley, 0..5, 0.5).unwrap().is_empty());
    }

    #[test]
    fn separated_bumps_two_lines() {
        let sc = bumps(5, 500, 0.01, |_| 1.0, |_| vec![50, 400]);
        let lines = track_lines(&sc, Polarity::Ridge, 0..5, 0.5).unwrap();
        assert_eq!(lines.len(), 2);
        let mut anchors: Vec<_> = lines.iter().map(|l| l.anchor_frame).collect();
        anchors.sort_unstable();
        assert_eq!(anchors, [50, 400]);
    }

    #[test]
    fn drifting_bump_depends_on_window() {
        // periods 0.1·2^s, frame period 0.01: window = factor · 10 · 2^s frames
        let sc = bumps(5, 200, 0.01, |_| 1.0, |s| vec![50 + 2 * s]);
        // factor 0.3 → window ≥ 3 frames at every scale
        let wide = track_lines(&sc, Polarity::Ridge, 0..5, 0.3).unwrap();
        assert_eq!(wide.len(), 1);
        assert_eq!(wide[0].points.len(), 5);
        // factor 0.1/2^s would be needed for w = 1 everywhere; 0.01 gives w < 2 at scales 1..=3
        let narrow = track_lines(&sc, Polarity::Ridge, 0..5, 0.01).unwrap();
        assert!(narrow.len() >= 2);
    }

    #[test]
    fn valleys_use_negated_coefficients() {
        let bank = ScaleBank::new(0.1, 0.2, 1).unwrap();
        let row = vec![0.0, -1.0, 0.0, -3.0, 0.0];
        let sc = Scalogram::from_rows(vec![row.clone(), row], bank, 0.01).unwrap();
        let lines = track_lines(&sc, Polarity::Valley, 0..2, 0.5).unwrap();
        assert_eq!(lines.len(), 2);
        let strengths: Vec<f64> = lines.iter().map(|l| l.strength).collect();
        assert!(strengths.contains(&1.0) && strengths.contains(&3.0));
    }

    #[test]
    fn empty_band_rejected() {
        let sc = bumps(3, 50, 0.01, |_| 1.0, |_| vec![20]);
        assert!(matches!(
            track_lines(&sc, Polarity::Ridge, 1..1, 0.5),
            Err(Error::EmptyBand)
        ));
        assert!(track_lines(&sc, Polarity::Ridge, 0..4, 0.5).is_err());
    }

    #[test]
    fn line_invariants_on_noisy_input() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let bank = ScaleBank::new(0.08, 1.28, 2).unwrap();
        let rows = (0..bank.len())
            .map(|_| (0..300).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let sc = Scalogram::from_rows(rows, bank, 0.005).unwrap();
        for polarity in [Polarity::Ridge, Polarity::Valley] {
            let lines = track_lines(&sc, polarity, 1..8, 0.5).unwrap();
            assert_eq!(lines, track_lines(&sc, polarity, 1..8, 0.5).unwrap());
            let mut starts = std::collections::HashSet::new();
            for l in &lines {
                assert!(!l.points.is_empty());
                assert!(l.strength >= 0.0);
                assert_eq!(l.anchor_frame, l.points[0].frame);
                for w in l.points.windows(2) {
                    assert_eq!(w[1].scale, w[0].scale + 1);
                }
                assert!(starts.insert((l.points[0].scale, l.anchor_frame)));
            }
        }
    }
}
