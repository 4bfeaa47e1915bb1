use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::WarpPath;
use crate::ingest::Alignment;

/// RMSE and Pearson correlation over compared pairs. Correlation is absent
/// when either side has zero variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesMetrics {
    pub rmse: f64,
    pub correlation: Option<f64>,
    pub n: usize,
}

/// For each reference frame `i`, the first synthetic frame `j` with `(i, j)` on the path.
pub fn warp_indices(path: &WarpPath) -> Vec<usize> {
    let (n, _) = path.shape();
    let mut out = Vec::with_capacity(n);
    for &(i, j) in path.pairs() {
        if i == out.len() {
            out.push(j);
        }
    }
    out
}

/// Pairs every reference value with its warped synthetic value; output length is `ref_series.len()`.
pub fn warp_series<T: Copy>(path: &WarpPath, ref_series: &[T], syn_series: &[T]) -> Result<Vec<(T, T)>> {
    let (n, m) = path.shape();
    if ref_series.len() != n || syn_series.len() != m {
        return Err(Error::LengthMismatch(format!(
            "series of {} and {} frames for a {n}×{m} path",
            ref_series.len(),
            syn_series.len()
        )));
    }
    Ok(warp_indices(path)
        .into_iter()
        .zip(ref_series)
        .map(|(j, &r)| (r, syn_series[j]))
        .collect())
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|x| *x == v[0])
}

/// Pearson correlation, `None` for constant inputs.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.is_empty() || is_constant(x) || is_constant(y) {
        return None;
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn rmse(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    (x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n).sqrt()
}

/// Metrics over the pairs whose `mask` entry is true; needs at least three.
pub fn series_metrics(pairs: &[(f64, f64)], mask: &[bool]) -> Result<SeriesMetrics> {
    if pairs.len() != mask.len() {
        return Err(Error::LengthMismatch(format!(
            "{} pairs, {} mask entries",
            pairs.len(),
            mask.len()
        )));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pairs
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&p, _)| p)
        .unzip();
    if x.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} compared pairs, need at least 3",
            x.len()
        )));
    }
    Ok(SeriesMetrics {
        rmse: rmse(&x, &y),
        correlation: pearson(&x, &y),
        n: x.len(),
    })
}

/// Index pairs of equal labels on a minimum-edit-distance alignment.
/// Among equal-cost moves a match or substitution is preferred.
pub fn matched_pairs<T: PartialEq>(a: &[T], b: &[T]) -> Vec<(usize, usize)> {
    let (n, m) = (a.len(), b.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        d[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    let (mut i, mut j) = (n, m);
    let mut out = Vec::new();
    while i > 0 && j > 0 {
        let same = a[i - 1] == b[j - 1];
        if d[i][j] == d[i - 1][j - 1] + usize::from(!same) {
            if same {
                out.push((i - 1, j - 1));
            }
            i -= 1;
            j -= 1;
        } else if d[i][j] == d[i - 1][j] + 1 {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    out.reverse();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DurationMetrics {
    pub phone: SeriesMetrics,
    pub word: SeriesMetrics,
}

fn unit_metrics(kind: &str, r: &[(String, f64)], s: &[(String, f64)]) -> Result<SeriesMetrics> {
    let (rl, sl): (Vec<&String>, Vec<&String>) = (r.iter().map(|u| &u.0).collect(), s.iter().map(|u| &u.0).collect());
    let pairs: Vec<(f64, f64)> = if rl == sl {
        r.iter().zip(s).map(|(a, b)| (a.1, b.1)).collect()
    } else {
        matched_pairs(&rl, &sl)
            .into_iter()
            .map(|(i, j)| (r[i].1, s[j].1))
            .collect()
    };
    series_metrics(&pairs, &vec![true; pairs.len()]).map_err(|e| match e {
        Error::InsufficientData(msg) => Error::InsufficientData(format!("{kind} durations: {msg}")),
        other => other,
    })
}

/// Phone and word duration agreement (seconds), silences excluded.
pub fn duration_metrics(reference: &Alignment, synthetic: &Alignment) -> Result<DurationMetrics> {
    let phones = |a: &Alignment| -> Vec<(String, f64)> {
        a.spoken_phones().map(|p| (p.label.clone(), p.duration())).collect()
    };
    let words = |a: &Alignment| -> Vec<(String, f64)> {
        a.spoken_words().map(|w| (w.label.clone(), w.duration())).collect()
    };
    Ok(DurationMetrics {
        phone: unit_metrics("phone", &phones(reference), &phones(synthetic))?,
        word: unit_metrics("word", &words(reference), &words(synthetic))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Interval;
    use proptest::prelude::*;

    #[test]
    fn first_match_rule() {
        let p = WarpPath::new(vec![(0, 0), (1, 0), (2, 1)], 3, 2).unwrap();
        let w = warp_series(&p, &[10, 11, 12], &[20, 21]).unwrap();
        assert_eq!(w, [(10, 20), (11, 20), (12, 21)]);
        let p = WarpPath::new(vec![(0, 0), (0, 1), (1, 2)], 2, 3).unwrap();
        assert_eq!(warp_series(&p, &[1, 2], &[5, 6, 7]).unwrap(), [(1, 5), (2, 7)]);
        assert!(warp_series(&p, &[1, 2, 3], &[5, 6, 7]).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let pairs = [(1.0, 1.0), (2.0, 3.0), (3.0, 2.0), (4.0, 4.0)];
        let m = series_metrics(&pairs, &[true; 4]).unwrap();
        assert!((m.correlation.unwrap() - 0.8).abs() < 1e-12);

        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]) - 12.5f64.sqrt()).abs() < 1e-12);
        // two pairs survive the mask: too few for series_metrics
        let pairs = [(0.0, 3.0), (0.0, 4.0), (100.0, -1.0)];
        assert!(matches!(
            series_metrics(&pairs, &[true, true, false]),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn identical_series() {
        let pairs: Vec<_> = [1.0, 4.0, 2.0, 8.0].iter().map(|&v| (v, v)).collect();
        let m = series_metrics(&pairs, &[true; 4]).unwrap();
        assert_eq!((m.rmse, m.correlation, m.n), (0.0, Some(1.0), 4));
    }

    #[test]
    fn constant_side_has_no_correlation() {
        let pairs = [(1.0, 2.0), (1.0, 3.0), (1.0, 5.0)];
        assert_eq!(series_metrics(&pairs, &[true; 3]).unwrap().correlation, None);
    }

    fn align(words: &[(&str, f64, f64)], phones: &[(&str, f64, f64)]) -> Alignment {
        let iv = |v: &[(&str, f64, f64)]| v.iter().map(|&(l, s, e)| Interval::new(l, s, e)).collect();
        Alignment::from_tiers("u".to_string(), iv(words), iv(phones)).unwrap()
    }

    fn sample(shift: f64, sub: bool) -> Alignment {
        let mut words = Vec::new();
        let mut phones = Vec::new();
        let mut t = 0.0;
        for (w, ph) in [("ab", ["a", "b"]), ("cd", ["c", "d"]), ("ef", ["e", "f"])] {
            let ws = t;
            for (k, p) in ph.iter().enumerate() {
                let d = 0.05 + 0.02 * (phones.len() % 3) as f64 + shift;
                let label = if sub && k == 0 && w == "cd" { "x" } else { p };
                phones.push((label, t, t + d));
                t += d;
            }
            words.push((w, ws, t));
        }
        let wl: Vec<(&str, f64, f64)> = words.iter().map(|&(w, s, e)| (w, s, e)).collect();
        align(&wl, &phones)
    }

    #[test]
    fn durations_identical_and_shifted() {
        let a = sample(0.0, false);
        let m = duration_metrics(&a, &a).unwrap();
        assert_eq!(m.phone.rmse, 0.0);
        assert_eq!(m.phone.correlation, Some(1.0));
        assert_eq!(m.word.correlation, Some(1.0));
        let b = sample(0.010, false);
        let m = duration_metrics(&a, &b).unwrap();
        assert!((m.phone.rmse - 0.010).abs() < 1e-9);
        assert!((m.phone.correlation.unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(m.phone.n, 6);
    }

    #[test]
    fn substituted_phone_is_excluded() {
        let m = duration_metrics(&sample(0.0, false), &sample(0.0, true)).unwrap();
        assert_eq!(m.phone.n, 5);
        assert_eq!(m.phone.rmse, 0.0);
    }

    #[test]
    fn too_few_units() {
        let a = align(&[("a", 0.0, 0.1)], &[("a", 0.0, 0.1)]);
        assert!(matches!(duration_metrics(&a, &a), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn edit_alignment_matches() {
        assert_eq!(matched_pairs(&["a", "b", "c"], &["a", "c"]), [(0, 0), (2, 1)]);
        assert_eq!(matched_pairs(&["a", "x", "c"], &["a", "y", "c"]), [(0, 0), (2, 2)]);
        assert!(matched_pairs::<&str>(&[], &["a"]).is_empty());
    }

    proptest! {
        #[test]
        fn correlation_and_rmse_invariances(
            pairs in prop::collection::vec((-10f64..10.0, -10f64..10.0), 3..50),
            a in 0.1f64..10.0, b in -5f64..5.0, c in -5f64..5.0,
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
            let xa: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            if let (Some(r1), Some(r2)) = (pearson(&x, &y), pearson(&xa, &y)) {
                prop_assert!((r1 - r2).abs() < 1e-9);
                prop_assert!((-1.0..=1.0).contains(&r1));
            }
            let xc: Vec<f64> = x.iter().map(|v| v + c).collect();
            let yc: Vec<f64> = y.iter().map(|v| v + c).collect();
            prop_assert!((rmse(&x, &y) - rmse(&xc, &yc)).abs() < 1e-9);
        }
    }
}
