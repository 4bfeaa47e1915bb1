use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::FeatureMatrix;

/// Monotone `(i, j)` pairs from `(0, 0)` to `(n-1, m-1)` with unit steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WarpPath(Vec<(usize, usize)>);

impl WarpPath {
    /// Checks the start, end and step invariants.
    pub fn new(pairs: Vec<(usize, usize)>, n: usize, m: usize) -> Result<Self> {
        let ok = pairs.first() == Some(&(0, 0))
            && pairs.last() == Some(&(n.wrapping_sub(1), m.wrapping_sub(1)))
            && pairs.windows(2).all(|w| {
                let (di, dj) = (w[1].0.wrapping_sub(w[0].0), w[1].1.wrapping_sub(w[0].1));
                matches!((di, dj), (1, 0) | (0, 1) | (1, 1))
            });
        if ok {
            Ok(Self(pairs))
        } else {
            Err(Error::InvalidInput("not a warp path".into()))
        }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `(n, m)`: the lengths of the two aligned sequences.
    pub fn shape(&self) -> (usize, usize) {
        let &(i, j) = self.0.last().expect("paths are non-empty");
        (i + 1, j + 1)
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Sum of frame distances along `path`.
pub fn path_cost(a: &FeatureMatrix, b: &FeatureMatrix, path: &WarpPath) -> f64 {
    path.pairs()
        .iter()
        .map(|&(i, j)| euclidean(&a.frames()[i], &b.frames()[j]))
        .sum()
}

/// Minimum-cost alignment under Euclidean frame distance with steps
/// (1,0), (0,1), (1,1). Among equal-cost predecessors the diagonal wins,
/// then (1,0).
pub fn dtw_align(a: &FeatureMatrix, b: &FeatureMatrix) -> Result<(WarpPath, f64)> {
    if a.n_bands() != b.n_bands() {
        return Err(Error::BandMismatch(a.n_bands(), b.n_bands()));
    }
    let (n, m) = (a.n_frames(), b.n_frames());
    let mut acc = vec![f64::INFINITY; n * m];
    let at = |i: usize, j: usize| i * m + j;
    for i in 0..n {
        for j in 0..m {
            let d = euclidean(&a.frames()[i], &b.frames()[j]);
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let diag = if i > 0 && j > 0 { acc[at(i - 1, j - 1)] } else { f64::INFINITY };
                let up = if i > 0 { acc[at(i - 1, j)] } else { f64::INFINITY };
                let left = if j > 0 { acc[at(i, j - 1)] } else { f64::INFINITY };
                diag.min(up).min(left)
            };
            acc[at(i, j)] = d + best;
        }
    }

    let mut path = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while (i, j) != (0, 0) {
        let cand = [
            (i > 0 && j > 0).then(|| (i - 1, j - 1)),
            (i > 0).then(|| (i - 1, j)),
            (j > 0).then(|| (i, j - 1)),
        ];
        let (pi, pj) = cand
            .into_iter()
            .flatten()
            .reduce(|best, c| if acc[at(c.0, c.1)] < acc[at(best.0, best.1)] { c } else { best })
            .expect("some predecessor exists");
        path.push((pi, pj));
        (i, j) = (pi, pj);
    }
    path.reverse();
    Ok((WarpPath(path), acc[at(n - 1, m - 1)]))
}
