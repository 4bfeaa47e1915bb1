use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeler::UtteranceAnnotation;

/// Precision, recall and F for one class. `undefined` marks a 0/0 that was
/// reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
    pub support: u64,
    pub undefined: bool,
}

/// Agreement for one label kind. `confusion[oracle][predicted]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub confusion: [[u64; 3]; 3],
    pub classes: [ClassScores; 3],
    pub accuracy: f64,
    pub total: u64,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

impl ClassReport {
    /// Compares position-matched class sequences.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u8, u8)>) -> Result<Self> {
        let mut confusion = [[0u64; 3]; 3];
        for (o, p) in pairs {
            if o > 2 || p > 2 {
                return Err(Error::InvalidInput(format!("label class outside 0..=2: ({o}, {p})")));
            }
            confusion[usize::from(o)][usize::from(p)] += 1;
        }
        let total: u64 = confusion.iter().flatten().sum();
        if total == 0 {
            return Err(Error::InvalidInput("no labels to compare".into()));
        }
        let classes = std::array::from_fn(|k| {
            let tp = confusion[k][k];
            let predicted: u64 = (0..3).map(|o| confusion[o][k]).sum();
            let support: u64 = confusion[k].iter().sum();
            let (precision, u1) = ratio(tp, predicted);
            let (recall, u2) = ratio(tp, support);
            let (f, u3) = if precision + recall == 0.0 {
                (0.0, true)
            } else {
                (2.0 * precision * recall / (precision + recall), false)
            };
            ClassScores {
                precision,
                recall,
                f,
                support,
                undefined: u1 || u2 || u3,
            }
        });
        let trace: u64 = (0..3).map(|k| confusion[k][k]).sum();
        Ok(Self {
            confusion,
            classes,
            accuracy: trace as f64 / total as f64,
            total,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelReport {
    pub prominence: ClassReport,
    pub boundary: ClassReport,
    pub n_utterances: usize,
    /// Oracle ids with no prediction, and the reverse.
    pub missing_predicted: Vec<String>,
    pub missing_oracle: Vec<String>,
}

/// Compares predicted against oracle labels, utterances matched by id and
/// words by position.
pub fn label_report(oracle: &[UtteranceAnnotation], predicted: &[UtteranceAnnotation]) -> Result<LabelReport> {
    if oracle.is_empty() || predicted.is_empty() {
        return Err(Error::NoUtterances);
    }
    let pred: BTreeMap<&str, &UtteranceAnnotation> =
        predicted.iter().map(|u| (u.id.as_str(), u)).collect();
    let oracle_ids: std::collections::BTreeSet<&str> = oracle.iter().map(|u| u.id.as_str()).collect();

    let mut p_pairs = Vec::new();
    let mut b_pairs = Vec::new();
    let mut missing_predicted = Vec::new();
    let mut n = 0;
    for o in oracle {
        let Some(p) = pred.get(o.id.as_str()) else {
            missing_predicted.push(o.id.clone());
            continue;
        };
        if o.words.len() != p.words.len() {
            return Err(Error::WordCountMismatch {
                id: o.id.clone(),
                oracle: o.words.len(),
                predicted: p.words.len(),
            });
        }
        n += 1;
        for (ow, pw) in o.words.iter().zip(&p.words) {
            p_pairs.push((ow.p_class, pw.p_class));
            b_pairs.push((ow.b_class, pw.b_class));
        }
    }
    if n == 0 {
        return Err(Error::NoCommonUtterances);
    }
    Ok(LabelReport {
        prominence: ClassReport::from_pairs(p_pairs)?,
        boundary: ClassReport::from_pairs(b_pairs)?,
        n_utterances: n,
        missing_predicted,
        missing_oracle: predicted
            .iter()
            .filter(|u| !oracle_ids.contains(u.id.as_str()))
            .map(|u| u.id.clone())
            .collect(),
    })
}
