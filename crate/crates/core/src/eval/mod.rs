//! Objective comparison of synthetic against reference speech, and label
//! agreement.
//!
//! Both sides of a pair are reduced to 10 ms log-mel frames, aligned with
//! DTW, and the f0, energy and duration tracks are compared along the warp.

mod dtw;
mod features;
mod labels;
mod series;
pub mod stats;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use dtw::{dtw_align, euclidean, path_cost, WarpPath};
pub use features::{mel_features, mel_framing, FeatureMatrix, MEL_BANDS, MEL_HOP, MEL_WINDOW};
pub use labels::{label_report, ClassReport, ClassScores, LabelReport};
pub use series::{
    duration_metrics, matched_pairs, pearson, rmse, series_metrics, warp_indices, warp_series,
    DurationMetrics, SeriesMetrics,
};
pub use stats::{significance_tests, Significance};

use crate::config::SignalsConfig;
use crate::error::Result;
use crate::ingest::{Alignment, AudioBuffer};
use crate::signals::{extract_energy_on, extract_f0_on};

/// Per-frame tracks on the mel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalTracks {
    pub features: FeatureMatrix,
    /// Semitones re 100 Hz; meaningful only where `voiced`.
    pub f0_st: Vec<f64>,
    pub voiced: Vec<bool>,
    pub energy_db: Vec<f64>,
}

pub fn eval_tracks(audio: &AudioBuffer, cfg: &SignalsConfig) -> Result<EvalTracks> {
    let framing = mel_framing(audio)?;
    let features = mel_features(audio)?;
    let pitch = extract_f0_on(audio, &framing, &cfg.pitch())?;
    let energy = extract_energy_on(audio, &framing, &cfg.energy())?;
    let f0_st = pitch
        .f0_hz
        .iter()
        .zip(&pitch.voiced)
        .map(|(&hz, &v)| if v { 12.0 * (hz / 100.0).log2() } else { 0.0 })
        .collect();
    Ok(EvalTracks {
        features,
        f0_st,
        voiced: pitch.voiced,
        energy_db: energy.into_values(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    F0,
    Energy,
    PhoneDuration,
    WordDuration,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::F0, Metric::Energy, Metric::PhoneDuration, Metric::WordDuration];

    pub fn name(self) -> &'static str {
        match self {
            Metric::F0 => "f0",
            Metric::Energy => "energy",
            Metric::PhoneDuration => "phone_duration",
            Metric::WordDuration => "word_duration",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Metric::F0 => "semitones",
            Metric::Energy => "dB",
            Metric::PhoneDuration | Metric::WordDuration => "seconds",
        }
    }
}

/// Comparison of one synthetic utterance with its reference. A metric is
/// absent when there was too little material; `notes` says why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceMetrics {
    pub id: String,
    pub system: String,
    pub dtw_cost: f64,
    pub n_ref_frames: usize,
    pub n_syn_frames: usize,
    pub f0: Option<SeriesMetrics>,
    pub energy: Option<SeriesMetrics>,
    pub phone_duration: Option<SeriesMetrics>,
    pub word_duration: Option<SeriesMetrics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl UtteranceMetrics {
    pub fn get(&self, metric: Metric) -> Option<&SeriesMetrics> {
        match metric {
            Metric::F0 => self.f0.as_ref(),
            Metric::Energy => self.energy.as_ref(),
            Metric::PhoneDuration => self.phone_duration.as_ref(),
            Metric::WordDuration => self.word_duration.as_ref(),
        }
    }
}

/// Compares precomputed tracks and alignments. f0 and energy are compared
/// only where both warped frames are voiced.
pub fn compare_tracks(
    id: &str,
    system: &str,
    reference: (&EvalTracks, &Alignment),
    synthetic: (&EvalTracks, &Alignment),
) -> Result<UtteranceMetrics> {
    let (rt, ra) = reference;
    let (st, sa) = synthetic;
    let (path, dtw_cost) = dtw_align(&rt.features, &st.features)?;
    let mut notes = Vec::new();
    let mut keep = |name: &str, r: Result<SeriesMetrics>| match r {
        Ok(m) => Some(m),
        Err(e) => {
            notes.push(format!("{name}: {e}"));
            None
        }
    };

    let voiced = warp_series(&path, &rt.voiced, &st.voiced)?;
    let mask: Vec<bool> = voiced.iter().map(|&(a, b)| a && b).collect();
    let f0 = warp_series(&path, &rt.f0_st, &st.f0_st)?;
    let energy = warp_series(&path, &rt.energy_db, &st.energy_db)?;
    let f0 = keep("f0", series_metrics(&f0, &mask));
    let energy = keep("energy", series_metrics(&energy, &mask));
    let (phone_duration, word_duration) = match duration_metrics(ra, sa) {
        Ok(d) => (Some(d.phone), Some(d.word)),
        Err(e) => {
            notes.push(format!("durations: {e}"));
            (None, None)
        }
    };
    Ok(UtteranceMetrics {
        id: id.to_string(),
        system: system.to_string(),
        dtw_cost,
        n_ref_frames: rt.features.n_frames(),
        n_syn_frames: st.features.n_frames(),
        f0,
        energy,
        phone_duration,
        word_duration,
        notes,
    })
}

/// Audio-level convenience wrapper around [`compare_tracks`].
pub fn evaluate_utterance(
    id: &str,
    system: &str,
    reference: (&AudioBuffer, &Alignment),
    synthetic: (&AudioBuffer, &Alignment),
    cfg: &SignalsConfig,
) -> Result<UtteranceMetrics> {
    let rt = eval_tracks(reference.0, cfg)?;
    let st = eval_tracks(synthetic.0, cfg)?;
    compare_tracks(id, system, (&rt, reference.1), (&st, synthetic.1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean_rmse: Option<f64>,
    pub mean_corr: Option<f64>,
    pub n_rmse: usize,
    pub n_corr: usize,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Utterance ids present on only one side of a reference/system pairing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MissingIds {
    pub only_in_reference: Vec<String>,
    pub only_in_system: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config_hash: String,
    pub reference: String,
    pub systems: Vec<String>,
    /// Where the synthetic side's prosodic labels came from, if stated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_source: Option<String>,
    pub per_utterance: Vec<UtteranceMetrics>,
    /// metric → system → means.
    pub aggregate: BTreeMap<String, BTreeMap<String, Aggregate>>,
    /// `<metric>.rmse` / `<metric>.corr` → ANOVA across systems with
    /// pooled-variance pairwise t-tests.
    pub significance: BTreeMap<String, Significance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<LabelReport>,
    pub missing: BTreeMap<String, MissingIds>,
    pub units: BTreeMap<String, String>,
}

impl EvalReport {
    /// Aggregates per-utterance rows. Significance tests need at least two
    /// systems; a metric with too few values for a test is left out.
    pub fn build(
        config_hash: String,
        reference: String,
        systems: Vec<String>,
        per_utterance: Vec<UtteranceMetrics>,
        missing: BTreeMap<String, MissingIds>,
    ) -> Self {
        let mut aggregate = BTreeMap::new();
        let mut significance = BTreeMap::new();
        for metric in Metric::ALL {
            let mut rmse_groups = Vec::new();
            let mut corr_groups = Vec::new();
            let mut per_system = BTreeMap::new();
            for sys in &systems {
                let rows: Vec<&SeriesMetrics> = per_utterance
                    .iter()
                    .filter(|u| &u.system == sys)
                    .filter_map(|u| u.get(metric))
                    .collect();
                let rm: Vec<f64> = rows.iter().map(|m| m.rmse).collect();
                let cr: Vec<f64> = rows.iter().filter_map(|m| m.correlation).collect();
                per_system.insert(
                    sys.clone(),
                    Aggregate {
                        mean_rmse: mean(&rm),
                        mean_corr: mean(&cr),
                        n_rmse: rm.len(),
                        n_corr: cr.len(),
                    },
                );
                rmse_groups.push((sys.clone(), rm));
                corr_groups.push((sys.clone(), cr));
            }
            aggregate.insert(metric.name().to_string(), per_system);
            if systems.len() >= 2 {
                for (suffix, groups) in [("rmse", rmse_groups), ("corr", corr_groups)] {
                    let key = format!("{}.{suffix}", metric.name());
                    match significance_tests(&groups) {
                        Ok(s) => {
                            significance.insert(key, s);
                        }
                        Err(e) => log::warn!("skipping significance for {key}: {e}"),
                    }
                }
            }
        }
        let units = Metric::ALL
            .iter()
            .map(|m| (m.name().to_string(), m.unit().to_string()))
            .collect();
        Self {
            config_hash,
            reference,
            systems,
            label_source: None,
            per_utterance,
            aggregate,
            significance,
            labels: None,
            missing,
            units,
        }
    }
}
