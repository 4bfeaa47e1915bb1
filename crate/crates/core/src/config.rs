//! Effective configuration for annotation, with TOML persistence, dotted-key
//! overrides and a stable content hash.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::labeler::Thresholds;
use crate::signals::{DurationTransform, EnergyConfig, GapFill, PitchConfig, SignalWeights};
use crate::wavelet::ScaleBank;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalsConfig {
    pub frame_period: f64,
    pub f0_min: f64,
    pub f0_max: f64,
    pub voicing_threshold: f64,
    /// `[low_hz, high_hz]`; absent means full band.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_band: Option<[f64; 2]>,
    pub f0_gap_fill: GapFill,
    pub duration_transform: DurationTransform,
    pub weights: SignalWeights,
}

impl Default for SignalsConfig {
    fn default() -> Self {
        let pitch = PitchConfig::default();
        Self {
            frame_period: 0.005,
            f0_min: pitch.f0_min,
            f0_max: pitch.f0_max,
            voicing_threshold: pitch.voicing_threshold,
            energy_band: None,
            f0_gap_fill: GapFill::Linear,
            duration_transform: DurationTransform::Linear,
            weights: SignalWeights::default(),
        }
    }
}

impl SignalsConfig {
    pub fn pitch(&self) -> PitchConfig {
        PitchConfig {
            f0_min: self.f0_min,
            f0_max: self.f0_max,
            voicing_threshold: self.voicing_threshold,
            ..PitchConfig::default()
        }
    }

    pub fn energy(&self) -> EnergyConfig {
        EnergyConfig {
            band: self.energy_band.map(|[lo, hi]| (lo, hi)),
            ..EnergyConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveletConfig {
    pub scales_per_octave: u32,
    pub period_min: f64,
    pub period_max: f64,
    /// Period range (seconds) searched for prominence ridges.
    pub word_band: [f64; 2],
    /// Period range (seconds) searched for boundary valleys.
    pub phrase_band: [f64; 2],
    pub link_window_factor: f64,
}

impl Default for WaveletConfig {
    fn default() -> Self {
        Self {
            scales_per_octave: 2,
            period_min: 0.08,
            period_max: 5.12,
            word_band: [0.16, 1.28],
            phrase_band: [0.64, 5.12],
            link_window_factor: 0.5,
        }
    }
}

impl WaveletConfig {
    pub fn bank(&self) -> Result<ScaleBank> {
        ScaleBank::new(self.period_min, self.period_max, self.scales_per_octave)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelerConfig {
    pub thresholds: Thresholds,
}

/// Everything that influences annotation output.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub signals: SignalsConfig,
    pub wavelet: WaveletConfig,
    pub labeler: LabelerConfig,
}

const SECTIONS: [&str; 3] = ["signals", "wavelet", "labeler"];

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    /// Applies `key=value` overrides. Keys are dotted config paths such as
    /// `signals.weights.f0`; the leading section may be omitted when the rest
    /// of the path is unambiguous (`weights.f0`, `link_window_factor`).
    /// Values use TOML syntax; bare words are taken as strings.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut tree = toml::Value::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        for raw in overrides {
            let raw = raw.as_ref();
            let (key, value) = raw
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override \"{raw}\" is not key=value")))?;
            let value = parse_value(value.trim());
            let path = resolve_key(&tree, key.trim())?;
            set_path(&mut tree, &path, value)?;
        }
        let cfg: Self = tree.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.signals;
        if !(s.frame_period > 0.0 && s.frame_period <= 0.05) {
            return Err(Error::Config(format!("frame_period {} s", s.frame_period)));
        }
        if !(s.f0_min > 0.0 && s.f0_min < s.f0_max) {
            return Err(Error::Config(format!("f0 range [{}, {}]", s.f0_min, s.f0_max)));
        }
        if !(0.0..=1.0).contains(&s.voicing_threshold) {
            return Err(Error::Config(format!(
                "voicing_threshold {} outside [0, 1]",
                s.voicing_threshold
            )));
        }
        if let Some([lo, hi]) = s.energy_band {
            if !(lo >= 0.0 && lo < hi) {
                return Err(Error::Config(format!("energy_band [{lo}, {hi}]")));
            }
        }
        s.weights.validate()?;

        let w = &self.wavelet;
        let bank = w.bank()?;
        for (name, [lo, hi]) in [("word_band", w.word_band), ("phrase_band", w.phrase_band)] {
            if !(lo < hi) || bank.band(lo, hi).is_empty() {
                return Err(Error::Config(format!(
                    "{name} [{lo}, {hi}] selects no scales"
                )));
            }
        }
        if !(w.link_window_factor > 0.0) {
            return Err(Error::Config(format!(
                "link_window_factor {}",
                w.link_window_factor
            )));
        }
        self.labeler.thresholds.validate()
    }

    /// Hex SHA-256 prefix of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config always serializes");
        let digest = Sha256::digest(&canonical);
        hex::encode(&digest[..8])
    }
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn lookup<'a>(tree: &'a toml::Value, path: &[&str]) -> Option<&'a toml::Value> {
    path.iter().try_fold(tree, |node, key| node.get(key))
}

fn resolve_key(tree: &toml::Value, key: &str) -> Result<Vec<String>> {
    let parts: Vec<&str> = key.split('.').collect();
    if SECTIONS.contains(&parts[0]) {
        return Ok(parts.iter().map(|s| s.to_string()).collect());
    }
    let matches: Vec<&str> = SECTIONS
        .iter()
        .copied()
        .filter(|section| {
            let mut full = vec![*section];
            full.extend(&parts);
            lookup(tree, &full).is_some() || {
                // optional keys absent from the serialized tree
                full.len() == 2 && *section == "signals" && parts[0] == "energy_band"
            }
        })
        .collect();
    match matches.as_slice() {
        [section] => {
            let mut full = vec![section.to_string()];
            full.extend(parts.iter().map(|s| s.to_string()));
            Ok(full)
        }
        [] => Err(Error::Config(format!("unknown config key \"{key}\""))),
        _ => Err(Error::Config(format!("ambiguous config key \"{key}\""))),
    }
}

fn set_path(tree: &mut toml::Value, path: &[String], value: toml::Value) -> Result<()> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut node = tree;
    for key in parents {
        node = node
            .get_mut(key)
            .ok_or_else(|| Error::Config(format!("unknown config key \"{}\"", path.join("."))))?;
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| Error::Config(format!("\"{}\" is not a table", parents.join("."))))?;
    if !table.contains_key(last) && last != "energy_band" {
        return Err(Error::Config(format!("unknown config key \"{}\"", path.join("."))));
    }
    table.insert(last.clone(), value);
    Ok(())
}
