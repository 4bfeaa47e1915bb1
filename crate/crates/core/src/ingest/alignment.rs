use std::fmt::Write as _;
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical label for silence intervals.
pub const SILENCE: &str = "sil";

/// A labelled time interval in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub label: String,
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(label: impl Into<String>, start: f64, end: f64) -> Self {
        Self {
            label: normalize_label(&label.into()),
            start,
            end,
        }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }

    pub fn is_silence(&self) -> bool {
        self.label == SILENCE
    }
}

/// A word interval together with the range of phones it covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Word {
    pub label: String,
    pub start: f64,
    pub end: f64,
    pub phones: Range<usize>,
}

impl Word {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }

    pub fn is_silence(&self) -> bool {
        self.label == SILENCE
    }
}

/// Input formats understood by [`parse_alignment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignmentFormat {
    /// Praat TextGrid, long text form, interval tiers "words" and "phones".
    TextGrid,
    /// A `*.words.tsv` file with a sibling `*.phones.tsv`.
    Tsv,
}

impl AlignmentFormat {
    /// Guesses the format from a file name.
    pub fn from_path(path: &Path) -> Option<Self> {
        let name = path.file_name()?.to_str()?.to_ascii_lowercase();
        if name.ends_with(".textgrid") {
            Some(Self::TextGrid)
        } else if name.ends_with(".tsv") {
            Some(Self::Tsv)
        } else {
            None
        }
    }
}

/// Word and phone tiers of one utterance.
///
/// Both tiers are ordered and non-overlapping. Word-tier silences are kept
/// (labelled [`SILENCE`]) so that pause positions are available downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub utterance_id: String,
    pub words: Vec<Word>,
    pub phones: Vec<Interval>,
}

fn normalize_label(label: &str) -> String {
    let trimmed = label.trim();
    if trimmed.is_empty()
        || trimmed.eq_ignore_ascii_case("sil")
        || trimmed.eq_ignore_ascii_case("sp")
        || trimmed.eq_ignore_ascii_case("<sil>")
    {
        SILENCE.to_string()
    } else {
        trimmed.to_string()
    }
}

fn validate_tier(name: &str, tier: &[Interval]) -> Result<()> {
    for (index, iv) in tier.iter().enumerate() {
        if !(iv.start.is_finite() && iv.end.is_finite() && iv.start >= 0.0 && iv.start < iv.end) {
            return Err(Error::InvalidInterval {
                tier: name.to_string(),
                index,
                start: iv.start,
                end: iv.end,
            });
        }
        if index > 0 && iv.start < tier[index - 1].end {
            return Err(Error::OverlappingIntervals {
                tier: name.to_string(),
                index,
            });
        }
    }
    Ok(())
}

impl Alignment {
    /// Builds an alignment from raw tiers, linking each word to the phones
    /// whose midpoints fall inside it.
    pub fn from_tiers(
        utterance_id: impl Into<String>,
        words: Vec<Interval>,
        phones: Vec<Interval>,
    ) -> Result<Self> {
        validate_tier("words", &words)?;
        validate_tier("phones", &phones)?;

        let mut linked = Vec::with_capacity(words.len());
        let mut owner: Vec<Option<usize>> = vec![None; phones.len()];
        let mut cursor = 0;
        for (wi, w) in words.iter().enumerate() {
            while cursor < phones.len() && phones[cursor].midpoint() < w.start {
                cursor += 1;
            }
            let first = cursor;
            while cursor < phones.len() && phones[cursor].midpoint() < w.end {
                owner[cursor] = Some(wi);
                cursor += 1;
            }
            linked.push(Word {
                label: w.label.clone(),
                start: w.start,
                end: w.end,
                phones: first..cursor,
            });
        }

        for (index, phone) in phones.iter().enumerate() {
            if phone.is_silence() {
                continue;
            }
            let covered = owner[index].is_some_and(|wi| !words[wi].is_silence());
            if !covered {
                return Err(Error::UncoveredPhone {
                    index,
                    label: phone.label.clone(),
                });
            }
        }

        Ok(Self {
            utterance_id: utterance_id.into(),
            words: linked,
            phones,
        })
    }

    /// Words that are not silences, in order.
    pub fn spoken_words(&self) -> impl Iterator<Item = &Word> {
        self.words.iter().filter(|w| !w.is_silence())
    }

    /// Non-silence phones, in order.
    pub fn spoken_phones(&self) -> impl Iterator<Item = &Interval> {
        self.phones.iter().filter(|p| !p.is_silence())
    }

    /// Pauses: explicit word-tier silences plus gaps between consecutive
    /// word-tier intervals.
    pub fn pauses(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for (i, w) in self.words.iter().enumerate() {
            if i > 0 {
                let prev_end = self.words[i - 1].end;
                if w.start > prev_end + 1e-9 {
                    out.push((prev_end, w.start));
                }
            }
            if w.is_silence() {
                out.push((w.start, w.end));
            }
        }
        out
    }

    /// Start of the first interval in either tier.
    pub fn start(&self) -> f64 {
        let w = self.words.first().map_or(f64::INFINITY, |w| w.start);
        let p = self.phones.first().map_or(f64::INFINITY, |p| p.start);
        w.min(p)
    }

    /// End of the last interval in either tier.
    pub fn end(&self) -> f64 {
        let w = self.words.last().map_or(0.0, |w| w.end);
        let p = self.phones.last().map_or(0.0, |p| p.end);
        w.max(p)
    }

    /// Parses a long-form Praat TextGrid.
    pub fn from_textgrid_str(utterance_id: impl Into<String>, text: &str) -> Result<Self> {
        let tiers = parse_textgrid_tiers(text)?;
        let find = |wanted: &str| -> Result<Vec<Interval>> {
            tiers
                .iter()
                .find(|(name, _)| tier_name_matches(name, wanted))
                .map(|(_, ivs)| ivs.clone())
                .ok_or_else(|| Error::MissingTier(wanted.to_string()))
        };
        let words = find("words")?;
        let phones = find("phones")?;
        Self::from_tiers(utterance_id, words, phones)
    }

    /// Parses a pair of `start<TAB>end<TAB>label` files.
    pub fn from_tsv_str(utterance_id: impl Into<String>, words: &str, phones: &str) -> Result<Self> {
        let words = parse_tsv_tier(words)?;
        let phones = parse_tsv_tier(phones)?;
        Self::from_tiers(utterance_id, words, phones)
    }

    /// Renders both tiers as TSV (`%.4f` seconds). Silences are written as `sil`.
    pub fn to_tsv(&self) -> (String, String) {
        let mut words = String::new();
        for w in &self.words {
            let _ = writeln!(words, "{:.4}\t{:.4}\t{}", w.start, w.end, w.label);
        }
        let mut phones = String::new();
        for p in &self.phones {
            let _ = writeln!(phones, "{:.4}\t{:.4}\t{}", p.start, p.end, p.label);
        }
        (words, phones)
    }
}

fn tier_name_matches(name: &str, wanted: &str) -> bool {
    let name = name.trim();
    name.eq_ignore_ascii_case(wanted)
        || name
            .to_ascii_lowercase()
            .ends_with(&format!(" - {wanted}"))
}

fn parse_tsv_tier(text: &str) -> Result<Vec<Interval>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let mut num = |what: &str| -> Result<f64> {
            let field = fields.next().ok_or_else(|| Error::AlignmentSyntax {
                line: lineno + 1,
                msg: format!("missing {what}"),
            })?;
            field.trim().parse().map_err(|_| Error::AlignmentSyntax {
                line: lineno + 1,
                msg: format!("invalid {what} \"{field}\""),
            })
        };
        let start = num("start")?;
        let end = num("end")?;
        let label = fields.next().unwrap_or("");
        out.push(Interval::new(label, start, end));
    }
    Ok(out)
}

/// Splits `key = value` where value is a number or a Praat string.
fn key_value(line: &str) -> Option<(&str, &str)> {
    let (k, v) = line.split_once('=')?;
    Some((k.trim(), v.trim()))
}

fn praat_string(raw: &str, lineno: usize) -> Result<String> {
    let inner = raw
        .strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .ok_or_else(|| Error::AlignmentSyntax {
            line: lineno,
            msg: format!("expected quoted string, found {raw}"),
        })?;
    Ok(inner.replace("\"\"", "\""))
}

fn praat_number(raw: &str, lineno: usize) -> Result<f64> {
    raw.parse().map_err(|_| Error::AlignmentSyntax {
        line: lineno,
        msg: format!("invalid number \"{raw}\""),
    })
}

/// Returns every interval tier as (name, intervals). Point tiers are skipped.
fn parse_textgrid_tiers(text: &str) -> Result<Vec<(String, Vec<Interval>)>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    match lines.next() {
        Some((_, l)) if l.trim_start_matches('\u{feff}').contains("ooTextFile") => {}
        _ => {
            return Err(Error::AlignmentSyntax {
                line: 1,
                msg: "not a Praat TextGrid (missing ooTextFile header)".into(),
            })
        }
    }

    let mut tiers: Vec<(String, Vec<Interval>)> = Vec::new();
    let mut in_items = false;
    let mut tier_is_interval = false;
    let mut current: Option<(String, Vec<Interval>)> = None;
    let mut pending: (Option<f64>, Option<f64>) = (None, None);
    let mut in_interval = false;

    for (lineno, line) in lines {
        if line.starts_with("item []") {
            in_items = true;
            continue;
        }
        if !in_items {
            continue;
        }
        if line.starts_with("item [") {
            if let Some(t) = current.take() {
                tiers.push(t);
            }
            tier_is_interval = false;
            in_interval = false;
            continue;
        }
        if line.starts_with("intervals [") && line.ends_with(':') {
            in_interval = true;
            pending = (None, None);
            continue;
        }
        if line.starts_with("points [") {
            in_interval = false;
            continue;
        }
        let Some((key, value)) = key_value(line) else {
            continue;
        };
        match key {
            "class" => {
                tier_is_interval = praat_string(value, lineno)? == "IntervalTier";
            }
            "name" => {
                let name = praat_string(value, lineno)?;
                if tier_is_interval {
                    current = Some((name, Vec::new()));
                }
            }
            "xmin" if in_interval => pending.0 = Some(praat_number(value, lineno)?),
            "xmax" if in_interval => pending.1 = Some(praat_number(value, lineno)?),
            "text" if in_interval => {
                let label = praat_string(value, lineno)?;
                let (Some(start), Some(end)) = pending else {
                    return Err(Error::AlignmentSyntax {
                        line: lineno,
                        msg: "interval text before xmin/xmax".into(),
                    });
                };
                if let Some((_, ivs)) = current.as_mut() {
                    ivs.push(Interval::new(label, start, end));
                }
                in_interval = false;
            }
            _ => {}
        }
    }
    if let Some(t) = current.take() {
        tiers.push(t);
    }
    Ok(tiers)
}

/// Reads an alignment from disk.
///
/// For [`AlignmentFormat::Tsv`], `path` names the words file; the phones file
/// is its sibling with `.words.tsv` replaced by `.phones.tsv`.
pub fn parse_alignment(path: impl AsRef<Path>, format: AlignmentFormat) -> Result<Alignment> {
    let path = path.as_ref();
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
    let id = utterance_id_from_path(path);
    match format {
        AlignmentFormat::TextGrid => Alignment::from_textgrid_str(id, &read(path)?),
        AlignmentFormat::Tsv => {
            let phones_path = tsv_phones_path(path).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "{}: TSV word files must be named <id>.words.tsv",
                    path.display()
                ))
            })?;
            Alignment::from_tsv_str(id, &read(path)?, &read(&phones_path)?)
        }
    }
}

/// `<id>.phones.tsv` next to `<id>.words.tsv`.
pub fn tsv_phones_path(words: &Path) -> Option<PathBuf> {
    let name = words.file_name()?.to_str()?;
    let stem = name.strip_suffix(".words.tsv")?;
    Some(words.with_file_name(format!("{stem}.phones.tsv")))
}

fn utterance_id_from_path(path: &Path) -> String {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or_default();
    let lower = name.to_ascii_lowercase();
    for suffix in [".words.tsv", ".textgrid", ".tsv"] {
        if lower.ends_with(suffix) {
            return name[..name.len() - suffix.len()].to_string();
        }
    }
    name.to_string()
}
