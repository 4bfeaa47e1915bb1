//! Corpus indexing and batch jobs over utterances.
//!
//! A corpus directory looks like
//!
//! ```text
//! wavs/<id>.wav
//! align/<id>.TextGrid            or  align/<id>.words.tsv + align/<id>.phones.tsv
//! metadata.csv                   optional, `id|text` lines
//! ```
//!
//! Alternatively a manifest lists `id<TAB>audio<TAB>alignment[<TAB>text]`
//! per line, paths relative to the manifest.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::eval::{compare_tracks, eval_tracks, EvalReport, EvalTracks, MissingIds};
use crate::ingest::{parse_alignment, read_audio, tsv_phones_path, Alignment, AlignmentFormat, AudioBuffer};
use crate::labeler::{annotate_utterance, UtteranceAnnotation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    pub audio: PathBuf,
    pub alignment: PathBuf,
    pub format: AlignmentFormat,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transcript: Option<String>,
}

impl CorpusEntry {
    pub fn load_audio(&self) -> Result<AudioBuffer> {
        read_audio(&self.audio)
    }

    /// The alignment, re-labeled with this entry's id.
    pub fn load_alignment(&self) -> Result<Alignment> {
        let mut a = parse_alignment(&self.alignment, self.format)?;
        a.utterance_id = self.id.clone();
        Ok(a)
    }
}

/// Utterances in a fixed order with unique ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusIndex {
    entries: Vec<CorpusEntry>,
}

fn read_metadata(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .filter_map(|l| {
            let l = l.trim_end_matches('\r');
            let (id, rest) = l.split_once('|').or_else(|| l.split_once('\t'))?;
            Some((id.trim().to_string(), rest.to_string()))
        })
        .collect())
}

impl CorpusIndex {
    /// Checks id uniqueness and that every referenced file exists.
    pub fn new(entries: Vec<CorpusEntry>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::Corpus(format!("duplicate utterance id {}", e.id)));
            }
            for p in [&e.audio, &e.alignment] {
                if !p.is_file() {
                    return Err(Error::Corpus(format!("{}: missing file {}", e.id, p.display())));
                }
            }
            if e.format == AlignmentFormat::Tsv {
                match tsv_phones_path(&e.alignment) {
                    Some(phones) if phones.is_file() => {}
                    Some(phones) => {
                        return Err(Error::Corpus(format!("{}: missing file {}", e.id, phones.display())))
                    }
                    None => {
                        return Err(Error::Corpus(format!(
                            "{}: TSV alignments must be named <id>.words.tsv",
                            e.id
                        )))
                    }
                }
            }
        }
        Ok(Self { entries })
    }

    /// Builds an index from the `wavs/` + `align/` directory convention,
    /// ordered by id.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let wavs = dir.join("wavs");
        let align = dir.join("align");
        let listing = std::fs::read_dir(&wavs).map_err(|e| Error::io(&wavs, e))?;
        let mut ids: Vec<String> = listing
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
            .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
            .collect();
        ids.sort();

        let mut metadata = HashMap::new();
        for name in ["metadata.csv", "metadata.tsv", "metadata.txt"] {
            let p = dir.join(name);
            if p.is_file() {
                metadata = read_metadata(&p)?;
                break;
            }
        }

        let entries = ids
            .into_iter()
            .map(|id| {
                let candidates = [
                    (align.join(format!("{id}.TextGrid")), AlignmentFormat::TextGrid),
                    (align.join(format!("{id}.textgrid")), AlignmentFormat::TextGrid),
                    (align.join(format!("{id}.words.tsv")), AlignmentFormat::Tsv),
                ];
                let (alignment, format) = candidates
                    .into_iter()
                    .find(|(p, _)| p.is_file())
                    .ok_or_else(|| Error::Corpus(format!("{id}: no alignment under {}", align.display())))?;
                Ok(CorpusEntry {
                    audio: wavs.join(format!("{id}.wav")),
                    alignment,
                    format,
                    transcript: metadata.get(&id).cloned(),
                    id,
                })
            })
            .collect::<Result<_>>()?;
        Self::new(entries)
    }

    /// Reads `id<TAB>audio<TAB>alignment[<TAB>text]` lines; `#` starts a comment.
    pub fn from_manifest(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let base = path.parent().unwrap_or(Path::new("."));
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let entries = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .map(|(i, l)| {
                let f: Vec<&str> = l.trim_end_matches('\r').split('\t').collect();
                if f.len() < 3 {
                    return Err(Error::Corpus(format!(
                        "{} line {}: expected id, audio and alignment columns",
                        path.display(),
                        i + 1
                    )));
                }
                let alignment = base.join(f[2]);
                let format = AlignmentFormat::from_path(&alignment).ok_or_else(|| {
                    Error::Corpus(format!("{}: unknown alignment format", alignment.display()))
                })?;
                Ok(CorpusEntry {
                    id: f[0].trim().to_string(),
                    audio: base.join(f[1]),
                    alignment,
                    format,
                    transcript: f.get(3).map(|s| s.to_string()),
                })
            })
            .collect::<Result<_>>()?;
        Self::new(entries)
    }

    /// A directory is read by convention, a file as a manifest.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if path.is_dir() {
            Self::from_dir(path)
        } else {
            Self::from_manifest(path)
        }
    }

    pub fn entries(&self) -> &[CorpusEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&CorpusEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.id.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub config_hash: String,
    pub n_utterances: usize,
    pub n_annotated: usize,
    pub n_words: usize,
    /// Word counts per prominence class 0, 1, 2.
    pub prominence_counts: [usize; 3],
    pub boundary_counts: [usize; 3],
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchAnnotation {
    pub records: Vec<UtteranceAnnotation>,
    pub summary: BatchSummary,
}

impl BatchAnnotation {
    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| r.to_json_line() + "\n")
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.summary.failures.is_empty()
    }
}

fn pool(parallelism: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))
}

/// Annotates every utterance with `parallelism` workers. Records come back
/// in index order whatever the schedule; failed utterances are listed in
/// the summary instead.
pub fn batch_annotate(index: &CorpusIndex, config: &Config, parallelism: usize) -> Result<BatchAnnotation> {
    if index.is_empty() {
        return Err(Error::NoUtterances);
    }
    config.validate()?;
    let hash = config.hash();
    let results: Vec<Result<UtteranceAnnotation>> = pool(parallelism)?.install(|| {
        index
            .entries()
            .par_iter()
            .map(|e| {
                let audio = e.load_audio()?;
                let alignment = e.load_alignment()?;
                Ok(UtteranceAnnotation {
                    id: e.id.clone(),
                    words: annotate_utterance(&audio, &alignment, config)?,
                    config_hash: hash.clone(),
                })
            })
            .collect()
    });

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (entry, r) in index.entries().iter().zip(results) {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => {
                log::warn!("{}: {e}", entry.id);
                failures.push(Failure {
                    id: entry.id.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    let mut prominence_counts = [0; 3];
    let mut boundary_counts = [0; 3];
    for w in records.iter().flat_map(|r| &r.words) {
        prominence_counts[usize::from(w.p_class)] += 1;
        boundary_counts[usize::from(w.b_class)] += 1;
    }
    let summary = BatchSummary {
        config_hash: hash,
        n_utterances: index.len(),
        n_annotated: records.len(),
        n_words: records.iter().map(|r| r.words.len()).sum(),
        prominence_counts,
        boundary_counts,
        failures,
    };
    Ok(BatchAnnotation { records, summary })
}

fn load_tracks(entry: &CorpusEntry, config: &Config) -> Result<(EvalTracks, Alignment)> {
    let audio = entry.load_audio()?;
    Ok((eval_tracks(&audio, &config.signals)?, entry.load_alignment()?))
}

/// Evaluates each named system against `reference` over their common ids.
/// Every system must share at least one id with the reference. Utterances
/// that fail to load are logged and left out of the report's rows.
pub fn batch_evaluate(
    reference: &CorpusIndex,
    systems: &[(String, CorpusIndex)],
    config: &Config,
    parallelism: usize,
) -> Result<EvalReport> {
    if reference.is_empty() || systems.is_empty() {
        return Err(Error::NoUtterances);
    }
    let ref_ids: BTreeSet<&str> = reference.ids().collect();
    let mut missing = BTreeMap::new();
    let mut jobs = Vec::new();
    for (name, index) in systems {
        let sys_ids: BTreeSet<&str> = index.ids().collect();
        let common: Vec<&CorpusEntry> = reference
            .entries()
            .iter()
            .filter(|e| sys_ids.contains(e.id.as_str()))
            .collect();
        if common.is_empty() {
            return Err(Error::NoCommonUtterances);
        }
        missing.insert(
            name.clone(),
            MissingIds {
                only_in_reference: ref_ids.difference(&sys_ids).map(|s| s.to_string()).collect(),
                only_in_system: sys_ids.difference(&ref_ids).map(|s| s.to_string()).collect(),
            },
        );
        for r in common {
            jobs.push((name.as_str(), r, index.get(&r.id).expect("id is common")));
        }
    }

    let needed: BTreeSet<&str> = jobs.iter().map(|(_, r, _)| r.id.as_str()).collect();
    let pool = pool(parallelism)?;
    let ref_tracks: BTreeMap<&str, Result<(EvalTracks, Alignment)>> = pool.install(|| {
        reference
            .entries()
            .par_iter()
            .filter(|e| needed.contains(e.id.as_str()))
            .map(|e| (e.id.as_str(), load_tracks(e, config)))
            .collect::<Vec<_>>()
            .into_iter()
            .collect()
    });

    let rows: Vec<Result<_>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(name, r, s)| {
                let (rt, ra) = ref_tracks[r.id.as_str()]
                    .as_ref()
                    .map_err(|e| Error::Corpus(format!("reference: {e}")))?;
                let (st, sa) = load_tracks(s, config)?;
                compare_tracks(&r.id, name, (rt, ra), (&st, &sa))
            })
            .collect()
    });
    let mut per_utterance = Vec::new();
    for ((name, r, _), row) in jobs.iter().zip(rows) {
        match row {
            Ok(m) => per_utterance.push(m),
            Err(e) => log::warn!("{name}/{}: {e}", r.id),
        }
    }
    if per_utterance.is_empty() {
        return Err(Error::Corpus("no utterance pair could be evaluated".into()));
    }
    Ok(EvalReport::build(
        config.hash(),
        "reference".to_string(),
        systems.iter().map(|(n, _)| n.clone()).collect(),
        per_utterance,
        missing,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{generate, write_corpus, FixtureOptions};

    fn corpus(n: usize) -> (tempfile::TempDir, CorpusIndex) {
        let dir = tempfile::tempdir().unwrap();
        let c = generate(&FixtureOptions { n_utterances: n, ..FixtureOptions::default() }).unwrap();
        write_corpus(dir.path(), &c).unwrap();
        let idx = CorpusIndex::from_dir(dir.path()).unwrap();
        (dir, idx)
    }

    #[test]
    fn directory_index() {
        let (_d, idx) = corpus(3);
        assert_eq!(idx.ids().collect::<Vec<_>>(), ["fx000", "fx001", "fx002"]);
        assert!(idx.entries()[0].transcript.as_deref().unwrap().ends_with('.'));
        assert_eq!(idx.entries()[0].format, AlignmentFormat::Tsv);
    }

    #[test]
    fn manifest_index() {
        let (d, _) = corpus(2);
        let m = d.path().join("manifest.tsv");
        std::fs::write(
            &m,
            "# id audio alignment\nb\twavs/fx001.wav\talign/fx001.words.tsv\na\twavs/fx000.wav\talign/fx000.words.tsv\tHello.\n",
        )
        .unwrap();
        let idx = CorpusIndex::load(&m).unwrap();
        assert_eq!(idx.ids().collect::<Vec<_>>(), ["b", "a"]);
        assert_eq!(idx.entries()[1].transcript.as_deref(), Some("Hello."));
        std::fs::write(&m, "x\twavs/none.wav\talign/fx001.words.tsv\n").unwrap();
        assert!(CorpusIndex::load(&m).is_err());
        std::fs::write(&m, "x\twavs/fx000.wav\talign/fx000.words.tsv\nx\twavs/fx001.wav\talign/fx001.words.tsv\n").unwrap();
        assert!(CorpusIndex::load(&m).unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn empty_index() {
        let idx = CorpusIndex::new(vec![]).unwrap();
        let e = batch_annotate(&idx, &Config::default(), 2).unwrap_err();
        assert_eq!(e.to_string(), "no utterances");
    }

    #[test]
    fn partial_failure_keeps_order() {
        let (d, idx) = corpus(4);
        std::fs::write(d.path().join("wavs/fx002.wav"), b"not a wav").unwrap();
        let out = batch_annotate(&idx, &Config::default(), 3).unwrap();
        assert_eq!(out.records.len(), 3);
        assert_eq!(out.summary.failures.len(), 1);
        assert_eq!(out.summary.failures[0].id, "fx002");
        let ids: Vec<_> = out.records.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["fx000", "fx001", "fx003"]);
        assert!(!out.is_complete());
        let counted: usize = out.summary.prominence_counts.iter().sum();
        assert_eq!(counted, out.summary.n_words);
    }

    #[test]
    fn disjoint_systems() {
        let (_d, idx) = corpus(2);
        let other = CorpusIndex::new(vec![CorpusEntry { id: "zz".into(), ..idx.entries()[0].clone() }]).unwrap();
        let e = batch_evaluate(&idx, &[("s".into(), other)], &Config::default(), 1).unwrap_err();
        assert_eq!(e.to_string(), "no common utterances");
    }

    #[test]
    fn missing_ids_are_listed() {
        let (_d, idx) = corpus(3);
        let sub = CorpusIndex::new(idx.entries()[..2].to_vec()).unwrap();
        let r = batch_evaluate(&idx, &[("s".into(), sub)], &Config::default(), 2).unwrap();
        assert_eq!(r.missing["s"].only_in_reference, ["fx002"]);
        assert_eq!(r.per_utterance.len(), 2);
        assert!(r.significance.is_empty());
    }
}
