use std::collections::BTreeMap;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use prosody_core::augment::{
    annotations_from_labels, apply_overrides, augment_transcript, read_overrides, read_transcripts, OovPolicy,
};
use prosody_core::corpus::{batch_annotate, batch_evaluate, CorpusIndex};
use prosody_core::eval::label_report;
use prosody_core::eval::stats::significance_tests;
use prosody_core::fixtures::{generate, write_corpus, FixtureOptions};
use prosody_core::ingest::load_lexicon;
use prosody_core::labeler::{read_annotations, UtteranceAnnotation};
use prosody_core::Config;

use crate::{CliError, Outcome};

#[derive(Debug, Parser)]
#[command(name = "prosody", version, about = "Unsupervised prosodic labeling, augmentation and evaluation")]
pub struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

/// Configuration shared by every command that runs the pipeline.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one key, e.g. `--set labeler.thresholds.prominence=[0.3,0.6]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<Config, CliError> {
        let base = match &self.config {
            Some(p) => Config::load(p).map_err(CliError::usage)?,
            None => Config::default(),
        };
        let cfg = base.with_overrides(&self.set).map_err(CliError::usage)?;
        cfg.validate().map_err(CliError::usage)?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Oov {
    Graphemes,
    Error,
}

impl From<Oov> for OovPolicy {
    fn from(o: Oov) -> Self {
        match o {
            Oov::Graphemes => OovPolicy::Graphemes,
            Oov::Error => OovPolicy::Error,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label every utterance of a corpus; writes JSONL records.
    Annotate {
        /// Corpus directory or manifest file.
        corpus: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Batch summary as JSON (default: stderr).
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(short = 'j', long, default_value_t = 1)]
        parallelism: usize,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Build augmented phone strings from transcripts and labels.
    Augment {
        /// `id|text` or `id<TAB>text` lines.
        transcripts: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        /// JSONL from `annotate`.
        #[arg(long)]
        annotations: Option<PathBuf>,
        /// JSONL of `{"id": ..., "labels": [[p, b], ...]}` replacing classes.
        #[arg(long)]
        override_labels: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Oov::Graphemes)]
        oov: Oov,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare synthetic systems against reference recordings.
    Evaluate {
        #[arg(long)]
        reference: PathBuf,
        /// `name=path`; repeat per system.
        #[arg(long = "system", required = true, value_name = "NAME=PATH")]
        systems: Vec<String>,
        /// Oracle labels for a label-agreement section.
        #[arg(long, requires = "predicted_labels")]
        oracle_labels: Option<PathBuf>,
        #[arg(long, requires = "oracle_labels")]
        predicted_labels: Option<PathBuf>,
        /// Free-form note on where the systems' labels came from.
        #[arg(long)]
        label_source: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(short = 'j', long, default_value_t = 1)]
        parallelism: usize,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Agreement between predicted and oracle labels.
    CompareLabels {
        oracle: PathBuf,
        predicted: PathBuf,
        /// Re-derive predicted classes from their continuous values under
        /// the configured thresholds first.
        #[arg(long)]
        relabel: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// ANOVA and pairwise t-tests over groups of values.
    Stats {
        /// JSON object of group → values, or `group<TAB>value` lines.
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Serve the tuning API over HTTP.
    Serve {
        corpus: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Write a synthetic corpus with designed prosody.
    Fixtures {
        out_dir: PathBuf,
        #[arg(long, default_value_t = FixtureOptions::default().n_utterances)]
        n: usize,
        #[arg(long, default_value_t = FixtureOptions::default().seed)]
        seed: u64,
        /// Scales the designed prosodic contrasts.
        #[arg(long, default_value_t = 1.0)]
        prosody_scale: f64,
        /// Speaking-rate factor.
        #[arg(long, default_value_t = 1.0)]
        tempo: f64,
    },
    /// Print the effective configuration and its hash.
    Config {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(output: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

fn json_pretty<T: serde::Serialize>(v: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn load_index(path: &Path) -> Result<CorpusIndex, CliError> {
    CorpusIndex::load(path)
        .with_context(|| format!("loading corpus {}", path.display()))
        .map_err(CliError::failed)
}

fn load_annotations(path: &Path) -> anyhow::Result<Vec<UtteranceAnnotation>> {
    read_annotations(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Annotate {
            corpus,
            output,
            summary,
            parallelism,
            config,
        } => {
            let cfg = config.resolve()?;
            let index = load_index(&corpus)?;
            let batch = batch_annotate(&index, &cfg, parallelism)?;
            emit(output.as_deref(), &batch.to_jsonl())?;
            let s = json_pretty(&batch.summary)?;
            match summary {
                Some(p) => std::fs::write(&p, s).with_context(|| format!("writing {}", p.display()))?,
                None => eprint!("{s}"),
            }
            Ok(if batch.is_complete() { Outcome::Success } else { Outcome::Partial })
        }
        Command::Augment {
            transcripts,
            lexicon,
            annotations,
            override_labels,
            oov,
            output,
        } => augment(&transcripts, &lexicon, annotations.as_deref(), override_labels.as_deref(), oov.into(), output.as_deref()),
        Command::Evaluate {
            reference,
            systems,
            oracle_labels,
            predicted_labels,
            label_source,
            output,
            parallelism,
            config,
        } => {
            let cfg = config.resolve()?;
            let mut named = Vec::new();
            for s in &systems {
                let (name, path) = s
                    .split_once('=')
                    .ok_or_else(|| CliError::usage(anyhow!("--system expects NAME=PATH, got {s:?}")))?;
                if name.is_empty() || named.iter().any(|(n, _)| n == name) {
                    return Err(CliError::usage(anyhow!("system names must be unique and non-empty: {name:?}")));
                }
                named.push((name.to_string(), load_index(Path::new(path))?));
            }
            let ref_index = load_index(&reference)?;
            let mut report = batch_evaluate(&ref_index, &named, &cfg, parallelism)?;
            report.reference = reference.display().to_string();
            report.label_source = label_source;
            if let (Some(o), Some(p)) = (oracle_labels, predicted_labels) {
                report.labels = Some(label_report(&load_annotations(&o)?, &load_annotations(&p)?)?);
            }
            let expected: usize = named
                .iter()
                .map(|(_, idx)| idx.ids().filter(|id| ref_index.get(id).is_some()).count())
                .sum();
            emit(output.as_deref(), &json_pretty(&report)?)?;
            Ok(if report.per_utterance.len() == expected { Outcome::Success } else { Outcome::Partial })
        }
        Command::CompareLabels {
            oracle,
            predicted,
            relabel,
            output,
            config,
        } => {
            let oracle = load_annotations(&oracle)?;
            let mut predicted = load_annotations(&predicted)?;
            if relabel {
                let t = config.resolve()?.labeler.thresholds;
                for u in &mut predicted {
                    for w in &mut u.words {
                        *w = w.relabel(&t)?;
                    }
                }
            }
            let report = label_report(&oracle, &predicted)?;
            emit(output.as_deref(), &json_pretty(&report)?)?;
            Ok(Outcome::Success)
        }
        Command::Stats { input, output } => {
            let groups = parse_groups(&read(&input)?).map_err(CliError::usage)?;
            let sig = significance_tests(&groups)?;
            emit(output.as_deref(), &json_pretty(&sig)?)?;
            Ok(Outcome::Success)
        }
        Command::Serve { corpus, addr, config } => {
            let cfg = config.resolve()?;
            let index = load_index(&corpus)?;
            let state = crate::server::AppState::new(index, cfg);
            let rt = tokio::runtime::Runtime::new().map_err(CliError::failed)?;
            rt.block_on(crate::server::serve(state, addr)).map_err(CliError::failed)?;
            Ok(Outcome::Success)
        }
        Command::Fixtures {
            out_dir,
            n,
            seed,
            prosody_scale,
            tempo,
        } => {
            let opts = FixtureOptions {
                seed,
                n_utterances: n,
                prosody_scale,
                tempo,
            };
            let corpus = generate(&opts).map_err(CliError::usage)?;
            write_corpus(&out_dir, &corpus)?;
            eprintln!("wrote {} utterances to {}", corpus.len(), out_dir.display());
            Ok(Outcome::Success)
        }
        Command::Config { config } => {
            let cfg = config.resolve()?;
            emit(None, &format!("# hash {}\n{}", cfg.hash(), cfg.to_toml_string()))?;
            Ok(Outcome::Success)
        }
    }
}

fn augment(
    transcripts: &Path,
    lexicon: &Path,
    annotations: Option<&Path>,
    overrides: Option<&Path>,
    policy: OovPolicy,
    output: Option<&Path>,
) -> Result<Outcome, CliError> {
    if annotations.is_none() && overrides.is_none() {
        return Err(CliError::usage(anyhow!("augment needs --annotations, --override-labels or both")));
    }
    let transcripts = read_transcripts(&read(transcripts)?)?;
    let lexicon = load_lexicon(lexicon)?;
    let mut by_id: BTreeMap<String, UtteranceAnnotation> = match annotations {
        Some(p) => load_annotations(p)?.into_iter().map(|u| (u.id.clone(), u)).collect(),
        None => BTreeMap::new(),
    };
    let overrides = match overrides {
        Some(p) => read_overrides(&read(p)?)?,
        None => BTreeMap::new(),
    };

    let mut out = String::new();
    let mut failed = 0;
    for t in &transcripts {
        let id = t.utterance_id.as_str();
        let result = (|| -> anyhow::Result<String> {
            let words = match (by_id.remove(id), overrides.get(id)) {
                (Some(mut u), Some(labels)) => {
                    apply_overrides(&mut u.words, labels)?;
                    u.words
                }
                (Some(u), None) => u.words,
                (None, Some(labels)) => {
                    if labels.len() != t.words().count() {
                        return Err(prosody_core::Error::WordSequenceMismatch(labels.len().min(t.words().count())).into());
                    }
                    annotations_from_labels(t.words(), labels)
                }
                (None, None) => return Err(anyhow!("no labels")),
            };
            Ok(augment_transcript(t, &words, &lexicon, policy)?.to_string())
        })();
        match result {
            Ok(s) => {
                out.push_str(id);
                out.push('\t');
                out.push_str(&s);
                out.push('\n');
            }
            Err(e) => {
                failed += 1;
                eprintln!("{id}: {e:#}");
            }
        }
    }
    emit(output, &out)?;
    Ok(if failed == 0 { Outcome::Success } else { Outcome::Partial })
}

/// Lines keep first-seen group order; JSON groups come sorted by name.
pub fn parse_groups(text: &str) -> anyhow::Result<Vec<(String, Vec<f64>)>> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(trimmed)?;
        return map
            .into_iter()
            .map(|(k, v)| Ok((k, serde_json::from_value::<Vec<f64>>(v)?)))
            .collect();
    }
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (g, v) = line
            .split_once('\t')
            .ok_or_else(|| anyhow!("line {}: expected group<TAB>value", n + 1))?;
        let v: f64 = v.trim().parse().with_context(|| format!("line {}", n + 1))?;
        match groups.iter_mut().find(|(name, _)| name == g) {
            Some((_, vals)) => vals.push(v),
            None => groups.push((g.to_string(), vec![v])),
        }
    }
    Ok(groups)
}
