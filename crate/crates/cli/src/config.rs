//! Build settings resolved from flags, the configuration file and defaults,
//! in that order of precedence.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use aas_core::answer::parse_source_list;
use aas_core::builder::{BuildConfig, DEFAULT_K, DEFAULT_KNN_N};
use aas_core::entailment::{ScoringOptions, DEFAULT_MAX_PREMISES, DEFAULT_THRESHOLD};
use aas_core::wordnet::WordnetConfig;
use aas_core::Source;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const BACKEND_URL_ENV: &str = "AAS_BACKEND_URL";
pub const DEFAULT_CACHE_DIR: &str = ".aas-cache";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Table,
    Lexical,
}

/// Keys accepted in the TOML configuration file. Relative paths are taken
/// relative to the file's directory.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dataset: Option<PathBuf>,
    pub k: Option<usize>,
    pub threshold: Option<f64>,
    pub knn_n: Option<usize>,
    pub sources: Option<String>,
    pub backend: Option<BackendKind>,
    pub backend_url: Option<String>,
    pub score_table: Option<PathBuf>,
    pub offline: Option<bool>,
    pub jobs: Option<usize>,
    pub max_premises: Option<usize>,
    pub hypernym_depth: Option<usize>,
    pub min_weight: Option<f64>,
    pub batch_size: Option<usize>,
    pub wordnet: Option<PathBuf>,
    pub bert_vectors: Option<PathBuf>,
    pub counterfit_vectors: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub conceptnet_url: Option<String>,
    pub conceptnet_budget: Option<u64>,
    pub requests_per_minute: Option<u32>,
}

impl FileConfig {
    pub fn parse(text: &str, base: &Path) -> CliResult<Self> {
        let mut config: FileConfig = toml::from_str(text)
            .map_err(|e| CliError::usage(format!("configuration file: {e}")))?;
        for path in [
            &mut config.dataset,
            &mut config.score_table,
            &mut config.wordnet,
            &mut config.bert_vectors,
            &mut config.counterfit_vectors,
            &mut config.cache_dir,
        ]
        .into_iter()
        .flatten()
        {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::usage(format!(
                "cannot read configuration file {}: {e}",
                path.display()
            ))
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new("")))
    }
}

/// Build flags; every one is optional so an absent flag defers to the file.
#[derive(Debug, Clone, Default, Args)]
pub struct BuildFlags {
    /// Members per set, the label included (2..=10).
    #[arg(long)]
    pub k: Option<usize>,
    /// Minimum mean entailment score of an alternative.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Neighbors taken from each vector table.
    #[arg(long)]
    pub knn_n: Option<usize>,
    /// Comma-separated subset of wordnet, conceptnet, bert-vec, counterfit-vec.
    #[arg(long)]
    pub sources: Option<String>,
    /// Entailment scorer; `lexical` runs without a service.
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    /// Entailment service base URL for the http backend.
    #[arg(long, env = BACKEND_URL_ENV)]
    pub backend_url: Option<String>,
    /// Precomputed score table for the table backend.
    #[arg(long)]
    pub score_table: Option<PathBuf>,
    /// Never contact ConceptNet; a cold cache is an error.
    #[arg(long)]
    pub offline: bool,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Premise sentences harvested per label.
    #[arg(long)]
    pub max_premises: Option<usize>,
    /// WordNet hypernym levels to follow.
    #[arg(long)]
    pub hypernym_depth: Option<usize>,
    /// Minimum ConceptNet edge weight.
    #[arg(long)]
    pub min_weight: Option<f64>,
    /// Premise/hypothesis pairs per backend call.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Directory holding the WordNet index.* and data.* files.
    #[arg(long)]
    pub wordnet: Option<PathBuf>,
    /// BERT embedding table (text vector format).
    #[arg(long)]
    pub bert_vectors: Option<PathBuf>,
    /// Counter-fitted vector table (text vector format).
    #[arg(long)]
    pub counterfit_vectors: Option<PathBuf>,
    /// ConceptNet response cache (default .aas-cache).
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// ConceptNet API base URL.
    #[arg(long)]
    pub conceptnet_url: Option<String>,
    /// Maximum ConceptNet requests for the run.
    #[arg(long)]
    pub conceptnet_budget: Option<u64>,
    /// ConceptNet request rate limit.
    #[arg(long)]
    pub requests_per_minute: Option<u32>,
}

/// Fully resolved build settings, echoed into the run manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildSettings {
    pub k: usize,
    pub threshold: f64,
    pub knn_n: usize,
    pub sources: BTreeSet<Source>,
    pub backend: BackendKind,
    pub backend_url: Option<String>,
    pub score_table: Option<PathBuf>,
    pub offline: bool,
    pub jobs: usize,
    pub max_premises: usize,
    pub hypernym_depth: usize,
    pub min_weight: f64,
    pub batch_size: usize,
    pub wordnet: Option<PathBuf>,
    pub bert_vectors: Option<PathBuf>,
    pub counterfit_vectors: Option<PathBuf>,
    pub cache_dir: PathBuf,
    pub conceptnet_url: Option<String>,
    pub conceptnet_budget: Option<u64>,
    pub requests_per_minute: u32,
}

pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl BuildSettings {
    pub fn resolve(flags: &BuildFlags, file: &FileConfig) -> CliResult<Self> {
        fn pick<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
            flag.clone().or_else(|| file.clone())
        }
        let sources = match pick(&flags.sources, &file.sources) {
            Some(list) => parse_source_list(&list).map_err(CliError::from)?,
            None => Source::CANDIDATE_SOURCES.into_iter().collect(),
        };
        let settings = Self {
            k: pick(&flags.k, &file.k).unwrap_or(DEFAULT_K),
            threshold: pick(&flags.threshold, &file.threshold).unwrap_or(DEFAULT_THRESHOLD),
            knn_n: pick(&flags.knn_n, &file.knn_n).unwrap_or(DEFAULT_KNN_N),
            sources,
            backend: pick(&flags.backend, &file.backend).unwrap_or(BackendKind::Http),
            backend_url: pick(&flags.backend_url, &file.backend_url),
            score_table: pick(&flags.score_table, &file.score_table),
            offline: flags.offline || file.offline.unwrap_or(false),
            jobs: pick(&flags.jobs, &file.jobs).unwrap_or_else(default_jobs),
            max_premises: pick(&flags.max_premises, &file.max_premises)
                .unwrap_or(DEFAULT_MAX_PREMISES),
            hypernym_depth: pick(&flags.hypernym_depth, &file.hypernym_depth)
                .unwrap_or(WordnetConfig::default().hypernym_depth),
            min_weight: pick(&flags.min_weight, &file.min_weight).unwrap_or(1.0),
            batch_size: pick(&flags.batch_size, &file.batch_size)
                .unwrap_or(ScoringOptions::default().batch_size),
            wordnet: pick(&flags.wordnet, &file.wordnet),
            bert_vectors: pick(&flags.bert_vectors, &file.bert_vectors),
            counterfit_vectors: pick(&flags.counterfit_vectors, &file.counterfit_vectors),
            cache_dir: pick(&flags.cache_dir, &file.cache_dir)
                .unwrap_or_else(|| DEFAULT_CACHE_DIR.into()),
            conceptnet_url: pick(&flags.conceptnet_url, &file.conceptnet_url),
            conceptnet_budget: pick(&flags.conceptnet_budget, &file.conceptnet_budget),
            requests_per_minute: pick(&flags.requests_per_minute, &file.requests_per_minute)
                .unwrap_or(60),
        };
        if settings.jobs == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        if settings.batch_size == 0 {
            return Err(CliError::usage("--batch-size must be at least 1"));
        }
        settings.build_config().validate().map_err(CliError::from)?;
        Ok(settings)
    }

    pub fn build_config(&self) -> BuildConfig {
        BuildConfig {
            k: self.k,
            threshold: self.threshold,
            knn_n: self.knn_n,
            sources: self.sources.clone(),
            max_premises: self.max_premises,
            wordnet: WordnetConfig {
                hypernym_depth: self.hypernym_depth,
                ..WordnetConfig::default()
            },
            conceptnet_min_weight: self.min_weight,
            scoring: ScoringOptions {
                batch_size: self.batch_size,
                ..ScoringOptions::default()
            },
            jobs: self.jobs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(text: &str) -> FileConfig {
        FileConfig::parse(text, Path::new("/exp")).unwrap()
    }

    #[test]
    fn precedence_table() {
        struct Case {
            name: &'static str,
            flags: BuildFlags,
            file: &'static str,
            check: fn(&BuildSettings) -> bool,
        }
        let cases = [
            Case {
                name: "defaults",
                flags: BuildFlags::default(),
                file: "",
                check: |s| {
                    s.k == 6
                        && s.threshold == 0.5
                        && s.knn_n == 10
                        && s.sources.len() == 4
                        && !s.offline
                },
            },
            Case {
                name: "file over default",
                flags: BuildFlags::default(),
                file: "k = 4\nthreshold = 0.7",
                check: |s| s.k == 4 && s.threshold == 0.7,
            },
            Case {
                name: "flag over file",
                flags: BuildFlags {
                    k: Some(8),
                    ..Default::default()
                },
                file: "k = 4",
                check: |s| s.k == 8,
            },
            Case {
                name: "flag over default",
                flags: BuildFlags {
                    knn_n: Some(3),
                    ..Default::default()
                },
                file: "",
                check: |s| s.knn_n == 3,
            },
            Case {
                name: "file sources",
                flags: BuildFlags::default(),
                file: "sources = \"wordnet\"",
                check: |s| s.sources == BTreeSet::from([Source::WordNet]),
            },
            Case {
                name: "flag sources",
                flags: BuildFlags {
                    sources: Some("bert-vec,conceptnet".into()),
                    ..Default::default()
                },
                file: "sources = \"wordnet\"",
                check: |s| s.sources == BTreeSet::from([Source::BertVec, Source::ConceptNet]),
            },
            Case {
                name: "offline from file",
                flags: BuildFlags::default(),
                file: "offline = true",
                check: |s| s.offline,
            },
            Case {
                name: "offline flag",
                flags: BuildFlags {
                    offline: true,
                    ..Default::default()
                },
                file: "offline = false",
                check: |s| s.offline,
            },
            Case {
                name: "backend",
                flags: BuildFlags {
                    backend: Some(BackendKind::Table),
                    ..Default::default()
                },
                file: "backend = \"lexical\"",
                check: |s| s.backend == BackendKind::Table,
            },
            Case {
                name: "backend from file",
                flags: BuildFlags::default(),
                file: "backend = \"lexical\"",
                check: |s| s.backend == BackendKind::Lexical,
            },
            Case {
                name: "backend url",
                flags: BuildFlags {
                    backend_url: Some("http://a".into()),
                    ..Default::default()
                },
                file: "backend_url = \"http://b\"",
                check: |s| s.backend_url.as_deref() == Some("http://a"),
            },
            Case {
                name: "relative paths",
                flags: BuildFlags::default(),
                file: "wordnet = \"wn\"\ncache_dir = \"/abs\"",
                check: |s| s.wordnet == Some("/exp/wn".into()) && s.cache_dir == Path::new("/abs"),
            },
            Case {
                name: "jobs",
                flags: BuildFlags {
                    jobs: Some(8),
                    ..Default::default()
                },
                file: "jobs = 2",
                check: |s| s.jobs == 8,
            },
        ];
        for case in cases {
            let settings = BuildSettings::resolve(&case.flags, &file(case.file)).unwrap();
            assert!((case.check)(&settings), "{}: {settings:?}", case.name);
        }
    }

    #[test]
    fn invalid_settings_are_usage_errors() {
        for text in [
            "k = 11",
            "k = 1",
            "threshold = 1.5",
            "jobs = 0",
            "sources = \"wordnet,wikipedia\"",
            "colour = 1",
        ] {
            let err = FileConfig::parse(text, Path::new(""))
                .and_then(|f| BuildSettings::resolve(&BuildFlags::default(), &f))
                .unwrap_err();
            assert_eq!(err.code, crate::error::EXIT_USAGE, "{text}: {err}");
        }
    }
}
