//! End-to-end answer-set construction.
//!
//! For each label: gather candidates from every enabled source, score the
//! deduplicated union once against the label's premises, then derive the
//! union answer set and each per-source answer set from those same scores.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tracing::{info, warn};

use crate::answer::{AnswerSet, Label, ScoredCandidate, Source};
use crate::artifact::{
    ArtifactMetadata, ConceptNetProvenance, PremiseProvenance, VectorProvenance, WordnetProvenance,
};
use crate::conceptnet::{conceptnet_candidates, ConceptNetClient};
use crate::entailment::{
    semantic_scores, PremiseCorpus, ScoringBackend, ScoringOptions, DEFAULT_MAX_PREMISES,
    DEFAULT_THRESHOLD, FALLBACK_TEMPLATE,
};
use crate::error::{Error, Result};
use crate::vectors::VectorTable;
use crate::wordnet::{WordnetConfig, WordnetIndex};

pub const DEFAULT_K: usize = 6;
pub const DEFAULT_KNN_N: usize = 10;
pub const MIN_K: usize = 2;
pub const MAX_K: usize = 10;

#[derive(Debug, Clone)]
pub struct BuildConfig {
    /// Members kept per set, the label included.
    pub k: usize,
    pub threshold: f64,
    pub knn_n: usize,
    pub sources: BTreeSet<Source>,
    pub max_premises: usize,
    pub wordnet: WordnetConfig,
    pub conceptnet_min_weight: f64,
    pub scoring: ScoringOptions,
    pub jobs: usize,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            threshold: DEFAULT_THRESHOLD,
            knn_n: DEFAULT_KNN_N,
            sources: Source::CANDIDATE_SOURCES.into_iter().collect(),
            max_premises: DEFAULT_MAX_PREMISES,
            wordnet: WordnetConfig::default(),
            conceptnet_min_weight: 1.0,
            scoring: ScoringOptions::default(),
            jobs: 1,
        }
    }
}

impl BuildConfig {
    pub fn validate(&self) -> Result<()> {
        if !(MIN_K..=MAX_K).contains(&self.k) {
            return Err(Error::Config(format!(
                "k must be in {MIN_K}..={MAX_K}, got {}",
                self.k
            )));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!(
                "threshold must be in [0, 1], got {}",
                self.threshold
            )));
        }
        if self.knn_n == 0 {
            return Err(Error::Config("knn_n must be positive".into()));
        }
        if self.max_premises == 0 {
            return Err(Error::Config("max_premises must be positive".into()));
        }
        if self.sources.is_empty() || self.sources.contains(&Source::GroundTruth) {
            return Err(Error::Config(
                "sources must be a non-empty set of candidate sources".into(),
            ));
        }
        Ok(())
    }
}

/// Loaded candidate generators. A source enabled in the config must be
/// present here.
#[derive(Default)]
pub struct CandidateSources {
    pub wordnet: Option<WordnetIndex>,
    pub conceptnet: Option<ConceptNetClient>,
    pub bert: Option<VectorTable>,
    pub counterfit: Option<VectorTable>,
    /// Provenance strings of the vector tables, recorded in metadata.
    pub vector_provenance: BTreeMap<Source, String>,
}

impl CandidateSources {
    fn check(&self, enabled: &BTreeSet<Source>) -> Result<()> {
        for source in enabled {
            let loaded = match source {
                Source::WordNet => self.wordnet.is_some(),
                Source::ConceptNet => self.conceptnet.is_some(),
                Source::BertVec => self.bert.is_some(),
                Source::CounterfitVec => self.counterfit.is_some(),
                Source::GroundTruth => true,
            };
            if !loaded {
                return Err(Error::MissingResource(format!(
                    "source {source} is enabled but not loaded"
                )));
            }
        }
        Ok(())
    }

    fn propose(&self, source: Source, label: &Label, config: &BuildConfig) -> Result<Vec<String>> {
        let missing =
            || Error::MissingResource(format!("source {source} is enabled but not loaded"));
        Ok(match source {
            Source::WordNet => self
                .wordnet
                .as_ref()
                .ok_or_else(missing)?
                .candidates(label, &config.wordnet),
            Source::ConceptNet => {
                let edges = self
                    .conceptnet
                    .as_ref()
                    .ok_or_else(missing)?
                    .fetch_edges(label)?;
                conceptnet_candidates(&edges, config.conceptnet_min_weight)
            }
            Source::BertVec => self
                .bert
                .as_ref()
                .ok_or_else(missing)?
                .knn_candidates(label, config.knn_n),
            Source::CounterfitVec => self
                .counterfit
                .as_ref()
                .ok_or_else(missing)?
                .knn_candidates(label, config.knn_n),
            Source::GroundTruth => Vec::new(),
        })
    }
}

/// Candidates of one label, per source and merged.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateUnion {
    pub label: Label,
    pub per_source: BTreeMap<Source, Vec<String>>,
    /// Deduplicated merge in first-seen order (sources in canonical order),
    /// the label excluded, with every contributing source.
    pub union: Vec<(String, BTreeSet<Source>)>,
}

pub fn build_candidates(
    label: &Label,
    sources: &CandidateSources,
    config: &BuildConfig,
) -> Result<CandidateUnion> {
    let mut per_source = BTreeMap::new();
    let mut union: Vec<(String, BTreeSet<Source>)> = Vec::new();
    let mut position: HashMap<String, usize> = HashMap::new();
    for source in Source::CANDIDATE_SOURCES {
        if !config.sources.contains(&source) {
            continue;
        }
        let phrases = sources.propose(source, label, config)?;
        for phrase in &phrases {
            if phrase == label.normalized() {
                continue;
            }
            match position.get(phrase) {
                Some(&i) => {
                    union[i].1.insert(source);
                }
                None => {
                    position.insert(phrase.clone(), union.len());
                    union.push((phrase.clone(), BTreeSet::from([source])));
                }
            }
        }
        per_source.insert(source, phrases);
    }
    Ok(CandidateUnion {
        label: label.clone(),
        per_source,
        union,
    })
}

/// A union candidate with its semantic score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnionScore {
    pub phrase: String,
    pub sources: BTreeSet<Source>,
    pub mean_score: f64,
    pub n_premises: usize,
}

/// Every union candidate of one label, scored. Independent of `k` and the
/// threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelScores {
    pub label: Label,
    pub fallback_premise: bool,
    pub scored: Vec<UnionScore>,
}

pub fn score_union(
    union: &CandidateUnion,
    corpus: &PremiseCorpus,
    backend: &dyn ScoringBackend,
    config: &BuildConfig,
) -> Result<LabelScores> {
    let premises = corpus.harvest(&union.label, config.max_premises);
    let phrases: Vec<String> = union.union.iter().map(|(p, _)| p.clone()).collect();
    let scores = if phrases.is_empty() {
        Vec::new()
    } else {
        semantic_scores(backend, &premises, &phrases, &config.scoring)?
    };
    let scored = union
        .union
        .iter()
        .zip(scores)
        .map(|((phrase, sources), s)| UnionScore {
            phrase: phrase.clone(),
            sources: sources.clone(),
            mean_score: s.mean_score,
            n_premises: s.n_premises,
        })
        .collect();
    Ok(LabelScores {
        label: union.label.clone(),
        fallback_premise: premises.fallback,
        scored,
    })
}

impl LabelScores {
    /// Thresholds, ranks and truncates the scored union. With `restrict`,
    /// only candidates proposed by that source are eligible.
    pub fn select(&self, restrict: Option<Source>, k: usize, threshold: f64) -> Result<AnswerSet> {
        let alternatives = self
            .scored
            .iter()
            .filter(|s| restrict.is_none_or(|r| s.sources.contains(&r)))
            .filter(|s| s.mean_score >= threshold)
            .map(|s| ScoredCandidate::new(s.phrase.clone(), s.mean_score, s.sources.clone()));
        AnswerSet::from_alternatives(self.label.clone(), alternatives, k, threshold)
    }
}

/// Builds one label's union answer set.
pub fn build_aas(
    label: &Label,
    sources: &CandidateSources,
    corpus: &PremiseCorpus,
    backend: &dyn ScoringBackend,
    config: &BuildConfig,
) -> Result<AnswerSet> {
    config.validate()?;
    let union = build_candidates(label, sources, config)?;
    score_union(&union, corpus, backend, config)?.select(None, config.k, config.threshold)
}

/// All labels of a vocabulary, scored.
#[derive(Debug, Clone)]
pub struct VocabularyBuild {
    pub labels: Vec<LabelScores>,
}

impl VocabularyBuild {
    pub fn answer_sets(
        &self,
        restrict: Option<Source>,
        k: usize,
        threshold: f64,
    ) -> Result<Vec<AnswerSet>> {
        self.labels
            .iter()
            .map(|l| l.select(restrict, k, threshold))
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    checkpoint: String,
}

#[derive(Serialize, Deserialize)]
struct CheckpointRecord {
    label: String,
    label_raw: String,
    fallback_premise: bool,
    scored: Vec<UnionScore>,
}

/// Per-label progress file. A label appears once it is fully scored; the
/// header fingerprints every setting that affects scores.
struct Checkpoint {
    path: PathBuf,
    file: Mutex<fs::File>,
}

impl Checkpoint {
    fn open(path: &Path, fingerprint: &str) -> Result<(Self, HashMap<String, LabelScores>)> {
        let mut done = HashMap::new();
        let mut valid = false;
        if path.is_file() {
            let reader = BufReader::new(fs::File::open(path).map_err(|e| Error::io(path, e))?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if i == 0 {
                    valid = serde_json::from_str::<CheckpointHeader>(&line)
                        .is_ok_and(|h| h.checkpoint == fingerprint);
                    if !valid {
                        warn!(path = %path.display(), "checkpoint was written with different settings; starting over");
                        break;
                    }
                    continue;
                }
                // A torn final line from an interrupted run is dropped.
                let Ok(record) = serde_json::from_str::<CheckpointRecord>(&line) else {
                    warn!(path = %path.display(), line = i + 1, "ignoring unreadable checkpoint line");
                    continue;
                };
                let label = Label::new(record.label_raw)?;
                done.insert(
                    record.label,
                    LabelScores {
                        label,
                        fallback_premise: record.fallback_premise,
                        scored: record.scored,
                    },
                );
            }
        }
        let mut file = if valid {
            OpenOptions::new()
                .append(true)
                .open(path)
                .map_err(|e| Error::io(path, e))?
        } else {
            done.clear();
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
            let header = serde_json::to_string(&CheckpointHeader {
                checkpoint: fingerprint.to_string(),
            })
            .expect("header serialization");
            writeln!(f, "{header}").map_err(|e| Error::io(path, e))?;
            f
        };
        file.flush().map_err(|e| Error::io(path, e))?;
        Ok((
            Self {
                path: path.to_path_buf(),
                file: Mutex::new(file),
            },
            done,
        ))
    }

    fn append(&self, scores: &LabelScores) -> Result<()> {
        let record = CheckpointRecord {
            label: scores.label.normalized().to_string(),
            label_raw: scores.label.raw().to_string(),
            fallback_premise: scores.fallback_premise,
            scored: scores.scored.clone(),
        };
        let line = serde_json::to_string(&record).expect("record serialization");
        let mut file = self.file.lock().expect("checkpoint lock poisoned");
        writeln!(file, "{line}").map_err(|e| Error::io(&self.path, e))?;
        file.flush().map_err(|e| Error::io(&self.path, e))
    }

    fn remove(self) -> Result<()> {
        drop(self.file);
        fs::remove_file(&self.path).map_err(|e| Error::io(&self.path, e))
    }
}

/// Hash over every setting that changes candidate scores.
pub fn scoring_fingerprint(config: &BuildConfig, backend: &dyn ScoringBackend) -> String {
    let description = format!(
        "sources={:?};knn_n={};max_premises={};wordnet={:?};min_weight={};backend={};template={}",
        config.sources,
        config.knn_n,
        config.max_premises,
        config.wordnet,
        config.conceptnet_min_weight,
        backend.describe(),
        FALLBACK_TEMPLATE,
    );
    hex::encode(Sha256::digest(description.as_bytes()))
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))
}

/// Scores every label. Labels completed in an earlier interrupted run are
/// read back from `checkpoint`; the checkpoint is removed on success.
/// Output order is the label order, whatever the worker count.
pub fn build_vocabulary(
    labels: &[Label],
    sources: &CandidateSources,
    corpus: &PremiseCorpus,
    backend: &dyn ScoringBackend,
    config: &BuildConfig,
    checkpoint: Option<&Path>,
) -> Result<VocabularyBuild> {
    config.validate()?;
    sources.check(&config.sources)?;
    let pool = thread_pool(config.jobs)?;

    let (checkpoint, mut done) = match checkpoint {
        Some(path) => {
            let (cp, done) = Checkpoint::open(path, &scoring_fingerprint(config, backend))?;
            (Some(cp), done)
        }
        None => (None, HashMap::new()),
    };
    if !done.is_empty() {
        info!(resumed = done.len(), "resuming from checkpoint");
    }
    let pending: Vec<&Label> = labels
        .iter()
        .filter(|l| !done.contains_key(l.normalized()))
        .collect();

    let unions: Vec<Result<CandidateUnion>> = pool.install(|| {
        pending
            .par_iter()
            .map(|label| build_candidates(label, sources, config))
            .collect()
    });
    let mut misses = Vec::new();
    let mut first_error = None;
    let mut ready = Vec::with_capacity(unions.len());
    for union in unions {
        match union {
            Ok(u) => ready.push(u),
            Err(Error::CacheMiss(labels)) => misses.extend(labels),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_error {
        return Err(e);
    }
    if !misses.is_empty() {
        return Err(Error::CacheMiss(misses));
    }

    let abort = AtomicBool::new(false);
    let scored: Vec<Option<Result<LabelScores>>> = pool.install(|| {
        ready
            .par_iter()
            .map(|union| {
                if abort.load(Ordering::SeqCst) {
                    return None;
                }
                let result = score_union(union, corpus, backend, config).and_then(|scores| {
                    if let Some(cp) = &checkpoint {
                        cp.append(&scores)?;
                    }
                    Ok(scores)
                });
                if result.is_err() {
                    abort.store(true, Ordering::SeqCst);
                }
                Some(result)
            })
            .collect()
    });
    for result in scored.into_iter().flatten() {
        let scores = result?;
        done.insert(scores.label.normalized().to_string(), scores);
    }
    if let Some(cp) = checkpoint {
        cp.remove()?;
    }
    let labels = labels
        .iter()
        .map(|l| {
            done.remove(l.normalized())
                .expect("every label is either resumed or freshly scored")
        })
        .collect();
    Ok(VocabularyBuild { labels })
}

/// Self-description written into the artifact header.
pub fn build_metadata(
    config: &BuildConfig,
    sources: &CandidateSources,
    backend: &dyn ScoringBackend,
    corpus_name: &str,
    restricted_to: Option<Source>,
) -> ArtifactMetadata {
    let wordnet = sources
        .wordnet
        .as_ref()
        .filter(|_| config.sources.contains(&Source::WordNet))
        .map(|wn| WordnetProvenance {
            version: wn.version().to_string(),
            hypernym_depth: config.wordnet.hypernym_depth,
            parts_of_speech: config
                .wordnet
                .parts_of_speech
                .iter()
                .map(|p| p.to_string())
                .collect(),
        });
    let conceptnet = sources
        .conceptnet
        .as_ref()
        .filter(|_| config.sources.contains(&Source::ConceptNet))
        .map(|cn| ConceptNetProvenance {
            api_version: cn.config().api_version.clone(),
            relations: cn
                .config()
                .relations
                .iter()
                .map(|r| r.to_string())
                .collect(),
            min_weight: config.conceptnet_min_weight,
        });
    let vector_tables = [
        (Source::BertVec, &sources.bert),
        (Source::CounterfitVec, &sources.counterfit),
    ]
    .into_iter()
    .filter(|(s, _)| config.sources.contains(s))
    .filter_map(|(s, t)| {
        t.as_ref().map(|t| VectorProvenance {
            source: Some(s),
            provenance: sources
                .vector_provenance
                .get(&s)
                .cloned()
                .unwrap_or_default(),
            dim: t.dim(),
            entries: t.len(),
        })
    })
    .collect();
    ArtifactMetadata {
        tool: "aas".to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        k: Some(config.k),
        k_includes_label: true,
        threshold: Some(config.threshold),
        knn_n: Some(config.knn_n),
        sources: config.sources.iter().copied().collect(),
        restricted_to,
        backend: Some(backend.describe()),
        wordnet,
        conceptnet,
        vector_tables,
        premises: Some(PremiseProvenance {
            corpus: corpus_name.to_string(),
            max_premises: config.max_premises,
            order: "ascending question id".to_string(),
            fallback_template: FALLBACK_TEMPLATE.to_string(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, QaItem};
    use crate::entailment::{LexicalBackend, PremiseHypothesis};

    fn label(s: &str) -> Label {
        Label::new(s).unwrap()
    }

    fn table(source: Source, rows: &[(&str, [f32; 3])]) -> VectorTable {
        VectorTable::from_entries(
            source,
            rows.iter().map(|(p, v)| (p.to_string(), v.to_vec())),
        )
        .unwrap()
    }

    fn sources() -> CandidateSources {
        CandidateSources {
            bert: Some(table(
                Source::BertVec,
                &[
                    ("teddy bear", [1.0, 0.0, 0.0]),
                    ("stuffed animal", [0.9, 0.1, 0.0]),
                    ("toy", [0.8, 0.3, 0.0]),
                    ("grizzly", [0.0, 1.0, 0.0]),
                ],
            )),
            counterfit: Some(table(
                Source::CounterfitVec,
                &[
                    ("teddy bear", [1.0, 0.0, 0.0]),
                    ("toy", [0.9, 0.1, 0.0]),
                    ("doll", [0.8, 0.2, 0.0]),
                ],
            )),
            ..Default::default()
        }
    }

    fn config(enabled: &[Source]) -> BuildConfig {
        BuildConfig {
            sources: enabled.iter().copied().collect(),
            knn_n: 2,
            ..Default::default()
        }
    }

    fn corpus() -> PremiseCorpus {
        let items = ["is the teddy bear brown?", "who holds the teddy bear?"]
            .iter()
            .enumerate()
            .map(|(i, q)| QaItem {
                question_id: i.to_string(),
                question_text: q.to_string(),
                ground_truth: label("teddy bear"),
                image_id: String::new(),
            })
            .collect();
        PremiseCorpus::from_dataset(&Dataset::new(items).unwrap())
    }

    #[test]
    fn union_records_provenance() {
        let cfg = config(&[Source::BertVec, Source::CounterfitVec]);
        let union = build_candidates(&label("teddy bear"), &sources(), &cfg).unwrap();
        assert_eq!(
            union.per_source[&Source::BertVec],
            ["stuffed animal", "toy"]
        );
        assert_eq!(
            union.union,
            [
                (
                    "stuffed animal".to_string(),
                    BTreeSet::from([Source::BertVec])
                ),
                (
                    "toy".to_string(),
                    BTreeSet::from([Source::BertVec, Source::CounterfitVec])
                ),
                ("doll".to_string(), BTreeSet::from([Source::CounterfitVec])),
            ]
        );
        let single = build_candidates(
            &label("teddy bear"),
            &sources(),
            &config(&[Source::BertVec]),
        )
        .unwrap();
        let phrases: Vec<_> = single.union.iter().map(|(p, _)| p.as_str()).collect();
        assert_eq!(phrases, single.per_source[&Source::BertVec]);
    }

    #[test]
    fn unloaded_source_fails_naming_it() {
        let err = build_candidates(
            &label("teddy bear"),
            &sources(),
            &config(&[Source::WordNet]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("wordnet"), "{err}");
    }

    struct Zero;

    impl ScoringBackend for Zero {
        fn score_batch(&self, pairs: &[PremiseHypothesis]) -> Result<Vec<f64>> {
            Ok(vec![0.0; pairs.len()])
        }
        fn describe(&self) -> String {
            "zero".into()
        }
    }

    #[test]
    fn zero_backend_leaves_only_label() {
        let cfg = config(&[Source::BertVec, Source::CounterfitVec]);
        let set = build_aas(&label("teddy bear"), &sources(), &corpus(), &Zero, &cfg).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.members()[0].score, 1.0);
    }

    #[test]
    fn per_source_sets_restrict_the_union() {
        let cfg = config(&[Source::BertVec, Source::CounterfitVec]);
        let union = build_candidates(&label("teddy bear"), &sources(), &cfg).unwrap();
        let scores = score_union(&union, &corpus(), &LexicalBackend, &cfg).unwrap();
        let su = scores.select(None, 6, 0.5).unwrap();
        let bert = scores.select(Some(Source::BertVec), 6, 0.5).unwrap();
        for m in bert.alternatives() {
            assert!(union.per_source[&Source::BertVec].contains(&m.phrase));
            assert_eq!(su.lookup(&m.phrase).unwrap().score, m.score);
        }
        assert!(!bert.contains("doll"));
    }

    #[test]
    fn truncation_to_k() {
        let rows: Vec<(String, Vec<f32>)> = std::iter::once(("x".to_string(), vec![1.0, 0.0]))
            .chain((0..10).map(|i| (format!("c{i}"), vec![1.0, 0.01 * (i + 1) as f32])))
            .collect();
        let sources = CandidateSources {
            bert: Some(VectorTable::from_entries(Source::BertVec, rows).unwrap()),
            ..Default::default()
        };
        struct Nine;
        impl ScoringBackend for Nine {
            fn score_batch(&self, pairs: &[PremiseHypothesis]) -> Result<Vec<f64>> {
                Ok(vec![0.9; pairs.len()])
            }
            fn describe(&self) -> String {
                "nine".into()
            }
        }
        let cfg = BuildConfig {
            sources: BTreeSet::from([Source::BertVec]),
            knn_n: 10,
            ..Default::default()
        };
        let set = build_aas(
            &label("x"),
            &sources,
            &PremiseCorpus::default(),
            &Nine,
            &cfg,
        )
        .unwrap();
        assert_eq!(set.len(), 6);
        assert!(set.contains("x"));
    }

    #[test]
    fn config_bounds() {
        for k in [1, 11] {
            let cfg = BuildConfig {
                k,
                ..Default::default()
            };
            assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        }
        let cfg = BuildConfig {
            threshold: 1.5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(BuildConfig::default().validate().is_ok());
    }

    /// Fails once `remaining` successful calls are used up.
    struct Fuse(std::sync::atomic::AtomicUsize);

    impl ScoringBackend for Fuse {
        fn score_batch(&self, pairs: &[PremiseHypothesis]) -> Result<Vec<f64>> {
            let left = self.0.load(Ordering::SeqCst);
            if left == 0 {
                return Err(Error::ResourceUnavailable("service down".into()));
            }
            self.0.store(left - 1, Ordering::SeqCst);
            LexicalBackend.score_batch(pairs)
        }
        fn describe(&self) -> String {
            LexicalBackend.describe()
        }
    }

    #[test]
    fn checkpoint_resumes_after_backend_failure() {
        let dir = tempfile::tempdir().unwrap();
        let cp = dir.path().join("build.checkpoint");
        let rows: Vec<(String, Vec<f32>)> = (0..8)
            .map(|i| (format!("w{i}"), vec![1.0, i as f32 * 0.1 + 0.05]))
            .collect();
        let sources = CandidateSources {
            bert: Some(VectorTable::from_entries(Source::BertVec, rows).unwrap()),
            ..Default::default()
        };
        let labels: Vec<Label> = (0..8).map(|i| label(&format!("w{i}"))).collect();
        let mut cfg = BuildConfig {
            sources: BTreeSet::from([Source::BertVec]),
            knn_n: 3,
            ..Default::default()
        };
        cfg.scoring.retries = 0;
        let corpus = PremiseCorpus::default();

        let err = build_vocabulary(&labels, &sources, &corpus, &Fuse(3.into()), &cfg, Some(&cp))
            .unwrap_err();
        assert!(matches!(err, Error::ResourceUnavailable(_)));
        let lines = fs::read_to_string(&cp).unwrap().lines().count();
        assert_eq!(lines, 1 + 3, "header plus three finished labels");

        let resumed =
            build_vocabulary(&labels, &sources, &corpus, &Fuse(5.into()), &cfg, Some(&cp)).unwrap();
        assert!(!cp.exists());
        let fresh =
            build_vocabulary(&labels, &sources, &corpus, &LexicalBackend, &cfg, None).unwrap();
        assert_eq!(resumed.labels, fresh.labels);
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let rows: Vec<(String, Vec<f32>)> = (0..30)
            .map(|i| (format!("w{i}"), vec![1.0, (i % 7) as f32, (i % 3) as f32]))
            .collect();
        let sources = CandidateSources {
            bert: Some(VectorTable::from_entries(Source::BertVec, rows).unwrap()),
            ..Default::default()
        };
        let labels: Vec<Label> = (0..30).map(|i| label(&format!("w{i}"))).collect();
        let mut cfg = BuildConfig {
            sources: BTreeSet::from([Source::BertVec]),
            ..Default::default()
        };
        let corpus = PremiseCorpus::default();
        let one =
            build_vocabulary(&labels, &sources, &corpus, &LexicalBackend, &cfg, None).unwrap();
        cfg.jobs = 8;
        let eight =
            build_vocabulary(&labels, &sources, &corpus, &LexicalBackend, &cfg, None).unwrap();
        assert_eq!(one.labels, eight.labels);
    }
}
