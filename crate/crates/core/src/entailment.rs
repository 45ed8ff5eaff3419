//! Premise harvesting, label-substitution hypotheses, and semantic scores.
//!
//! A candidate's semantic score is the mean entailment score over premise
//! sentences that mention the label, each paired with the same sentence
//! with the label replaced by the candidate.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::ops::Range;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tracing::warn;

use crate::answer::Label;
use crate::artifact::write_atomic;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::http::HttpTransport;

pub const DEFAULT_MAX_PREMISES: usize = 50;
pub const DEFAULT_THRESHOLD: f64 = 0.5;
/// Premise used when no question in the corpus mentions the label.
pub const FALLBACK_TEMPLATE: &str = "there is a {label} in the picture.";
/// Largest batch the scoring service accepts.
pub const SERVICE_BATCH_LIMIT: usize = 256;

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Byte ranges of every non-overlapping whole-word occurrence of `needle`
/// in `text`. `needle` must be normalized; matching is case-insensitive and
/// a space in `needle` matches any run of whitespace.
pub fn find_whole_word(text: &str, needle: &str) -> Vec<Range<usize>> {
    let (Some(first), Some(last)) = (needle.chars().next(), needle.chars().last()) else {
        return Vec::new();
    };
    let check_before = is_word_char(first);
    let check_after = is_word_char(last);
    let mut spans = Vec::new();
    let mut prev: Option<char> = None;
    let mut skip_until = 0;
    for (start, c) in text.char_indices() {
        let before = prev;
        prev = Some(c);
        if start < skip_until || (check_before && before.is_some_and(is_word_char)) {
            continue;
        }
        if let Some(end) = match_at(text, start, needle) {
            let after = text[end..].chars().next();
            if !(check_after && after.is_some_and(is_word_char)) {
                spans.push(start..end);
                skip_until = end;
            }
        }
    }
    spans
}

fn match_at(text: &str, start: usize, needle: &str) -> Option<usize> {
    let mut hay = text[start..].char_indices().peekable();
    let mut want = needle.chars().peekable();
    while let Some(w) = want.next() {
        if w == ' ' {
            let mut any = false;
            while let Some(&(_, c)) = hay.peek() {
                if !c.is_whitespace() {
                    break;
                }
                any = true;
                hay.next();
            }
            if !any {
                return None;
            }
            continue;
        }
        let (_, c) = hay.next()?;
        let mut lowered = c.to_lowercase();
        if lowered.next() != Some(w) {
            return None;
        }
        for extra in lowered {
            if want.next() != Some(extra) {
                return None;
            }
        }
    }
    Some(hay.peek().map_or(text.len(), |&(i, _)| start + i))
}

/// Premise sentences for one label.
#[derive(Debug, Clone, PartialEq)]
pub struct PremiseSet {
    pub label: Label,
    pub premises: Vec<String>,
    /// True when the corpus had no match and the template was used.
    pub fallback: bool,
}

/// Question texts in ascending question-id order, with a lowercase copy
/// for fast prefiltering.
#[derive(Debug, Clone, Default)]
pub struct PremiseCorpus {
    sentences: Vec<(String, String)>,
}

impl PremiseCorpus {
    pub fn from_dataset(dataset: &Dataset) -> Self {
        let sentences = dataset
            .items()
            .iter()
            .map(|item| {
                let lowered = item
                    .question_text
                    .chars()
                    .flat_map(char::to_lowercase)
                    .collect();
                (item.question_text.clone(), lowered)
            })
            .collect();
        Self { sentences }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// The first `max` sentences containing the label as a whole word, or
    /// a single template premise when none do.
    pub fn harvest(&self, label: &Label, max: usize) -> PremiseSet {
        let needle = label.normalized();
        let head = needle.split(' ').next().unwrap_or(needle);
        let premises: Vec<String> = self
            .sentences
            .iter()
            .filter(|(_, lowered)| lowered.contains(head))
            .filter(|(text, _)| !find_whole_word(text, needle).is_empty())
            .take(max)
            .map(|(text, _)| text.clone())
            .collect();
        if premises.is_empty() {
            PremiseSet {
                label: label.clone(),
                premises: vec![FALLBACK_TEMPLATE.replace("{label}", needle)],
                fallback: true,
            }
        } else {
            PremiseSet {
                label: label.clone(),
                premises,
                fallback: false,
            }
        }
    }
}

pub fn harvest_premises(dataset: &Dataset, label: &Label, max: usize) -> PremiseSet {
    PremiseCorpus::from_dataset(dataset).harvest(label, max)
}

/// Replaces every whole-word occurrence of the label with `candidate`.
pub fn make_hypothesis(premise: &str, label: &Label, candidate: &str) -> Result<String> {
    let spans = find_whole_word(premise, label.normalized());
    if spans.is_empty() {
        return Err(Error::ContractViolation(format!(
            "premise {premise:?} does not contain label {:?}",
            label.normalized()
        )));
    }
    let mut out = String::with_capacity(premise.len() + spans.len() * candidate.len());
    let mut cursor = 0;
    for span in spans {
        out.push_str(&premise[cursor..span.start]);
        out.push_str(candidate);
        cursor = span.end;
    }
    out.push_str(&premise[cursor..]);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PremiseHypothesis {
    pub premise: String,
    pub hypothesis: String,
}

/// Anything that maps (premise, hypothesis) pairs to entailment scores in
/// `[0, 1]`, in input order.
pub trait ScoringBackend: Send + Sync {
    fn score_batch(&self, pairs: &[PremiseHypothesis]) -> Result<Vec<f64>>;

    /// Identifier recorded in artifact metadata.
    fn describe(&self) -> String;
}

impl<B: ScoringBackend + ?Sized> ScoringBackend for Arc<B> {
    fn score_batch(&self, pairs: &[PremiseHypothesis]) -> Result<Vec<f64>> {
        (**self).score_batch(pairs)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticScore {
    pub candidate: String,
    pub mean_score: f64,
    pub n_premises: usize,
}

#[derive(Debug, Clone)]
pub struct ScoringOptions {
    pub batch_size: usize,
    pub retries: u32,
    pub retry_delay: Duration,
}

impl Default for ScoringOptions {
    fn default() -> Self {
        Self {
            batch_size: 64,
            retries: 3,
            retry_delay: Duration::from_millis(250),
        }
    }
}

/// Correctly rounded floating-point sum (Shewchuk's algorithm with the
/// half-way correction used by Python's `math.fsum`). Independent of
/// summation order.
pub fn exact_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for mut x in values {
        let mut kept = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        partials.truncate(kept);
        partials.push(x);
    }
    let Some(mut n) = partials.len().checked_sub(1) else {
        return 0.0;
    };
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        lo = y - (hi - x);
        if lo != 0.0 {
            break;
        }
    }
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        if y == x - hi {
            hi = x;
        }
    }
    hi
}

fn score_with_retry(
    backend: &dyn ScoringBackend,
    pairs: &[PremiseHypothesis],
    options: &ScoringOptions,
) -> Result<Vec<f64>> {
    let mut delay = options.retry_delay;
    let mut attempt = 0;
    loop {
        match backend.score_batch(pairs) {
            Ok(scores) => {
                if scores.len() != pairs.len() {
                    return Err(Error::ContractViolation(format!(
                        "backend returned {} scores for {} pairs",
                        scores.len(),
                        pairs.len()
                    )));
                }
                if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
                    return Err(Error::ContractViolation(format!(
                        "backend returned score {bad} outside [0, 1]"
                    )));
                }
                return Ok(scores);
            }
            Err(Error::ResourceUnavailable(why)) if attempt < options.retries => {
                warn!(attempt, %why, "scoring backend failed, retrying");
                thread::sleep(delay);
                delay *= 2;
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Semantic scores of several candidates against one premise set. Pairs
/// are sent in batches of `options.batch_size` across candidates; batching
/// does not affect the result.
pub fn semantic_scores(
    backend: &dyn ScoringBackend,
    premises: &PremiseSet,
    candidates: &[String],
    options: &ScoringOptions,
) -> Result<Vec<SemanticScore>> {
    if premises.premises.is_empty() {
        return Err(Error::ContractViolation(format!(
            "no premises for label {:?}",
            premises.label.normalized()
        )));
    }
    let mut pairs = Vec::with_capacity(candidates.len() * premises.premises.len());
    for candidate in candidates {
        for premise in &premises.premises {
            pairs.push(PremiseHypothesis {
                premise: premise.clone(),
                hypothesis: make_hypothesis(premise, &premises.label, candidate)?,
            });
        }
    }
    let mut scores = Vec::with_capacity(pairs.len());
    for chunk in pairs.chunks(options.batch_size.max(1)) {
        scores.extend(score_with_retry(backend, chunk, options)?);
    }
    let n = premises.premises.len();
    Ok(candidates
        .iter()
        .zip(scores.chunks(n))
        .map(|(candidate, s)| SemanticScore {
            candidate: candidate.clone(),
            mean_score: exact_sum(s.iter().copied()) / n as f64,
            n_premises: n,
        })
        .collect())
}

pub fn semantic_score(
    backend: &dyn ScoringBackend,
    premises: &PremiseSet,
    candidate: &str,
    options: &ScoringOptions,
) -> Result<SemanticScore> {
    let mut scores = semantic_scores(backend, premises, &[candidate.to_string()], options)?;
    Ok(scores.remove(0))
}

/// Keeps scores at or above `threshold`, preserving order.
pub fn filter_candidates(scored: Vec<SemanticScore>, threshold: f64) -> Vec<SemanticScore> {
    scored
        .into_iter()
        .filter(|s| s.mean_score >= threshold)
        .collect()
}

/// Token-set Jaccard similarity between premise and hypothesis. Identical
/// sentences score 1.0. Deterministic and offline; used for hermetic runs.
#[derive(Debug, Default, Clone, Copy)]
pub struct LexicalBackend;

fn token_set(text: &str) -> std::collections::BTreeSet<String> {
    text.split(|c: char| !is_word_char(c))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl LexicalBackend {
    pub fn jaccard(a: &str, b: &str) -> f64 {
        let (a, b) = (token_set(a), token_set(b));
        let union = a.union(&b).count();
        if union == 0 {
            return 1.0;
        }
        a.intersection(&b).count() as f64 / union as f64
    }
}

impl ScoringBackend for LexicalBackend {
    fn score_batch(&self, pairs: &[PremiseHypothesis]) -> Result<Vec<f64>> {
        Ok(pairs
            .iter()
            .map(|p| Self::jaccard(&p.premise, &p.hypothesis))
            .collect())
    }

    fn describe(&self) -> String {
        "lexical-jaccard".to_string()
    }
}

/// Hex SHA-256 of a sentence, the key of the precomputed score table.
pub fn sentence_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Replays scores from a TSV of `premise_hash  hypothesis_hash  score`.
#[derive(Debug, Clone)]
pub struct TableBackend {
    scores: HashMap<(String, String), f64>,
    name: String,
}

impl TableBackend {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut scores = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [premise, hypothesis, score] = fields[..] else {
                return Err(Error::parse(path, i + 1, "expected 3 tab-separated fields"));
            };
            let score: f64 = score
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("bad score {score:?}")))?;
            if !(0.0..=1.0).contains(&score) {
                return Err(Error::parse(
                    path,
                    i + 1,
                    format!("score {score} outside [0, 1]"),
                ));
            }
            scores.insert((premise.to_string(), hypothesis.to_string()), score);
        }
        Ok(Self {
            scores,
            name: format!(
                "score-table:{}",
                path.file_name().unwrap_or_default().to_string_lossy()
            ),
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

impl ScoringBackend for TableBackend {
    fn score_batch(&self, pairs: &[PremiseHypothesis]) -> Result<Vec<f64>> {
        pairs
            .iter()
            .map(|p| {
                let key = (sentence_hash(&p.premise), sentence_hash(&p.hypothesis));
                self.scores.get(&key).copied().ok_or_else(|| {
                    Error::MissingResource(format!(
                        "score table has no entry for ({:?}, {:?})",
                        p.premise, p.hypothesis
                    ))
                })
            })
            .collect()
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

/// Wraps a backend and records every scored pair so a run can later be
/// replayed through [`TableBackend`].
pub struct RecordingBackend<B> {
    inner: B,
    seen: Mutex<BTreeMap<(String, String), f64>>,
}

impl<B: ScoringBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            seen: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn write_table(&self, path: &Path) -> Result<()> {
        let seen = self.seen.lock().expect("recording lock poisoned");
        let mut out = String::new();
        for ((p, h), s) in seen.iter() {
            out.push_str(&format!("{p}\t{h}\t{s}\n"));
        }
        write_atomic(path, out.as_bytes())
    }
}

impl<B: ScoringBackend> ScoringBackend for RecordingBackend<B> {
    fn score_batch(&self, pairs: &[PremiseHypothesis]) -> Result<Vec<f64>> {
        let scores = self.inner.score_batch(pairs)?;
        let mut seen = self.seen.lock().expect("recording lock poisoned");
        for (pair, &score) in pairs.iter().zip(&scores) {
            seen.insert(
                (
                    sentence_hash(&pair.premise),
                    sentence_hash(&pair.hypothesis),
                ),
                score,
            );
        }
        Ok(scores)
    }

    fn describe(&self) -> String {
        self.inner.describe()
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub pairs: Vec<PremiseHypothesis>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthStatus {
    pub status: String,
    pub model: String,
}

/// Client for the entailment scoring service (`POST /v1/score`,
/// `GET /v1/health`).
pub struct HttpBackend {
    base_url: String,
    transport: Arc<dyn HttpTransport>,
    model: Mutex<Option<String>>,
}

impl HttpBackend {
    pub fn new(base_url: impl Into<String>, transport: Arc<dyn HttpTransport>) -> Self {
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            transport,
            model: Mutex::new(None),
        }
    }

    pub fn health(&self) -> Result<HealthStatus> {
        let url = format!("{}/v1/health", self.base_url);
        let resp = self
            .transport
            .get(&url)
            .map_err(|e| Error::ResourceUnavailable(format!("{url}: {e}")))?;
        if resp.status != 200 {
            return Err(Error::ResourceUnavailable(format!(
                "HTTP {} from {url}",
                resp.status
            )));
        }
        let health: HealthStatus = serde_json::from_str(&resp.body)
            .map_err(|e| Error::ContractViolation(format!("bad health body from {url}: {e}")))?;
        *self.model.lock().expect("model lock poisoned") = Some(health.model.clone());
        Ok(health)
    }

    fn score_chunk(&self, pairs: &[PremiseHypothesis]) -> Result<Vec<f64>> {
        let url = format!("{}/v1/score", self.base_url);
        let body = serde_json::to_string(&ScoreRequest {
            pairs: pairs.to_vec(),
        })
        .expect("request serialization is infallible");
        let resp = self
            .transport
            .post_json(&url, &body)
            .map_err(|e| Error::ResourceUnavailable(format!("{url}: {e}")))?;
        match resp.status {
            200 => {}
            429 | 500..=599 => {
                return Err(Error::ResourceUnavailable(format!(
                    "HTTP {} from {url}",
                    resp.status
                )))
            }
            status => {
                return Err(Error::ContractViolation(format!(
                    "HTTP {status} from {url}: {}",
                    resp.body
                )))
            }
        }
        let parsed: ScoreResponse = serde_json::from_str(&resp.body)
            .map_err(|e| Error::ContractViolation(format!("bad score body from {url}: {e}")))?;
        if parsed.scores.len() != pairs.len() {
            return Err(Error::ContractViolation(format!(
                "service returned {} scores for {} pairs",
                parsed.scores.len(),
                pairs.len()
            )));
        }
        Ok(parsed.scores)
    }
}

impl ScoringBackend for HttpBackend {
    fn score_batch(&self, pairs: &[PremiseHypothesis]) -> Result<Vec<f64>> {
        let mut scores = Vec::with_capacity(pairs.len());
        for chunk in pairs.chunks(SERVICE_BATCH_LIMIT) {
            scores.extend(self.score_chunk(chunk)?);
        }
        Ok(scores)
    }

    fn describe(&self) -> String {
        match self.model.lock().expect("model lock poisoned").as_deref() {
            Some(model) => format!("http:{model}"),
            None => format!("http:{}", self.base_url),
        }
    }
}
