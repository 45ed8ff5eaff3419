//! Scoring prediction files: exact match, the AAS semantic metric, K-sweeps
//! and agreement with human annotations.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::answer::{normalize, AnswerSet};
use crate::artifact::ArtifactMetadata;
use crate::dataset::{compare_question_ids, id_string, Dataset};
use crate::entailment::exact_sum;
use crate::error::{Error, Result};

/// Reads a JSON-lines file, skipping blank lines. Returns 1-based line
/// numbers alongside the records.
pub(crate) fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        out.push((i + 1, record));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub question_id: String,
    pub answer: String,
}

#[derive(Deserialize)]
struct PredictionLine {
    question_id: serde_json::Value,
    answer: String,
}

pub fn load_predictions(path: &Path) -> Result<Vec<Prediction>> {
    read_jsonl::<PredictionLine>(path)?
        .into_iter()
        .map(|(line, p)| {
            if !(p.question_id.is_string() || p.question_id.is_number()) {
                return Err(Error::parse(
                    path,
                    line,
                    "question_id must be a string or number",
                ));
            }
            Ok(Prediction {
                question_id: id_string(&p.question_id),
                answer: p.answer,
            })
        })
        .collect()
}

pub fn write_predictions(predictions: &[Prediction], path: &Path) -> Result<()> {
    let mut out = String::new();
    for p in predictions {
        out.push_str(&serde_json::to_string(p).expect("prediction serialization"));
        out.push('\n');
    }
    crate::artifact::write_atomic(path, out.as_bytes())
}

/// The member score of the normalized prediction, or 0 when it is not a
/// member. A prediction that normalizes to nothing scores 0.
pub fn score_prediction(aas: &AnswerSet, predicted: &str) -> f64 {
    aas.lookup(predicted).map_or(0.0, |m| m.score)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionScore {
    pub question_id: String,
    pub ground_truth: String,
    pub prediction: String,
    pub exact: bool,
    pub member: bool,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_questions: usize,
    /// Percentages rounded to two decimals.
    pub exact_match_pct: f64,
    pub aas_accuracy_pct: f64,
    /// Share of predictions that are any member of the AAS, ignoring scores.
    pub aas_membership_pct: f64,
    /// Unrounded fractions in [0, 1].
    pub exact_match: f64,
    pub aas_accuracy: f64,
    pub aas_membership: f64,
    /// Set size cap applied before scoring, if any.
    pub k: Option<usize>,
    pub per_question: Vec<QuestionScore>,
}

pub fn round2(pct: f64) -> f64 {
    (pct * 100.0).round() / 100.0
}

fn index_sets(sets: &[AnswerSet]) -> HashMap<&str, &AnswerSet> {
    sets.iter().map(|s| (s.label().normalized(), s)).collect()
}

/// Evaluates predictions against ground truths and their answer sets.
pub fn evaluate(
    sets: &[AnswerSet],
    dataset: &Dataset,
    predictions: &[Prediction],
) -> Result<EvalReport> {
    evaluate_indexed(&index_sets(sets), dataset, predictions, None)
}

/// Like [`evaluate`] with every set first cut to its top `k` members.
pub fn evaluate_at_k(
    sets: &[AnswerSet],
    dataset: &Dataset,
    predictions: &[Prediction],
    k: usize,
) -> Result<EvalReport> {
    if k == 0 {
        return Err(Error::Eval("k must be positive".into()));
    }
    evaluate_indexed(&index_sets(sets), dataset, predictions, Some(k))
}

fn evaluate_indexed(
    sets: &HashMap<&str, &AnswerSet>,
    dataset: &Dataset,
    predictions: &[Prediction],
    k: Option<usize>,
) -> Result<EvalReport> {
    if predictions.is_empty() {
        return Err(Error::Eval("no predictions to evaluate".into()));
    }
    let mut seen = BTreeSet::new();
    let mut duplicates = BTreeSet::new();
    let mut unresolved = BTreeSet::new();
    let mut missing = BTreeSet::new();
    for p in predictions {
        if !seen.insert(p.question_id.as_str()) {
            duplicates.insert(p.question_id.as_str());
        }
        match dataset.get(&p.question_id) {
            None => {
                unresolved.insert(p.question_id.as_str());
            }
            Some(item) if !sets.contains_key(item.ground_truth.normalized()) => {
                missing.insert(item.ground_truth.normalized());
            }
            Some(_) => {}
        }
    }
    let list = |s: BTreeSet<&str>| s.into_iter().collect::<Vec<_>>().join(", ");
    if !duplicates.is_empty() {
        return Err(Error::Eval(format!(
            "duplicate predictions for question ids: {}",
            list(duplicates)
        )));
    }
    if !unresolved.is_empty() {
        return Err(Error::Eval(format!(
            "unknown question ids: {}",
            list(unresolved)
        )));
    }
    if !missing.is_empty() {
        return Err(Error::Eval(format!(
            "no answer set for labels: {}",
            list(missing)
        )));
    }

    let mut per_question: Vec<QuestionScore> = predictions
        .par_iter()
        .map(|p| {
            let item = dataset.get(&p.question_id).expect("resolved above");
            let full = sets[item.ground_truth.normalized()];
            let truncated;
            let set = match k {
                Some(k) => {
                    truncated = full.truncated(k);
                    &truncated
                }
                None => full,
            };
            let normalized = normalize(&p.answer).ok();
            let member = set.lookup(&p.answer);
            QuestionScore {
                question_id: p.question_id.clone(),
                ground_truth: item.ground_truth.normalized().to_string(),
                prediction: p.answer.clone(),
                exact: normalized.as_deref() == Some(item.ground_truth.normalized()),
                member: member.is_some(),
                score: member.map_or(0.0, |m| m.score),
            }
        })
        .collect();
    per_question.sort_by(|a, b| compare_question_ids(&a.question_id, &b.question_id));

    let n = per_question.len() as f64;
    let exact_match = per_question.iter().filter(|q| q.exact).count() as f64 / n;
    let aas_membership = per_question.iter().filter(|q| q.member).count() as f64 / n;
    let aas_accuracy = exact_sum(per_question.iter().map(|q| q.score)) / n;
    Ok(EvalReport {
        n_questions: per_question.len(),
        exact_match_pct: round2(100.0 * exact_match),
        aas_accuracy_pct: round2(100.0 * aas_accuracy),
        aas_membership_pct: round2(100.0 * aas_membership),
        exact_match,
        aas_accuracy,
        aas_membership,
        k,
        per_question,
    })
}

impl EvalReport {
    /// Human-readable summary; the JSON form carries the full detail.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        writeln!(out, "questions          {}", self.n_questions).unwrap();
        if let Some(k) = self.k {
            writeln!(out, "k                  {k}").unwrap();
        }
        writeln!(out, "exact match        {:.2}", self.exact_match_pct).unwrap();
        writeln!(out, "aas accuracy       {:.2}", self.aas_accuracy_pct).unwrap();
        writeln!(out, "aas membership     {:.2}", self.aas_membership_pct).unwrap();
        out
    }
}

pub const DEFAULT_SWEEP: std::ops::RangeInclusive<usize> = 2..=10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub k: usize,
    pub aas_accuracy_pct: f64,
    pub aas_membership_pct: f64,
    pub exact_match_pct: f64,
    pub aas_accuracy: f64,
}

/// Largest set size (label included) the artifact can support.
fn artifact_capacity(metadata: Option<&ArtifactMetadata>) -> Option<usize> {
    let meta = metadata?;
    let k = meta.k?;
    Some(if meta.k_includes_label { k } else { k + 1 })
}

/// Evaluates the artifact truncated to each `k`, in ascending `k`.
pub fn k_sweep(
    sets: &[AnswerSet],
    metadata: Option<&ArtifactMetadata>,
    dataset: &Dataset,
    predictions: &[Prediction],
    ks: impl IntoIterator<Item = usize>,
) -> Result<Vec<SweepPoint>> {
    let ks: BTreeSet<usize> = ks.into_iter().collect();
    let Some(&max_k) = ks.last() else {
        return Err(Error::Eval("empty k range".into()));
    };
    if ks.contains(&0) {
        return Err(Error::Eval("k must be positive".into()));
    }
    if let Some(capacity) = artifact_capacity(metadata) {
        if capacity < max_k {
            return Err(Error::Eval(format!(
                "artifact was built with k={capacity}, too small for a sweep up to k={max_k}"
            )));
        }
    } else {
        tracing::warn!("artifact records no k; sweep points above its build size are flat");
    }
    let index = index_sets(sets);
    ks.into_iter()
        .map(|k| {
            let r = evaluate_indexed(&index, dataset, predictions, Some(k))?;
            Ok(SweepPoint {
                k,
                aas_accuracy_pct: r.aas_accuracy_pct,
                aas_membership_pct: r.aas_membership_pct,
                exact_match_pct: r.exact_match_pct,
                aas_accuracy: r.aas_accuracy,
            })
        })
        .collect()
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("k,aas_accuracy_pct,aas_membership_pct,exact_match_pct\n");
    for p in points {
        writeln!(
            out,
            "{},{:.2},{:.2},{:.2}",
            p.k, p.aas_accuracy_pct, p.aas_membership_pct, p.exact_match_pct
        )
        .unwrap();
    }
    out
}

/// Three annotator verdicts on whether `phrase` can replace `label`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanAnnotation {
    pub label: String,
    pub phrase: String,
    pub votes: Vec<bool>,
}

pub const ANNOTATORS: usize = 3;

pub fn load_human_annotations(path: &Path) -> Result<Vec<HumanAnnotation>> {
    Ok(read_jsonl(path)?.into_iter().map(|(_, a)| a).collect())
}

/// Per label, the phrases approved by a majority of annotators. A label
/// whose candidates were all rejected maps to an empty set.
pub fn human_sets(annotations: &[HumanAnnotation]) -> Result<BTreeMap<String, BTreeSet<String>>> {
    let mut sets: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for a in annotations {
        let label = normalize(&a.label)?;
        let phrase = normalize(&a.phrase)?;
        if a.votes.len() != ANNOTATORS {
            return Err(Error::Format(format!(
                "{label:?} / {phrase:?}: expected {ANNOTATORS} votes, found {}",
                a.votes.len()
            )));
        }
        if !seen.insert((label.clone(), phrase.clone())) {
            return Err(Error::Format(format!(
                "{label:?} / {phrase:?} annotated twice"
            )));
        }
        let approved = a.votes.iter().filter(|v| **v).count() * 2 > ANNOTATORS;
        let entry = sets.entry(label.clone()).or_default();
        if approved && phrase != label {
            entry.insert(phrase);
        }
    }
    Ok(sets)
}

pub fn iou(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelAgreement {
    pub label: String,
    pub iou: f64,
    pub auto: BTreeSet<String>,
    pub human: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IouReport {
    /// Mean IoU over labels, as a percentage rounded to two decimals.
    pub iou_pct: f64,
    pub mean_iou: f64,
    /// The label itself is left out of both sets.
    pub label_excluded: bool,
    pub per_label: Vec<LabelAgreement>,
}

/// Agreement between an automatic artifact and human annotations over the
/// annotated labels.
pub fn iou_agreement(sets: &[AnswerSet], annotations: &[HumanAnnotation]) -> Result<IouReport> {
    let human = human_sets(annotations)?;
    if human.is_empty() {
        return Err(Error::Eval("no human annotations".into()));
    }
    let index = index_sets(sets);
    let missing: Vec<&str> = human
        .keys()
        .filter(|l| !index.contains_key(l.as_str()))
        .map(String::as_str)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Eval(format!(
            "no answer set for annotated labels: {}",
            missing.join(", ")
        )));
    }
    let per_label: Vec<LabelAgreement> = human
        .into_iter()
        .map(|(label, human)| {
            let auto: BTreeSet<String> = index[label.as_str()]
                .alternatives()
                .map(|m| m.phrase.clone())
                .collect();
            LabelAgreement {
                iou: iou(&auto, &human),
                label,
                auto,
                human,
            }
        })
        .collect();
    let mean_iou = exact_sum(per_label.iter().map(|l| l.iou)) / per_label.len() as f64;
    Ok(IouReport {
        iou_pct: round2(100.0 * mean_iou),
        mean_iou,
        label_excluded: true,
        per_label,
    })
}
