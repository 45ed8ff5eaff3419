//! Soft training targets derived from answer sets.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::answer::{normalize, AnswerSet};
use crate::artifact::write_atomic;
use crate::dataset::Dataset;
use crate::entailment::exact_sum;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// Equal weight on every in-vocabulary member.
    Uniform,
    /// Weights proportional to member scores.
    Score,
}

impl FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "score" => Ok(Self::Score),
            other => Err(Error::Config(format!(
                "unknown weighting mode {other:?} (expected uniform or score)"
            ))),
        }
    }
}

/// Answer vocabulary of a downstream classifier: one answer per line, the
/// index being the 0-based line number.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    len: usize,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_lines<I, S>(lines: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut index = HashMap::new();
        let mut len = 0;
        for (i, line) in lines.into_iter().enumerate() {
            len = i + 1;
            // Lines that normalize to nothing keep their slot but match nothing.
            let Ok(answer) = normalize(line.as_ref()) else {
                continue;
            };
            if let Some(first) = index.insert(answer.clone(), i) {
                return Err(Error::Format(format!(
                    "vocabulary answer {answer:?} appears on lines {} and {}",
                    first + 1,
                    i + 1
                )));
            }
        }
        Ok(Self { len, index })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn index_of(&self, answer: &str) -> Option<usize> {
        normalize(answer)
            .ok()
            .and_then(|a| self.index.get(&a).copied())
    }
}

pub fn load_vocabulary(path: &Path) -> Result<Vocabulary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Vocabulary::from_lines(text.lines())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftTarget {
    pub question_id: String,
    /// `(vocabulary index, weight)`, in member rank order; weights sum to 1.
    pub targets: Vec<(usize, f64)>,
}

/// Target distribution over the in-vocabulary members of `aas`, or `None`
/// when the label itself is out of vocabulary.
pub fn soft_targets(
    aas: &AnswerSet,
    vocab: &Vocabulary,
    mode: WeightMode,
) -> Option<Vec<(usize, f64)>> {
    vocab.index_of(aas.label().normalized())?;
    let kept: Vec<(usize, f64)> = aas
        .members()
        .iter()
        .filter_map(|m| vocab.index_of(&m.phrase).map(|i| (i, m.score)))
        .collect();
    let raw: Vec<f64> = match mode {
        WeightMode::Uniform => vec![1.0; kept.len()],
        WeightMode::Score => kept.iter().map(|(_, s)| *s).collect(),
    };
    let total = exact_sum(raw.iter().copied());
    Some(
        kept.iter()
            .zip(raw)
            .map(|((i, _), w)| (*i, w / total))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftTargetExport {
    /// One entry per exported question, ascending question id.
    pub targets: Vec<SoftTarget>,
    /// Questions skipped because their ground truth is out of vocabulary.
    pub skipped: usize,
}

pub fn export_soft_targets(
    dataset: &Dataset,
    sets: &[AnswerSet],
    vocab: &Vocabulary,
    mode: WeightMode,
) -> Result<SoftTargetExport> {
    let index: HashMap<&str, &AnswerSet> =
        sets.iter().map(|s| (s.label().normalized(), s)).collect();
    let missing: BTreeSet<&str> = dataset
        .items()
        .iter()
        .map(|q| q.ground_truth.normalized())
        .filter(|l| !index.contains_key(l))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Eval(format!(
            "no answer set for labels: {}",
            missing.into_iter().collect::<Vec<_>>().join(", ")
        )));
    }
    // Dataset items are already in ascending question-id order.
    let results: Vec<Option<SoftTarget>> = dataset
        .items()
        .par_iter()
        .map(|q| {
            soft_targets(index[q.ground_truth.normalized()], vocab, mode).map(|targets| {
                SoftTarget {
                    question_id: q.question_id.clone(),
                    targets,
                }
            })
        })
        .collect();
    let skipped = results.iter().filter(|r| r.is_none()).count();
    if skipped > 0 {
        warn!(
            skipped,
            "skipped questions whose ground truth is not in the vocabulary"
        );
    }
    Ok(SoftTargetExport {
        targets: results.into_iter().flatten().collect(),
        skipped,
    })
}

pub fn write_soft_targets(targets: &[SoftTarget], path: &Path) -> Result<()> {
    let mut out = String::new();
    for t in targets {
        out.push_str(&serde_json::to_string(t).expect("soft target serialization"));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}
