//! Question/answer dataset ingestion.
//!
//! The canonical on-disk shape is the GQA question file: a JSON object
//! mapping question id to `{question, answer, imageId}`. VQA-v2 annotation
//! files are accepted through [`load_vqa_v2`], which reduces each question's
//! annotator answers to a single ground truth.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::answer::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QaItem {
    pub question_id: String,
    pub question_text: String,
    pub ground_truth: Label,
    pub image_id: String,
}

/// Ordering used wherever "ascending question id" matters: ids that are
/// plain integers compare numerically and sort before non-numeric ids,
/// which compare lexicographically.
pub fn compare_question_ids(a: &str, b: &str) -> Ordering {
    match (a.parse::<u128>(), b.parse::<u128>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

/// A split of QA items, kept in ascending question-id order.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    items: Vec<QaItem>,
    by_id: HashMap<String, usize>,
}

impl Dataset {
    pub fn new(mut items: Vec<QaItem>) -> Result<Self> {
        items.sort_by(|a, b| compare_question_ids(&a.question_id, &b.question_id));
        let mut by_id = HashMap::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            if by_id.insert(item.question_id.clone(), i).is_some() {
                return Err(Error::Format(format!(
                    "duplicate question id {:?}",
                    item.question_id
                )));
            }
        }
        Ok(Self { items, by_id })
    }

    pub fn items(&self) -> &[QaItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, question_id: &str) -> Option<&QaItem> {
        self.by_id.get(question_id).map(|&i| &self.items[i])
    }

    /// Unique normalized ground truths, sorted.
    pub fn labels(&self) -> Vec<Label> {
        let mut unique: BTreeMap<&str, &Label> = BTreeMap::new();
        for item in &self.items {
            unique
                .entry(item.ground_truth.normalized())
                .or_insert(&item.ground_truth);
        }
        unique
            .into_keys()
            .map(|n| Label::new(n).expect("normalized labels are non-empty"))
            .collect()
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct GqaEntry {
    question: String,
    answer: String,
    #[serde(rename = "imageId", default)]
    image_id: String,
}

fn open_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::parse(path, e.line(), e.to_string()))
}

/// Loads a GQA-shaped question file. Entries whose answer normalizes to
/// nothing are skipped with a warning.
pub fn load_gqa(path: &Path) -> Result<Dataset> {
    let raw: BTreeMap<String, GqaEntry> = open_json(path)?;
    let mut items = Vec::with_capacity(raw.len());
    let mut skipped = 0usize;
    for (question_id, entry) in raw {
        match Label::new(entry.answer) {
            Ok(ground_truth) => items.push(QaItem {
                question_id,
                question_text: entry.question,
                ground_truth,
                image_id: entry.image_id,
            }),
            Err(_) => skipped += 1,
        }
    }
    if skipped > 0 {
        warn!(skipped, path = %path.display(), "skipped questions with unusable answers");
    }
    Dataset::new(items)
}

/// Writes a dataset in the GQA question-file shape.
pub fn write_gqa(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::from("{\n");
    for (i, item) in dataset.items().iter().enumerate() {
        let entry = GqaEntry {
            question: item.question_text.clone(),
            answer: item.ground_truth.raw().to_string(),
            image_id: item.image_id.clone(),
        };
        let id = serde_json::to_string(&item.question_id).expect("string serialization");
        let body = serde_json::to_string(&entry).expect("entry serialization");
        out.push_str(&format!("  {id}: {body}"));
        out.push_str(if i + 1 < dataset.len() { ",\n" } else { "\n" });
    }
    out.push_str("}\n");
    crate::artifact::write_atomic(path, out.as_bytes())
}

#[derive(Deserialize)]
struct VqaAnnotations {
    annotations: Vec<VqaAnnotation>,
}

#[derive(Deserialize)]
struct VqaAnnotation {
    question_id: serde_json::Value,
    #[serde(default)]
    image_id: serde_json::Value,
    #[serde(default)]
    multiple_choice_answer: Option<String>,
    #[serde(default)]
    answers: Vec<VqaAnswer>,
}

#[derive(Deserialize)]
struct VqaAnswer {
    answer: String,
}

#[derive(Deserialize)]
struct VqaQuestions {
    questions: Vec<VqaQuestion>,
}

#[derive(Deserialize)]
struct VqaQuestion {
    question_id: serde_json::Value,
    question: String,
}

pub(crate) fn id_string(value: &serde_json::Value) -> String {
    match value {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Most common normalized answer; ties go to the lexicographically smallest.
fn majority_answer(answers: &[VqaAnswer]) -> Option<String> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for a in answers {
        if let Ok(n) = crate::answer::normalize(&a.answer) {
            *counts.entry(n).or_default() += 1;
        }
    }
    let best = counts.values().copied().max()?;
    counts.into_iter().find(|(_, c)| *c == best).map(|(a, _)| a)
}

/// Adapter for the VQA-v2 annotation shape. The ground truth is the
/// `multiple_choice_answer` field, falling back to the most common annotator
/// answer. Question texts come from the optional questions file.
pub fn load_vqa_v2(annotations: &Path, questions: Option<&Path>) -> Result<Dataset> {
    let ann: VqaAnnotations = open_json(annotations)?;
    let texts: HashMap<String, String> = match questions {
        Some(path) => {
            let q: VqaQuestions = open_json(path)?;
            q.questions
                .into_iter()
                .map(|q| (id_string(&q.question_id), q.question))
                .collect()
        }
        None => HashMap::new(),
    };
    let mut items = Vec::with_capacity(ann.annotations.len());
    let mut skipped = 0usize;
    for a in ann.annotations {
        let question_id = id_string(&a.question_id);
        let answer = a
            .multiple_choice_answer
            .filter(|s| crate::answer::normalize(s).is_ok())
            .or_else(|| majority_answer(&a.answers));
        let Some(answer) = answer else {
            skipped += 1;
            continue;
        };
        items.push(QaItem {
            question_text: texts.get(&question_id).cloned().unwrap_or_default(),
            question_id,
            ground_truth: Label::new(answer)?,
            image_id: id_string(&a.image_id),
        });
    }
    if skipped > 0 {
        warn!(skipped, "skipped VQA annotations without a usable answer");
    }
    Dataset::new(items)
}
