//! JSON-lines persistence for answer-set artifacts.
//!
//! Layout: an optional header line `{"metadata": {...}}`, then one record per
//! label, `{"label": ..., "members": [{"phrase", "score", "sources"}]}`.
//! Scores are written with exactly six decimal places.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::answer::{AnswerSet, Label, ScoredCandidate, Source, DEFAULT_SCORE_FLOOR};
use crate::error::{Error, Result};

/// Self-description of how an artifact was built.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArtifactMetadata {
    pub tool: String,
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// The label itself counts toward `k`.
    pub k_includes_label: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub knn_n: Option<usize>,
    pub sources: Vec<Source>,
    /// Set on per-source artifacts: the union was restricted to this source.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restricted_to: Option<Source>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wordnet: Option<WordnetProvenance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conceptnet: Option<ConceptNetProvenance>,
    pub vector_tables: Vec<VectorProvenance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub premises: Option<PremiseProvenance>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WordnetProvenance {
    pub version: String,
    pub hypernym_depth: usize,
    pub parts_of_speech: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConceptNetProvenance {
    pub api_version: String,
    pub relations: Vec<String>,
    pub min_weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VectorProvenance {
    pub source: Option<Source>,
    pub provenance: String,
    pub dim: usize,
    pub entries: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PremiseProvenance {
    pub corpus: String,
    pub max_premises: usize,
    pub order: String,
    pub fallback_template: String,
}

/// A parsed artifact: optional header plus the answer sets in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub metadata: Option<ArtifactMetadata>,
    pub sets: Vec<AnswerSet>,
}

#[derive(Serialize)]
struct HeaderLine<'a> {
    metadata: &'a ArtifactMetadata,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    label: String,
    #[serde(default)]
    label_raw: Option<String>,
    members: Vec<MemberLine>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MemberLine {
    phrase: String,
    score: f64,
    sources: Vec<Source>,
}

/// Serializes one answer set as a single JSON line (no trailing newline).
pub fn encode_set(set: &AnswerSet) -> String {
    let json = |s: &str| serde_json::to_string(s).expect("string serialization is infallible");
    let mut line = String::with_capacity(64 + set.len() * 64);
    line.push_str("{\"label\":");
    line.push_str(&json(set.label().normalized()));
    if set.label().raw() != set.label().normalized() {
        line.push_str(",\"label_raw\":");
        line.push_str(&json(set.label().raw()));
    }
    line.push_str(",\"members\":[");
    for (i, member) in set.members().iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        line.push_str("{\"phrase\":");
        line.push_str(&json(&member.phrase));
        line.push_str(&format!(",\"score\":{:.6},\"sources\":[", member.score));
        let tags: Vec<String> = member.sources.iter().map(|s| json(s.tag())).collect();
        line.push_str(&tags.join(","));
        line.push_str("]}");
    }
    line.push_str("]}");
    line
}

/// Renders a full artifact to bytes.
pub fn encode_artifact(metadata: Option<&ArtifactMetadata>, sets: &[AnswerSet]) -> Vec<u8> {
    let mut out = Vec::new();
    if let Some(metadata) = metadata {
        let header = serde_json::to_string(&HeaderLine { metadata })
            .expect("metadata serialization is infallible");
        out.extend_from_slice(header.as_bytes());
        out.push(b'\n');
    }
    for set in sets {
        out.extend_from_slice(encode_set(set).as_bytes());
        out.push(b'\n');
    }
    out
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.flush().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_aas_file(sets: &[AnswerSet], path: &Path) -> Result<()> {
    write_atomic(path, &encode_artifact(None, sets))
}

pub fn write_artifact(path: &Path, metadata: &ArtifactMetadata, sets: &[AnswerSet]) -> Result<()> {
    write_atomic(path, &encode_artifact(Some(metadata), sets))
}

pub fn read_aas_file(path: &Path) -> Result<Vec<AnswerSet>> {
    Ok(read_artifact(path)?.sets)
}

pub fn read_artifact(path: &Path) -> Result<Artifact> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut metadata = None;
    let mut sets = Vec::new();
    let mut labels = BTreeSet::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if line_no == 1 && line.trim_start().starts_with("{\"metadata\"") {
            let value: serde_json::Value = serde_json::from_str(&line)
                .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
            let meta = serde_json::from_value(value["metadata"].clone())
                .map_err(|e| Error::parse(path, line_no, format!("bad metadata: {e}")))?;
            metadata = Some(meta);
            continue;
        }
        let record: RecordLine =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, line_no, e.to_string()))?;
        let floor = metadata
            .as_ref()
            .and_then(|m: &ArtifactMetadata| m.threshold)
            .map_or(DEFAULT_SCORE_FLOOR, |t| t.min(DEFAULT_SCORE_FLOOR));
        let set = decode_record(record, floor)?;
        if !labels.insert(set.label().normalized().to_string()) {
            return Err(Error::Integrity {
                label: set.label().normalized().to_string(),
                message: format!("label appears twice (line {line_no})"),
            });
        }
        sets.push(set);
    }
    Ok(Artifact { metadata, sets })
}

fn decode_record(record: RecordLine, floor: f64) -> Result<AnswerSet> {
    let raw = record.label_raw.unwrap_or_else(|| record.label.clone());
    let label = Label::new(raw).map_err(|_| Error::Integrity {
        label: record.label.clone(),
        message: "label is empty after normalization".into(),
    })?;
    if label.normalized() != record.label {
        return Err(Error::Integrity {
            label: record.label,
            message: "label field is not in normalized form".into(),
        });
    }
    let members = record
        .members
        .into_iter()
        .map(|m| ScoredCandidate::new(m.phrase, m.score, m.sources.into_iter().collect()))
        .collect();
    AnswerSet::with_floor(label, members, floor)
}
