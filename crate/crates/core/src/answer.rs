//! Answer strings, labels, and alternative answer sets.
//!
//! Every comparison between two answer strings in this crate goes through
//! [`normalize`]; nothing compares raw strings directly.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Characters removed from both ends of an answer.
const EDGE_PUNCTUATION: [char; 4] = ['.', ',', '!', '?'];

/// Lower bound on alternative member scores in a built answer set.
pub const DEFAULT_SCORE_FLOOR: f64 = 0.5;

/// Canonical form of an answer string: lowercase, trimmed, single-spaced,
/// with `. , ! ?` stripped from both ends.
pub fn normalize(raw: &str) -> Result<String> {
    let lowered = raw.to_lowercase();
    let trimmed =
        lowered.trim_matches(|c: char| c.is_whitespace() || EDGE_PUNCTUATION.contains(&c));
    let collapsed = trimmed.split_whitespace().collect::<Vec<_>>().join(" ");
    if collapsed.is_empty() {
        return Err(Error::UnusableAnswer(raw.to_string()));
    }
    Ok(collapsed)
}

/// A ground-truth answer in both its original and canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Label {
    raw: String,
    normalized: String,
}

impl Label {
    pub fn new(raw: impl Into<String>) -> Result<Self> {
        let raw = raw.into();
        let normalized = normalize(&raw)?;
        Ok(Self { raw, normalized })
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn normalized(&self) -> &str {
        &self.normalized
    }

    pub fn as_str(&self) -> &str {
        &self.normalized
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.normalized)
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        self.normalized
            .cmp(&other.normalized)
            .then_with(|| self.raw.cmp(&other.raw))
    }
}

/// Where a candidate phrase came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "wordnet")]
    WordNet,
    #[serde(rename = "conceptnet")]
    ConceptNet,
    #[serde(rename = "bert-vec")]
    BertVec,
    #[serde(rename = "counterfit-vec")]
    CounterfitVec,
    #[serde(rename = "groundtruth")]
    GroundTruth,
}

impl Source {
    /// The four candidate generators, in union order.
    pub const CANDIDATE_SOURCES: [Source; 4] = [
        Source::WordNet,
        Source::ConceptNet,
        Source::BertVec,
        Source::CounterfitVec,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Source::WordNet => "wordnet",
            Source::ConceptNet => "conceptnet",
            Source::BertVec => "bert-vec",
            Source::CounterfitVec => "counterfit-vec",
            Source::GroundTruth => "groundtruth",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "wordnet" => Ok(Source::WordNet),
            "conceptnet" => Ok(Source::ConceptNet),
            "bert-vec" => Ok(Source::BertVec),
            "counterfit-vec" => Ok(Source::CounterfitVec),
            "groundtruth" => Ok(Source::GroundTruth),
            other => Err(Error::Config(format!("unknown source tag {other:?}"))),
        }
    }
}

/// Parses a comma-separated source list such as `wordnet,bert-vec`.
pub fn parse_source_list(list: &str) -> Result<BTreeSet<Source>> {
    let mut sources = BTreeSet::new();
    for part in list.split(',').filter(|p| !p.trim().is_empty()) {
        let source: Source = part.parse()?;
        if source == Source::GroundTruth {
            return Err(Error::Config(
                "groundtruth is not a candidate source".to_string(),
            ));
        }
        sources.insert(source);
    }
    if sources.is_empty() {
        return Err(Error::Config("no candidate sources enabled".to_string()));
    }
    Ok(sources)
}

/// Rounds a score to the six decimal places used by the artifact format.
pub fn quantize_score(score: f64) -> f64 {
    (score * 1e6).round() / 1e6
}

/// One member of an answer set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate {
    pub phrase: String,
    pub score: f64,
    pub sources: BTreeSet<Source>,
}

impl ScoredCandidate {
    pub fn new(phrase: impl Into<String>, score: f64, sources: BTreeSet<Source>) -> Self {
        Self {
            phrase: phrase.into(),
            score,
            sources,
        }
    }

    fn ground_truth(phrase: &str) -> Self {
        Self::new(phrase, 1.0, BTreeSet::from([Source::GroundTruth]))
    }
}

fn member_order(a: &ScoredCandidate, b: &ScoredCandidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.phrase.cmp(&b.phrase))
}

/// The alternative answer set of one label: members ranked by semantic
/// score, with the label itself present at score 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct AnswerSet {
    label: Label,
    members: Vec<ScoredCandidate>,
}

impl AnswerSet {
    /// Validates `members` against every answer-set invariant using the
    /// default 0.5 score floor.
    pub fn new(label: Label, members: Vec<ScoredCandidate>) -> Result<Self> {
        Self::with_floor(label, members, DEFAULT_SCORE_FLOOR)
    }

    /// Like [`AnswerSet::new`] but with an explicit lower bound for
    /// alternative scores (artifacts built with a non-default threshold).
    pub fn with_floor(label: Label, members: Vec<ScoredCandidate>, floor: f64) -> Result<Self> {
        let fail = |message: String| Error::Integrity {
            label: label.normalized().to_string(),
            message,
        };
        let floor = quantize_score(floor);
        let mut seen = BTreeSet::new();
        let mut has_label = false;
        for member in &members {
            match normalize(&member.phrase) {
                Ok(n) if n == member.phrase => {}
                _ => {
                    return Err(fail(format!(
                        "phrase {:?} is not normalized",
                        member.phrase
                    )))
                }
            }
            if !seen.insert(member.phrase.as_str()) {
                return Err(fail(format!("duplicate phrase {:?}", member.phrase)));
            }
            if !(0.0..=1.0).contains(&member.score) {
                return Err(fail(format!(
                    "score {} of {:?} is outside [0, 1]",
                    member.score, member.phrase
                )));
            }
            if member.sources.is_empty() {
                return Err(fail(format!("{:?} has no sources", member.phrase)));
            }
            if member.phrase == label.normalized() {
                if member.score != 1.0 {
                    return Err(fail(format!(
                        "label scored {} instead of 1.0",
                        member.score
                    )));
                }
                if member.sources != BTreeSet::from([Source::GroundTruth]) {
                    return Err(fail(
                        "label member must carry only the groundtruth source".into(),
                    ));
                }
                has_label = true;
            } else {
                if member.sources.contains(&Source::GroundTruth) {
                    return Err(fail(format!(
                        "{:?} is tagged groundtruth but is not the label",
                        member.phrase
                    )));
                }
                if member.score < floor {
                    return Err(fail(format!(
                        "{:?} scored {} below the floor {floor}",
                        member.phrase, member.score
                    )));
                }
            }
        }
        if !has_label {
            return Err(fail("label is not a member".into()));
        }
        if members
            .windows(2)
            .any(|w| member_order(&w[0], &w[1]) != Ordering::Less)
        {
            return Err(fail("members are not sorted by score then phrase".into()));
        }
        Ok(Self { label, members })
    }

    /// Builds a set from scored alternatives: scores are quantized, the
    /// label is inserted at 1.0, members are ranked, and the result is cut
    /// to `k` members (label included). Alternatives must already have
    /// passed the threshold.
    pub fn from_alternatives(
        label: Label,
        alternatives: impl IntoIterator<Item = ScoredCandidate>,
        k: usize,
        floor: f64,
    ) -> Result<Self> {
        let mut members = vec![ScoredCandidate::ground_truth(label.normalized())];
        let mut seen = BTreeSet::from([label.normalized().to_string()]);
        for mut alt in alternatives {
            if !seen.insert(alt.phrase.clone()) {
                continue;
            }
            alt.score = quantize_score(alt.score);
            members.push(alt);
        }
        members.sort_by(member_order);
        let set = Self::with_floor(label, members, floor)?;
        Ok(set.truncated(k))
    }

    pub fn label(&self) -> &Label {
        &self.label
    }

    pub fn members(&self) -> &[ScoredCandidate] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Finds the member matching `phrase` after normalization.
    pub fn lookup(&self, phrase: &str) -> Option<&ScoredCandidate> {
        let key = normalize(phrase).ok()?;
        self.members.iter().find(|m| m.phrase == key)
    }

    pub fn contains(&self, phrase: &str) -> bool {
        self.lookup(phrase).is_some()
    }

    /// Members other than the label, in rank order.
    pub fn alternatives(&self) -> impl Iterator<Item = &ScoredCandidate> {
        self.members
            .iter()
            .filter(move |m| m.phrase != self.label.normalized())
    }

    /// Keeps at most `k` members. The label always survives: it is kept
    /// together with the `k - 1` best alternatives, in rank order.
    pub fn truncated(&self, k: usize) -> Self {
        let mut budget = k.saturating_sub(1);
        let members = self
            .members
            .iter()
            .filter(|m| {
                if m.phrase == self.label.normalized() {
                    true
                } else if budget > 0 {
                    budget -= 1;
                    true
                } else {
                    false
                }
            })
            .cloned()
            .collect();
        Self {
            label: self.label.clone(),
            members,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn alt(phrase: &str, score: f64) -> ScoredCandidate {
        ScoredCandidate::new(phrase, score, BTreeSet::from([Source::WordNet]))
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize("  Teddy Bear ").unwrap(), "teddy bear");
        assert_eq!(normalize("batter").unwrap(), "batter");
        assert_eq!(normalize("women.").unwrap(), "women");
        assert_eq!(normalize("Is it?!").unwrap(), "is it");
        assert_eq!(normalize(" teddy \t bear . ").unwrap(), "teddy bear");
    }

    #[test]
    fn normalize_rejects_empty() {
        for raw in ["", "   ", "?!.", " . , "] {
            assert!(matches!(normalize(raw), Err(Error::UnusableAnswer(_))));
        }
    }

    #[test]
    fn from_alternatives_sorts_and_truncates() {
        let label = Label::new("batter").unwrap();
        let alts = (0..10).map(|i| alt(&format!("alt{i}"), 0.9));
        let set = AnswerSet::from_alternatives(label, alts, 6, 0.5).unwrap();
        assert_eq!(set.len(), 6);
        assert_eq!(set.members()[0].phrase, "batter");
        let names: Vec<_> = set.alternatives().map(|m| m.phrase.as_str()).collect();
        assert_eq!(names, ["alt0", "alt1", "alt2", "alt3", "alt4"]);
    }

    #[test]
    fn ties_at_one_never_evict_label() {
        let label = Label::new("zebra").unwrap();
        let alts = ["a", "b", "c"].map(|p| alt(p, 1.0));
        let set = AnswerSet::from_alternatives(label, alts, 2, 0.5).unwrap();
        let names: Vec<_> = set.members().iter().map(|m| m.phrase.as_str()).collect();
        assert_eq!(names, ["a", "zebra"]);
    }

    #[test]
    fn integrity_violations() {
        let label = Label::new("road").unwrap();
        let gt = ScoredCandidate::ground_truth("road");
        let bad_score = AnswerSet::new(label.clone(), vec![gt.clone(), alt("street", 1.2)]);
        assert!(matches!(bad_score, Err(Error::Integrity { .. })));
        let dup = AnswerSet::new(
            label.clone(),
            vec![gt.clone(), alt("street", 0.8), alt("street", 0.8)],
        );
        assert!(matches!(dup, Err(Error::Integrity { .. })));
        let unsorted = AnswerSet::new(label.clone(), vec![alt("street", 0.6), gt.clone()]);
        assert!(matches!(unsorted, Err(Error::Integrity { .. })));
        let low = AnswerSet::new(label.clone(), vec![gt.clone(), alt("street", 0.4)]);
        assert!(matches!(low, Err(Error::Integrity { .. })));
        let missing = AnswerSet::new(label, vec![alt("street", 0.6)]);
        assert!(matches!(missing, Err(Error::Integrity { label, .. }) if label == "road"));
    }

    #[test]
    fn lookup_normalizes() {
        let label = Label::new("road").unwrap();
        let set = AnswerSet::from_alternatives(label, [alt("street", 0.7)], 6, 0.5).unwrap();
        assert_eq!(set.lookup("  Street!").unwrap().score, 0.7);
        assert!(set.lookup("zebra").is_none());
        assert!(set.lookup("???").is_none());
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC*") {
            if let Ok(once) = normalize(&s) {
                prop_assert_eq!(normalize(&once).unwrap(), once);
            }
        }

        #[test]
        fn normalize_is_idempotent_on_ascii_noise(s in "[ a-zA-Z.,!?\\t]{0,24}") {
            if let Ok(once) = normalize(&s) {
                prop_assert_eq!(normalize(&once).unwrap(), once);
            }
        }

        #[test]
        fn lookup_agrees_with_membership(
            phrases in proptest::collection::btree_set("[a-z]{1,6}", 0..8),
            probe in "[ A-Za-z]{1,8}",
        ) {
            let label = Label::new("label").unwrap();
            let alts = phrases.iter().map(|p| alt(p, 0.75));
            let set = AnswerSet::from_alternatives(label, alts, 10, 0.5).unwrap();
            let member = normalize(&probe)
                .ok()
                .map(|n| set.members().iter().any(|m| m.phrase == n))
                .unwrap_or(false);
            prop_assert_eq!(set.lookup(&probe).is_some(), member);
        }

        #[test]
        fn truncation_is_nested(k in 1usize..12) {
            let label = Label::new("m").unwrap();
            let alts = (0..10).map(|i| alt(&format!("p{i}"), 0.5 + i as f64 / 40.0));
            let full = AnswerSet::from_alternatives(label, alts, 10, 0.5).unwrap();
            let small = full.truncated(k);
            let larger = full.truncated(k + 1);
            prop_assert!(small.len() <= k.max(1));
            prop_assert!(small.contains("m"));
            for m in small.members() {
                prop_assert!(larger.contains(&m.phrase));
            }
        }
    }
}
