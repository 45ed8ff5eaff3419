//! Reader for the WordNet 3.x flat-file database (`index.*` / `data.*`) and
//! the synonym/hypernym candidate generator built on it.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::answer::{normalize, Label};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartOfSpeech {
    Noun,
    Verb,
    Adjective,
    Adverb,
}

impl PartOfSpeech {
    pub const ALL: [PartOfSpeech; 4] = [
        PartOfSpeech::Noun,
        PartOfSpeech::Verb,
        PartOfSpeech::Adjective,
        PartOfSpeech::Adverb,
    ];

    fn file_suffix(self) -> &'static str {
        match self {
            PartOfSpeech::Noun => "noun",
            PartOfSpeech::Verb => "verb",
            PartOfSpeech::Adjective => "adj",
            PartOfSpeech::Adverb => "adv",
        }
    }

    fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "n" => Some(PartOfSpeech::Noun),
            "v" => Some(PartOfSpeech::Verb),
            "a" | "s" => Some(PartOfSpeech::Adjective),
            "r" => Some(PartOfSpeech::Adverb),
            _ => None,
        }
    }
}

impl fmt::Display for PartOfSpeech {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_suffix())
    }
}

/// One synset line of a `data.*` file.
#[derive(Debug, Clone, PartialEq)]
pub struct SynsetEntry {
    pub offset: u64,
    pub pos: PartOfSpeech,
    /// Lemmas as stored (underscores, original case, adjective markers removed).
    pub lemmas: Vec<String>,
    pub hypernym_offsets: Vec<u64>,
}

impl SynsetEntry {
    /// Lemmas as candidate phrases: underscores become spaces, then normalized.
    pub fn phrases(&self) -> impl Iterator<Item = String> + '_ {
        self.lemmas
            .iter()
            .filter_map(|l| normalize(&l.replace('_', " ")).ok())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordnetConfig {
    /// How many hypernym levels above each sense contribute lemmas.
    pub hypernym_depth: usize,
    /// Databases consulted for candidates (all loaded databases are indexed).
    pub parts_of_speech: Vec<PartOfSpeech>,
}

impl Default for WordnetConfig {
    fn default() -> Self {
        Self {
            hypernym_depth: 2,
            parts_of_speech: vec![PartOfSpeech::Noun, PartOfSpeech::Adjective],
        }
    }
}

/// Parsed WordNet database. Immutable after load.
#[derive(Debug, Clone, PartialEq)]
pub struct WordnetIndex {
    synsets: HashMap<(PartOfSpeech, u64), SynsetEntry>,
    senses: HashMap<(PartOfSpeech, String), Vec<u64>>,
    loaded: Vec<PartOfSpeech>,
    version: String,
}

impl WordnetIndex {
    pub fn len(&self) -> usize {
        self.synsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synsets.is_empty()
    }

    /// Version string found in the license header, or `"unknown"`.
    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn parts_of_speech(&self) -> &[PartOfSpeech] {
        &self.loaded
    }

    pub fn synset(&self, pos: PartOfSpeech, offset: u64) -> Option<&SynsetEntry> {
        self.synsets.get(&(pos, offset))
    }

    /// Synsets containing `lemma` (spaces or underscores, any case), in
    /// index sense order.
    pub fn synsets_for(&self, lemma: &str, pos: PartOfSpeech) -> Vec<&SynsetEntry> {
        let key = lemma.trim().to_lowercase().replace(' ', "_");
        self.senses
            .get(&(pos, key))
            .map(|offsets| {
                offsets
                    .iter()
                    .filter_map(|&o| self.synsets.get(&(pos, o)))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Iterates every synset (unordered).
    pub fn iter(&self) -> impl Iterator<Item = &SynsetEntry> {
        self.synsets.values()
    }

    /// Synonym and hypernym candidates for `label`: co-lemmas of every sense
    /// of the label, followed by the lemmas of hypernyms up to
    /// `config.hypernym_depth` levels, breadth first. Senses are visited in
    /// database order, then index sense order. The label is excluded and
    /// duplicates keep their first position.
    pub fn candidates(&self, label: &Label, config: &WordnetConfig) -> Vec<String> {
        let query = label.normalized();
        let mut seen: HashSet<String> = HashSet::from([query.to_string()]);
        let mut out = Vec::new();
        let mut push = |phrase: String, out: &mut Vec<String>| {
            if seen.insert(phrase.clone()) {
                out.push(phrase);
            }
        };
        for &pos in &config.parts_of_speech {
            for sense in self.synsets_for(query, pos) {
                for phrase in sense.phrases() {
                    push(phrase, &mut out);
                }
                let mut visited = HashSet::from([sense.offset]);
                let mut frontier: VecDeque<(u64, usize)> =
                    sense.hypernym_offsets.iter().map(|&o| (o, 1)).collect();
                while let Some((offset, depth)) = frontier.pop_front() {
                    if depth > config.hypernym_depth || !visited.insert(offset) {
                        continue;
                    }
                    // Excerpts may reference synsets they do not contain.
                    let Some(hyper) = self.synsets.get(&(pos, offset)) else {
                        continue;
                    };
                    for phrase in hyper.phrases() {
                        push(phrase, &mut out);
                    }
                    frontier.extend(hyper.hypernym_offsets.iter().map(|&o| (o, depth + 1)));
                }
            }
        }
        out
    }
}

/// Convenience wrapper over [`WordnetIndex::candidates`].
pub fn wordnet_candidates(
    index: &WordnetIndex,
    label: &Label,
    config: &WordnetConfig,
) -> Vec<String> {
    index.candidates(label, config)
}

fn is_header(line: &str) -> bool {
    line.starts_with("  ")
}

fn detect_version(header: &str) -> Option<String> {
    let at = header.find("WordNet ")?;
    let rest = &header[at + "WordNet ".len()..];
    let version: String = rest
        .chars()
        .take_while(|c| c.is_ascii_digit() || *c == '.')
        .collect();
    let version = version.trim_end_matches('.');
    (!version.is_empty() && version.contains('.')).then(|| version.to_string())
}

struct Fields<'a> {
    iter: std::str::SplitAsciiWhitespace<'a>,
    path: &'a Path,
    line: usize,
}

impl<'a> Fields<'a> {
    fn next(&mut self, what: &str) -> Result<&'a str> {
        self.iter
            .next()
            .ok_or_else(|| Error::parse(self.path, self.line, format!("missing {what}")))
    }

    fn number(&mut self, what: &str, radix: u32) -> Result<u64> {
        let field = self.next(what)?;
        u64::from_str_radix(field, radix)
            .map_err(|_| Error::parse(self.path, self.line, format!("bad {what} {field:?}")))
    }
}

/// Strips the `(a)`, `(p)`, `(ip)` syntactic markers from adjective lemmas.
fn strip_adjective_marker(lemma: &str) -> &str {
    match lemma.find('(') {
        Some(i) if lemma.ends_with(')') => &lemma[..i],
        _ => lemma,
    }
}

fn parse_data_line(line: &str, path: &Path, line_no: usize) -> Result<SynsetEntry> {
    let body = line.split(" | ").next().unwrap_or(line);
    let mut f = Fields {
        iter: body.split_ascii_whitespace(),
        path,
        line: line_no,
    };
    let offset = f.number("synset offset", 10)?;
    f.next("lexicographer file number")?;
    let ss_type = f.next("synset type")?;
    let pos = PartOfSpeech::from_tag(ss_type)
        .ok_or_else(|| Error::parse(path, line_no, format!("bad synset type {ss_type:?}")))?;
    let word_count = f.number("word count", 16)?;
    if word_count == 0 {
        return Err(Error::parse(path, line_no, "synset has no lemmas"));
    }
    let mut lemmas = Vec::with_capacity(word_count as usize);
    for _ in 0..word_count {
        let word = f.next("lemma")?;
        f.number("lex id", 16)?;
        lemmas.push(strip_adjective_marker(word).to_string());
    }
    let pointer_count = f.number("pointer count", 10)?;
    let mut hypernym_offsets = Vec::new();
    for _ in 0..pointer_count {
        let symbol = f.next("pointer symbol")?;
        let target = f.number("pointer offset", 10)?;
        let target_pos = f.next("pointer part of speech")?;
        if PartOfSpeech::from_tag(target_pos).is_none() {
            return Err(Error::parse(
                path,
                line_no,
                format!("bad pointer part of speech {target_pos:?}"),
            ));
        }
        let source_target = f.next("pointer source/target")?;
        if source_target.len() != 4 || u16::from_str_radix(source_target, 16).is_err() {
            return Err(Error::parse(
                path,
                line_no,
                format!("bad pointer source/target {source_target:?}"),
            ));
        }
        if symbol == "@" || symbol == "@i" {
            hypernym_offsets.push(target);
        }
    }
    Ok(SynsetEntry {
        offset,
        pos,
        lemmas,
        hypernym_offsets,
    })
}

fn parse_index_line(line: &str, path: &Path, line_no: usize) -> Result<(String, Vec<u64>)> {
    let mut f = Fields {
        iter: line.split_ascii_whitespace(),
        path,
        line: line_no,
    };
    let lemma = f.next("lemma")?.to_lowercase();
    f.next("part of speech")?;
    let synset_count = f.number("synset count", 10)?;
    let pointer_count = f.number("pointer count", 10)?;
    for _ in 0..pointer_count {
        f.next("pointer symbol")?;
    }
    f.number("sense count", 10)?;
    f.number("tagged sense count", 10)?;
    let offsets = (0..synset_count)
        .map(|_| f.number("synset offset", 10))
        .collect::<Result<Vec<_>>>()?;
    Ok((lemma, offsets))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Loads every part of speech present in `dir`. The noun database
/// (`index.noun` and `data.noun`) is required; any other database must
/// have both of its files when either is present.
pub fn load_wordnet(dir: &Path) -> Result<WordnetIndex> {
    let file = |kind: &str, pos: PartOfSpeech| -> PathBuf { dir.join(format!("{kind}.{pos}")) };
    let mut synsets = HashMap::new();
    let mut senses = HashMap::new();
    let mut loaded = Vec::new();
    let mut version = None;
    for pos in PartOfSpeech::ALL {
        let (index_path, data_path) = (file("index", pos), file("data", pos));
        match (index_path.is_file(), data_path.is_file()) {
            (true, true) => {}
            (false, false) if pos != PartOfSpeech::Noun => continue,
            _ => {
                let missing = if index_path.is_file() {
                    &data_path
                } else {
                    &index_path
                };
                return Err(Error::MissingResource(format!(
                    "WordNet file {} not found",
                    missing.display()
                )));
            }
        }
        let data = read(&data_path)?;
        for (i, line) in data.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            if is_header(line) {
                if version.is_none() {
                    version = detect_version(line);
                }
                continue;
            }
            let entry = parse_data_line(line, &data_path, i + 1)?;
            synsets.insert((pos, entry.offset), entry);
        }
        let index = read(&index_path)?;
        for (i, line) in index.lines().enumerate() {
            if line.trim().is_empty() || is_header(line) {
                continue;
            }
            let (lemma, offsets) = parse_index_line(line, &index_path, i + 1)?;
            senses.insert((pos, lemma), offsets);
        }
        loaded.push(pos);
    }
    Ok(WordnetIndex {
        synsets,
        senses,
        loaded,
        version: version.unwrap_or_else(|| "unknown".to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const NOUN_DATA: &str = "  1 header WordNet 3.0 Copyright 2006 by Princeton University.  \n\
00000100 18 n 02 batter 0 hitter 0 001 @ 00000200 n 0000 | one who bats  \n\
00000200 18 n 02 ballplayer 0 baseball_player 0 001 @ 00000300 n 0000 | a player  \n\
00000300 18 n 01 athlete 0 001 @ 00000400 n 0000 | sporty  \n\
00000400 18 n 01 contestant 0 000 | competes  \n";
    const NOUN_INDEX: &str = "  1 header\n\
batter n 1 1 @ 1 0 00000100  \n\
athlete n 1 1 @ 1 0 00000300  \n";

    fn write_db(files: &[(&str, &str)]) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for (name, body) in files {
            fs::write(dir.path().join(name), body).unwrap();
        }
        dir
    }

    #[test]
    fn hypernym_depth_bounds_traversal() {
        let dir = write_db(&[("data.noun", NOUN_DATA), ("index.noun", NOUN_INDEX)]);
        let index = load_wordnet(dir.path()).unwrap();
        assert_eq!(index.len(), 4);
        assert_eq!(index.version(), "3.0");
        let label = Label::new("batter").unwrap();
        let mut config = WordnetConfig {
            hypernym_depth: 1,
            ..Default::default()
        };
        assert_eq!(
            index.candidates(&label, &config),
            ["hitter", "ballplayer", "baseball player"]
        );
        config.hypernym_depth = 2;
        assert_eq!(
            index.candidates(&label, &config),
            ["hitter", "ballplayer", "baseball player", "athlete"]
        );
        config.hypernym_depth = 0;
        assert_eq!(index.candidates(&label, &config), ["hitter"]);
    }

    #[test]
    fn missing_noun_files() {
        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_wordnet(empty.path()),
            Err(Error::MissingResource(_))
        ));
        let half = write_db(&[
            ("data.noun", NOUN_DATA),
            ("index.noun", NOUN_INDEX),
            ("index.verb", ""),
        ]);
        assert!(matches!(
            load_wordnet(half.path()),
            Err(Error::MissingResource(_))
        ));
    }

    #[test]
    fn malformed_pointer_reports_file_and_line() {
        let bad = NOUN_DATA.replace("@ 00000300 n 0000", "@ 00000300 q 0000");
        let dir = write_db(&[("data.noun", &bad), ("index.noun", NOUN_INDEX)]);
        match load_wordnet(dir.path()) {
            Err(Error::Parse { path, line, .. }) => {
                assert!(path.ends_with("data.noun"));
                assert_eq!(line, 3);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        let truncated = NOUN_DATA.replace("001 @ 00000200 n 0000", "002 @ 00000200 n 0000");
        let dir = write_db(&[("data.noun", &truncated), ("index.noun", NOUN_INDEX)]);
        assert!(matches!(
            load_wordnet(dir.path()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn adjective_markers_are_stripped() {
        let line = "00000500 00 s 02 red(a) 0 ruddy(p) 0 000 | colour  ";
        let entry = parse_data_line(line, Path::new("data.adj"), 1).unwrap();
        assert_eq!(entry.lemmas, ["red", "ruddy"]);
        assert_eq!(entry.pos, PartOfSpeech::Adjective);
    }

    #[test]
    fn unknown_label_yields_nothing() {
        let dir = write_db(&[("data.noun", NOUN_DATA), ("index.noun", NOUN_INDEX)]);
        let index = load_wordnet(dir.path()).unwrap();
        let label = Label::new("zzzz-nonword").unwrap();
        assert!(index
            .candidates(&label, &WordnetConfig::default())
            .is_empty());
    }
}
