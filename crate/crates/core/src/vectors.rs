//! Word-vector tables and exact cosine nearest-neighbour search.
//!
//! Text format: one entry per line, `token f1 f2 ... fd`, separated by
//! whitespace. A leading `count dim` header line is detected and skipped.
//! Underscores inside tokens denote spaces in multi-word phrases.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use tracing::warn;

use crate::answer::{normalize, Label, Source};
use crate::error::{Error, Result};

/// Dense vectors keyed by normalized phrase. Rows are stored contiguously.
#[derive(Debug, Clone)]
pub struct VectorTable {
    dim: usize,
    source: Source,
    phrases: Vec<String>,
    rows: Vec<f32>,
    norms: Vec<f64>,
    lookup: HashMap<String, usize>,
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

fn norm(v: &[f32]) -> f64 {
    dot(v, v).sqrt()
}

impl VectorTable {
    /// Builds a table from `(phrase, vector)` pairs; later duplicates win.
    pub fn from_entries(
        source: Source,
        entries: impl IntoIterator<Item = (String, Vec<f32>)>,
    ) -> Result<Self> {
        let mut table: Option<Self> = None;
        for (i, (phrase, vector)) in entries.into_iter().enumerate() {
            let t = table.get_or_insert_with(|| Self::empty(source, vector.len()));
            t.insert(phrase, vector)
                .map_err(|message| Error::Format(format!("entry {}: {message}", i + 1)))?;
        }
        table.ok_or_else(|| Error::Format("vector table has no entries".into()))
    }

    fn empty(source: Source, dim: usize) -> Self {
        Self {
            dim,
            source,
            phrases: Vec::new(),
            rows: Vec::new(),
            norms: Vec::new(),
            lookup: HashMap::new(),
        }
    }

    /// Returns `Ok(true)` if an existing entry was replaced.
    fn insert(&mut self, phrase: String, vector: Vec<f32>) -> std::result::Result<bool, String> {
        if vector.len() != self.dim {
            return Err(format!(
                "dimension {} does not match table dimension {}",
                vector.len(),
                self.dim
            ));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err("non-finite component".into());
        }
        let n = norm(&vector);
        if n == 0.0 {
            return Err(format!("zero vector for {phrase:?}"));
        }
        let phrase = normalize(&phrase.replace('_', " ")).map_err(|e| e.to_string())?;
        if let Some(&row) = self.lookup.get(&phrase) {
            self.rows[row * self.dim..(row + 1) * self.dim].copy_from_slice(&vector);
            self.norms[row] = n;
            return Ok(true);
        }
        self.lookup.insert(phrase.clone(), self.phrases.len());
        self.phrases.push(phrase);
        self.rows.extend_from_slice(&vector);
        self.norms.push(n);
        Ok(false)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }

    pub fn get(&self, phrase: &str) -> Option<&[f32]> {
        let row = *self.lookup.get(phrase)?;
        Some(self.row(row))
    }

    fn row(&self, row: usize) -> &[f32] {
        &self.rows[row * self.dim..(row + 1) * self.dim]
    }

    /// The stored vector of `phrase`, or else the mean of the vectors of its
    /// in-vocabulary tokens. `None` when no token is known or the mean
    /// vanishes.
    pub fn phrase_vector(&self, phrase: &str) -> Option<Vec<f32>> {
        let phrase = normalize(phrase).ok()?;
        if let Some(v) = self.get(&phrase) {
            return Some(v.to_vec());
        }
        let known: Vec<&[f32]> = phrase
            .split(' ')
            .filter_map(|token| self.get(token))
            .collect();
        if known.is_empty() {
            return None;
        }
        let mut mean = vec![0f64; self.dim];
        for v in &known {
            for (m, &x) in mean.iter_mut().zip(v.iter()) {
                *m += x as f64;
            }
        }
        let mean: Vec<f32> = mean
            .iter()
            .map(|m| (m / known.len() as f64) as f32)
            .collect();
        (norm(&mean) > 0.0).then_some(mean)
    }

    /// Cosine similarity between `query` and every row, in row order.
    fn similarities(&self, query: &[f32]) -> Vec<f64> {
        let query_norm = norm(query);
        (0..self.len())
            .into_par_iter()
            .map(|row| dot(self.row(row), query) / (self.norms[row] * query_norm))
            .collect()
    }

    /// The `n` entries most cosine-similar to the label's vector, excluding
    /// the label. Ties are broken by phrase. Empty if the label has no vector.
    pub fn knn_candidates(&self, label: &Label, n: usize) -> Vec<String> {
        let Some(query) = self.phrase_vector(label.normalized()) else {
            return Vec::new();
        };
        let sims = self.similarities(&query);
        let mut ranked: Vec<(f64, &str)> = sims
            .into_iter()
            .zip(self.phrases.iter().map(String::as_str))
            .filter(|(_, p)| *p != label.normalized())
            .collect();
        // Similarities are finite; partial_cmp also equates -0.0 and 0.0.
        let by_rank = |a: &(f64, &str), b: &(f64, &str)| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.1.cmp(b.1))
        };
        if ranked.len() > n && n > 0 {
            ranked.select_nth_unstable_by(n - 1, by_rank);
            ranked.truncate(n);
        }
        ranked.sort_by(by_rank);
        ranked.truncate(n);
        ranked.into_iter().map(|(_, p)| p.to_string()).collect()
    }
}

/// Loads a text vector file.
pub fn load_vectors(path: &Path, source: Source) -> Result<VectorTable> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut table: Option<VectorTable> = None;
    let mut duplicates = 0usize;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else {
            continue;
        };
        let rest: Vec<&str> = fields.collect();
        if line_no == 1
            && rest.len() == 1
            && token.parse::<u64>().is_ok()
            && rest[0].parse::<u64>().is_ok()
        {
            continue;
        }
        let vector = rest
            .iter()
            .map(|x| x.parse::<f32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(path, line_no, format!("bad component: {e}")))?;
        if vector.is_empty() {
            return Err(Error::parse(path, line_no, "line has no components"));
        }
        let t = table.get_or_insert_with(|| VectorTable::empty(source, vector.len()));
        match t.insert(token.to_string(), vector) {
            Ok(true) => {
                duplicates += 1;
                warn!(path = %path.display(), line = line_no, token, "duplicate token, last occurrence wins");
            }
            Ok(false) => {}
            Err(message) => return Err(Error::parse(path, line_no, message)),
        }
    }
    if duplicates > 0 {
        warn!(path = %path.display(), duplicates, "vector file contained duplicate tokens");
    }
    table.ok_or_else(|| Error::parse(path, 0, "vector file has no entries"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn load(text: &str) -> Result<VectorTable> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        fs::write(&path, text).unwrap();
        load_vectors(&path, Source::CounterfitVec)
    }

    fn label(s: &str) -> Label {
        Label::new(s).unwrap()
    }

    #[test]
    fn loads_small_table() {
        let t = load("batter 1 0 0 0\nhitter 0.9 0.1 0 0\nroad 0 0 1 0\n").unwrap();
        assert_eq!((t.dim(), t.len()), (4, 3));
        assert_eq!(t.get("batter").unwrap(), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn header_line_is_skipped() {
        let t = load("2 3\na 1 0 0\nb 0 1 0\n").unwrap();
        assert_eq!((t.dim(), t.len()), (3, 2));
    }

    #[test]
    fn mixed_dimensions_rejected_with_line() {
        let err = load("a 1 0 0 0\nb 1 0 0 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn zero_vector_rejected() {
        let err = load("a 1 0\nb 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn duplicate_token_last_wins() {
        let t = load("a 1 0\nb 0 1\na 0.5 0.5\n").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("a").unwrap(), [0.5, 0.5]);
    }

    #[test]
    fn phrase_vector_rules() {
        let t = load("teddy 1 0 2\nbear 3 2 0\nteddy_bear_toy 1 1 1\n").unwrap();
        assert_eq!(t.phrase_vector("teddy").unwrap(), [1.0, 0.0, 2.0]);
        assert_eq!(t.phrase_vector("Teddy Bear").unwrap(), [2.0, 1.0, 1.0]);
        assert_eq!(t.phrase_vector("teddy bear toy").unwrap(), [1.0, 1.0, 1.0]);
        assert!(t.phrase_vector("qqq zzz").is_none());
    }

    #[test]
    fn identical_vectors_are_nearest() {
        let t = load("a 1 2 3\nb 1 2 3\nc 3 2 1\n").unwrap();
        assert_eq!(t.knn_candidates(&label("a"), 1), ["b"]);
    }

    #[test]
    fn absent_label_gives_nothing() {
        let t = load("a 1 2 3\n").unwrap();
        assert!(t.knn_candidates(&label("zzz"), 5).is_empty());
    }

    fn brute_force(entries: &[(String, Vec<f32>)], query: &str, n: usize) -> Vec<String> {
        let q = &entries.iter().rev().find(|(p, _)| p == query).unwrap().1;
        let cos = |v: &[f32]| {
            let d: f64 = v.iter().zip(q).map(|(a, b)| *a as f64 * *b as f64).sum();
            let nv: f64 = v.iter().map(|a| (*a as f64).powi(2)).sum::<f64>().sqrt();
            let nq: f64 = q.iter().map(|a| (*a as f64).powi(2)).sum::<f64>().sqrt();
            d / (nv * nq)
        };
        let mut last: HashMap<&str, &Vec<f32>> = HashMap::new();
        for (p, v) in entries {
            last.insert(p, v);
        }
        let mut all: Vec<(f64, &str)> = last
            .into_iter()
            .filter(|(p, _)| *p != query)
            .map(|(p, v)| (cos(v), p))
            .collect();
        all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(b.1)));
        all.into_iter()
            .take(n)
            .map(|(_, p)| p.to_string())
            .collect()
    }

    fn arb_entries() -> impl Strategy<Value = Vec<(String, Vec<f32>)>> {
        (1usize..6).prop_flat_map(|dim| {
            proptest::collection::vec(
                (
                    "[a-h]{1,2}",
                    proptest::collection::vec(
                        prop_oneof![Just(0f32), Just(1f32), -3f32..3f32],
                        dim,
                    )
                    .prop_filter("non-zero", |v| v.iter().any(|x| *x != 0.0)),
                ),
                2..40,
            )
        })
    }

    proptest! {
        #[test]
        fn knn_matches_exhaustive_scan(entries in arb_entries(), n in 1usize..8, pick in any::<prop::sample::Index>()) {
            let table = VectorTable::from_entries(Source::BertVec, entries.clone()).unwrap();
            let query = pick.get(&entries).0.clone();
            let got = table.knn_candidates(&label(&query), n);
            prop_assert_eq!(&got, &brute_force(&entries, &query, n));
            prop_assert_eq!(got.len(), n.min(table.len() - 1));
        }

        #[test]
        fn knn_is_scale_invariant(entries in arb_entries(), n in 1usize..8, pick in any::<prop::sample::Index>(), victim in any::<prop::sample::Index>()) {
            let table = VectorTable::from_entries(Source::BertVec, entries.clone()).unwrap();
            let query = pick.get(&entries).0.clone();
            let target = victim.get(&entries).0.clone();
            let scaled = entries
                .iter()
                .map(|(p, v)| {
                    let factor = if *p == target { 2.0 } else { 1.0 };
                    (p.clone(), v.iter().map(|x| x * factor).collect())
                })
                .collect::<Vec<_>>();
            let scaled = VectorTable::from_entries(Source::BertVec, scaled).unwrap();
            prop_assert_eq!(
                table.knn_candidates(&label(&query), n),
                scaled.knn_candidates(&label(&query), n)
            );
        }
    }
}
