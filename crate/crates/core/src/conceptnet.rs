//! ConceptNet 5 client with a mandatory on-disk response cache.
//!
//! Cache layout: `<cache_dir>/conceptnet/<api_version>/<h[0..2]>/<h>.json`,
//! where `h` is the hex SHA-256 of `"<api_version>\n<label>\n<relations>"`
//! and `<relations>` is the comma-joined relation list. Each file holds
//! `{"api_version", "label", "relations", "pages": [<raw page>, ...]}`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use tracing::{debug, warn};

use crate::answer::{normalize, Label};
use crate::artifact::write_atomic;
use crate::error::{Error, Result};
use crate::http::HttpTransport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    Synonym,
    IsA,
    FormOf,
    SimilarTo,
}

impl Relation {
    pub const DEFAULT: [Relation; 4] = [
        Relation::Synonym,
        Relation::IsA,
        Relation::FormOf,
        Relation::SimilarTo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Relation::Synonym => "Synonym",
            Relation::IsA => "IsA",
            Relation::FormOf => "FormOf",
            Relation::SimilarTo => "SimilarTo",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Relation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let s = s.strip_prefix("/r/").unwrap_or(s);
        Relation::DEFAULT
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Config(format!("unsupported ConceptNet relation {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRecord {
    pub relation: Relation,
    pub other_phrase: String,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct ConceptNetConfig {
    pub base_url: String,
    pub api_version: String,
    pub cache_dir: PathBuf,
    pub offline: bool,
    pub relations: Vec<Relation>,
    pub page_limit: usize,
    pub max_pages: usize,
    pub requests_per_minute: u32,
    pub max_retries: u32,
    pub backoff_base: Duration,
    /// Hard cap on network requests for the lifetime of the client.
    pub request_budget: Option<u64>,
}

impl ConceptNetConfig {
    pub fn new(cache_dir: impl Into<PathBuf>) -> Self {
        Self {
            base_url: "https://api.conceptnet.io".to_string(),
            api_version: "5.7".to_string(),
            cache_dir: cache_dir.into(),
            offline: false,
            relations: Relation::DEFAULT.to_vec(),
            page_limit: 1000,
            max_pages: 50,
            requests_per_minute: 60,
            max_retries: 4,
            backoff_base: Duration::from_millis(500),
            request_budget: None,
        }
    }
}

/// Client-side token bucket; `acquire` blocks until a request may be sent.
#[derive(Debug)]
pub struct TokenBucket {
    per_second: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    pub fn per_minute(requests: u32) -> Self {
        let per_second = f64::from(requests.max(1)) / 60.0;
        Self {
            per_second,
            capacity: 1.0,
            state: Mutex::new((1.0, Instant::now())),
        }
    }

    pub fn acquire(&self) {
        let wait = {
            let mut state = self.state.lock().expect("token bucket lock poisoned");
            let now = Instant::now();
            let elapsed = now.duration_since(state.1).as_secs_f64();
            state.0 = (state.0 + elapsed * self.per_second).min(self.capacity);
            state.1 = now;
            state.0 -= 1.0;
            if state.0 >= 0.0 {
                Duration::ZERO
            } else {
                Duration::from_secs_f64(-state.0 / self.per_second)
            }
        };
        if !wait.is_zero() {
            thread::sleep(wait);
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    api_version: String,
    label: String,
    relations: Vec<Relation>,
    pages: Vec<Value>,
}

/// Characters left unescaped in a concept path segment.
const SEGMENT: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'_')
    .remove(b'-')
    .remove(b'.')
    .remove(b'\'');

pub struct ConceptNetClient {
    config: ConceptNetConfig,
    transport: Arc<dyn HttpTransport>,
    limiter: TokenBucket,
    requests: AtomicU64,
}

impl ConceptNetClient {
    pub fn new(config: ConceptNetConfig, transport: Arc<dyn HttpTransport>) -> Self {
        let limiter = TokenBucket::per_minute(config.requests_per_minute);
        Self {
            config,
            transport,
            limiter,
            requests: AtomicU64::new(0),
        }
    }

    pub fn config(&self) -> &ConceptNetConfig {
        &self.config
    }

    /// Network requests issued so far.
    pub fn requests_made(&self) -> u64 {
        self.requests.load(Ordering::SeqCst)
    }

    fn relation_key(&self) -> String {
        self.config
            .relations
            .iter()
            .map(|r| r.name())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Where the response for `label` is cached.
    pub fn cache_path(&self, label: &Label) -> PathBuf {
        let key = format!(
            "{}\n{}\n{}",
            self.config.api_version,
            label.normalized(),
            self.relation_key()
        );
        let digest = hex::encode(Sha256::digest(key.as_bytes()));
        self.config
            .cache_dir
            .join("conceptnet")
            .join(&self.config.api_version)
            .join(&digest[..2])
            .join(format!("{digest}.json"))
    }

    fn concept_path(label: &Label) -> String {
        let term = label.normalized().replace(' ', "_");
        format!("/c/en/{}", utf8_percent_encode(&term, SEGMENT))
    }

    /// English edges of the label's concept restricted to the configured
    /// relations. Served from cache when possible.
    pub fn fetch_edges(&self, label: &Label) -> Result<Vec<EdgeRecord>> {
        let path = self.cache_path(label);
        let pages = match read_cache(&path)? {
            Some(pages) => pages,
            None if self.config.offline => {
                return Err(Error::CacheMiss(vec![label.normalized().to_string()]))
            }
            None => {
                let pages = self.download(label)?;
                let file = CacheFile {
                    api_version: self.config.api_version.clone(),
                    label: label.normalized().to_string(),
                    relations: self.config.relations.clone(),
                    pages,
                };
                let bytes = serde_json::to_vec(&file).expect("cache serialization is infallible");
                write_atomic(&path, &bytes)?;
                file.pages
            }
        };
        Ok(edges_from_pages(label, &pages, &self.config.relations))
    }

    fn download(&self, label: &Label) -> Result<Vec<Value>> {
        let mut pages = Vec::new();
        let mut next = Some(format!(
            "{}?offset=0&limit={}",
            Self::concept_path(label),
            self.config.page_limit
        ));
        while let Some(relative) = next.take() {
            if pages.len() >= self.config.max_pages {
                warn!(label = %label, pages = pages.len(), "stopping ConceptNet pagination at page cap");
                break;
            }
            let url = format!("{}{}", self.config.base_url.trim_end_matches('/'), relative);
            let page = self.get_json(&url)?;
            next = page
                .pointer("/view/nextPage")
                .and_then(Value::as_str)
                .map(str::to_string);
            pages.push(page);
        }
        Ok(pages)
    }

    fn get_json(&self, url: &str) -> Result<Value> {
        let mut delay = self.config.backoff_base;
        let mut attempt = 0;
        loop {
            if let Some(budget) = self.config.request_budget {
                if self.requests.load(Ordering::SeqCst) >= budget {
                    return Err(Error::ResourceUnavailable(format!(
                        "ConceptNet request budget of {budget} exhausted"
                    )));
                }
            }
            self.limiter.acquire();
            self.requests.fetch_add(1, Ordering::SeqCst);
            debug!(url, attempt, "ConceptNet request");
            let retryable = match self.transport.get(url) {
                Ok(resp) if resp.status == 200 => {
                    return serde_json::from_str(&resp.body).map_err(|e| {
                        Error::ResourceUnavailable(format!(
                            "ConceptNet returned invalid JSON for {url}: {e}"
                        ))
                    });
                }
                Ok(resp) if resp.status == 429 || resp.status >= 500 => {
                    format!("HTTP {} from {url}", resp.status)
                }
                Ok(resp) => {
                    return Err(Error::ResourceUnavailable(format!(
                        "HTTP {} from {url}",
                        resp.status
                    )))
                }
                Err(e) => format!("{url}: {e}"),
            };
            if attempt >= self.config.max_retries {
                return Err(Error::ResourceUnavailable(format!(
                    "{retryable} (gave up after {} attempts)",
                    attempt + 1
                )));
            }
            thread::sleep(delay);
            delay = (delay * 2).min(Duration::from_secs(30));
            attempt += 1;
        }
    }
}

fn read_cache(path: &Path) -> Result<Option<Vec<Value>>> {
    match std::fs::read(path) {
        Ok(bytes) => {
            let file: CacheFile = serde_json::from_slice(&bytes)
                .map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
            Ok(Some(file.pages))
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::io(path, e)),
    }
}

/// `/c/en/street/n/wn/...` → `("en", "street")`.
fn split_concept(id: &str) -> Option<(&str, &str)> {
    let mut parts = id.strip_prefix("/c/")?.split('/');
    Some((parts.next()?, parts.next()?))
}

fn concept_phrase(term: &str) -> Option<String> {
    let decoded = percent_encoding::percent_decode_str(term)
        .decode_utf8()
        .ok()?;
    normalize(&decoded.replace('_', " ")).ok()
}

/// Extracts edges from raw API pages: the query concept must be one
/// endpoint, the other endpoint must be English, and the relation must be
/// one of `relations`.
pub fn edges_from_pages(label: &Label, pages: &[Value], relations: &[Relation]) -> Vec<EdgeRecord> {
    let query = label.normalized();
    let mut out = Vec::new();
    for edge in pages
        .iter()
        .filter_map(|p| p.get("edges").and_then(Value::as_array))
        .flatten()
    {
        let Some(relation) = edge
            .pointer("/rel/@id")
            .and_then(Value::as_str)
            .and_then(|r| r.parse::<Relation>().ok())
            .filter(|r| relations.contains(r))
        else {
            continue;
        };
        let endpoint = |side: &str| -> Option<(String, String)> {
            let id = edge
                .pointer(&format!("/{side}/@id"))
                .and_then(Value::as_str)?;
            let (lang, term) = split_concept(id)?;
            Some((lang.to_string(), concept_phrase(term)?))
        };
        let (Some(start), Some(end)) = (endpoint("start"), endpoint("end")) else {
            continue;
        };
        let other = match (&start, &end) {
            ((l, s), other) if l == "en" && s == query => other,
            (other, (l, e)) if l == "en" && e == query => other,
            _ => continue,
        };
        if other.0 != "en" || other.1 == query {
            continue;
        }
        let weight = edge.get("weight").and_then(Value::as_f64).unwrap_or(0.0);
        if weight.is_nan() || weight < 0.0 {
            continue;
        }
        out.push(EdgeRecord {
            relation,
            other_phrase: other.1.clone(),
            weight,
        });
    }
    out
}

/// Candidate phrases from edges with `weight >= min_weight`, one per phrase
/// (keeping its heaviest edge), by weight descending then phrase.
pub fn conceptnet_candidates(edges: &[EdgeRecord], min_weight: f64) -> Vec<String> {
    let mut best: std::collections::BTreeMap<&str, f64> = Default::default();
    for edge in edges {
        let w = best
            .entry(edge.other_phrase.as_str())
            .or_insert(edge.weight);
        *w = w.max(edge.weight);
    }
    let mut kept: Vec<(&str, f64)> = best.into_iter().filter(|(_, w)| *w >= min_weight).collect();
    kept.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    kept.into_iter().map(|(p, _)| p.to_string()).collect()
}
