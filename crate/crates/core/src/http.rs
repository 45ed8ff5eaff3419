//! Minimal blocking HTTP abstraction shared by the ConceptNet client and the
//! entailment service backend. Tests substitute their own transports.

use std::time::Duration;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// A transport-level failure (connection refused, timeout, DNS, ...).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportError(pub String);

impl std::fmt::Display for TransportError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub trait HttpTransport: Send + Sync {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError>;
    fn post_json(&self, url: &str, body: &str) -> Result<HttpResponse, TransportError>;
}

/// Transport backed by `ureq`. Non-2xx statuses are returned, not raised.
pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .user_agent(concat!("aas/", env!("CARGO_PKG_VERSION")))
            .build()
            .into();
        Self { agent }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(60))
    }
}

fn finish(
    result: Result<ureq::http::Response<ureq::Body>, ureq::Error>,
) -> Result<HttpResponse, TransportError> {
    let mut response = result.map_err(|e| TransportError(e.to_string()))?;
    let status = response.status().as_u16();
    let body = response
        .body_mut()
        .with_config()
        .limit(256 * 1024 * 1024)
        .read_to_string()
        .map_err(|e| TransportError(e.to_string()))?;
    Ok(HttpResponse { status, body })
}

impl HttpTransport for UreqTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        finish(self.agent.get(url).call())
    }

    fn post_json(&self, url: &str, body: &str) -> Result<HttpResponse, TransportError> {
        finish(
            self.agent
                .post(url)
                .header("Content-Type", "application/json")
                .send(body),
        )
    }
}

/// A transport that refuses every request and counts the attempts; used
/// to prove offline paths perform no network I/O.
#[derive(Debug, Default)]
pub struct DenyTransport {
    attempts: std::sync::atomic::AtomicUsize,
}

impl DenyTransport {
    pub fn attempts(&self) -> usize {
        self.attempts.load(std::sync::atomic::Ordering::SeqCst)
    }

    fn deny(&self, what: String) -> Result<HttpResponse, TransportError> {
        self.attempts
            .fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        Err(TransportError(format!("network access denied: {what}")))
    }
}

impl HttpTransport for DenyTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        self.deny(format!("GET {url}"))
    }

    fn post_json(&self, url: &str, _body: &str) -> Result<HttpResponse, TransportError> {
        self.deny(format!("POST {url}"))
    }
}
