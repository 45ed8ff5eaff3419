//! The scoring-service client against a real socket, checked against the
//! shared golden request/response files.

mod common;

use std::fs;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use aas_core::entailment::{
    HttpBackend, PremiseHypothesis, ScoreRequest, ScoreResponse, ScoringBackend,
    SERVICE_BATCH_LIMIT,
};
use aas_core::http::UreqTransport;
use aas_core::Error;
use common::{fixtures, TestServer};
use serde_json::Value;

fn golden(name: &str) -> String {
    fs::read_to_string(fixtures().join("contract").join(name)).unwrap()
}

fn backend(server: &TestServer) -> HttpBackend {
    HttpBackend::new(
        &server.base_url,
        Arc::new(UreqTransport::new(Duration::from_secs(10))),
    )
}

fn pairs_of(request: &str) -> Vec<PremiseHypothesis> {
    serde_json::from_str::<ScoreRequest>(request).unwrap().pairs
}

#[test]
fn golden_request_and_response() {
    let request = golden("score_request.json");
    let response = golden("score_response.json");
    let served = response.clone();
    let server = TestServer::start(move |r| {
        assert_eq!(
            (r.method.as_str(), r.target.as_str()),
            ("POST", "/v1/score")
        );
        (200, served.clone())
    });
    let scores = backend(&server).score_batch(&pairs_of(&request)).unwrap();
    let expected: ScoreResponse = serde_json::from_str(&response).unwrap();
    assert_eq!(scores, expected.scores);
    let sent: Value = serde_json::from_str(&server.requests()[0].body).unwrap();
    let wanted: Value = serde_json::from_str(&request).unwrap();
    assert_eq!(sent, wanted, "request body must match the golden file");
}

#[test]
fn empty_batch_round_trips() {
    let server = TestServer::start(|_| (200, golden("score_response_empty.json")));
    assert!(backend(&server)
        .score_batch(&pairs_of(&golden("score_request_empty.json")))
        .unwrap()
        .is_empty());
}

#[test]
fn health_reports_model_used_in_description() {
    let server = TestServer::start(|r| {
        assert_eq!(
            (r.method.as_str(), r.target.as_str()),
            ("GET", "/v1/health")
        );
        (200, golden("health.json"))
    });
    let b = backend(&server);
    assert_eq!(b.health().unwrap().model, "roberta-large-mnli");
    assert_eq!(b.describe(), "http:roberta-large-mnli");

    let down = TestServer::start(|_| (503, "{}".into()));
    assert!(matches!(
        backend(&down).health(),
        Err(Error::ResourceUnavailable(_))
    ));
}

#[test]
fn large_batches_are_split_and_order_is_kept() {
    // The fake service scores a pair by the number embedded in its premise.
    let server = TestServer::start(|r| {
        let req: ScoreRequest = serde_json::from_str(&r.body).unwrap();
        if req.pairs.len() > SERVICE_BATCH_LIMIT {
            return (413, "{}".into());
        }
        let scores: Vec<f64> = req
            .pairs
            .iter()
            .map(|p| p.premise.parse::<f64>().unwrap() / 1000.0)
            .collect();
        (
            200,
            serde_json::to_string(&ScoreResponse { scores }).unwrap(),
        )
    });
    let pairs: Vec<PremiseHypothesis> = (0..600)
        .map(|i| PremiseHypothesis {
            premise: ((i * 7919) % 1000).to_string(),
            hypothesis: "h".into(),
        })
        .collect();
    let scores = backend(&server).score_batch(&pairs).unwrap();
    let expected: Vec<f64> = pairs
        .iter()
        .map(|p| p.premise.parse::<f64>().unwrap() / 1000.0)
        .collect();
    assert_eq!(scores, expected);
    let sizes: Vec<usize> = server
        .requests()
        .iter()
        .map(|r| pairs_of(&r.body).len())
        .collect();
    assert_eq!(sizes, [256, 256, 88]);
}

#[test]
fn error_statuses_map_to_error_classes() {
    let pairs = pairs_of(&golden("score_request.json"));
    for (status, body, retryable) in [
        (429, "{}", true),
        (503, "{}", true),
        (400, "{\"detail\":\"malformed\"}", false),
        (413, "{}", false),
    ] {
        let server = TestServer::start(move |_| (status, body.to_string()));
        let err = backend(&server).score_batch(&pairs).unwrap_err();
        if retryable {
            assert!(
                matches!(err, Error::ResourceUnavailable(_)),
                "{status}: {err}"
            );
        } else {
            assert!(
                matches!(err, Error::ContractViolation(_)),
                "{status}: {err}"
            );
        }
    }
}

#[test]
fn wrong_length_or_garbage_is_contract_violation() {
    let pairs = pairs_of(&golden("score_request.json"));
    for body in ["{\"scores\":[0.5]}", "not json", "{\"score\":[]}"] {
        let server = TestServer::start(move |_| (200, body.to_string()));
        let err = backend(&server).score_batch(&pairs).unwrap_err();
        assert!(matches!(err, Error::ContractViolation(_)), "{body}: {err}");
    }
}

#[test]
fn semantic_scoring_retries_a_flaky_service() {
    use aas_core::entailment::{semantic_scores, PremiseSet, ScoringOptions};
    let calls = Arc::new(AtomicUsize::new(0));
    let seen = calls.clone();
    let server = TestServer::start(move |r| {
        if seen.fetch_add(1, Ordering::SeqCst) == 0 {
            return (429, "{}".into());
        }
        let n = pairs_of(&r.body).len();
        (
            200,
            serde_json::to_string(&ScoreResponse {
                scores: vec![0.75; n],
            })
            .unwrap(),
        )
    });
    let premises = PremiseSet {
        label: aas_core::Label::new("road").unwrap(),
        premises: vec!["is the road wet?".into()],
        fallback: false,
    };
    let opts = ScoringOptions {
        retry_delay: Duration::from_millis(1),
        ..Default::default()
    };
    let scores =
        semantic_scores(&backend(&server), &premises, &["street".to_string()], &opts).unwrap();
    assert_eq!(scores[0].mean_score, 0.75);
    assert_eq!(calls.load(Ordering::SeqCst), 2);
}
