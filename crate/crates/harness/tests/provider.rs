mod common;

use std::time::Duration;

use common::mock::{Canned, MockServer};
use reasoneval::provider::*;
use reasoneval_core::kb::{clean_article, CleanError, CleanRequest, Cleaner, Embedder, RawArticle, Source, Strategy};

const CLUSTERS: &str = r#"{"diagnostic_clusters":[{"concept_label":"Atrial Fibrillation","criteria":["Irregularly irregular rhythm","No P waves"]}]}"#;

fn endpoint(url: &str) -> Endpoint {
    Endpoint {
        policy: RetryPolicy { timeout_ms: 2_000, retries: 3, backoff_ms: 10, max_backoff_ms: 40 },
        requests_per_second: 1_000.0,
        burst: 100,
        ..Endpoint::new(url)
    }
}

fn request() -> CleanRequest {
    CleanRequest { article_text: "text".into(), label: "atrial fibrillation".into(), strategy: Strategy::ExactQuote }
}

#[test]
fn cleaner_happy_path_parses_clusters() {
    let srv = MockServer::start(vec![Canned::ok(CLUSTERS)]);
    let c = ProviderCleaner::new("mock", endpoint(&srv.url));
    let reply = c.request(&request()).unwrap();
    assert_eq!(reply.attempts, 1);
    assert_eq!(reply.body.diagnostic_clusters[0].criteria, vec!["Irregularly irregular rhythm", "No P waves"]);
    let sent: serde_json::Value = serde_json::from_str(&srv.requests.lock().unwrap()[0]).unwrap();
    assert_eq!(sent["label"], "atrial fibrillation");
    assert_eq!(sent["strategy"], "exact_quote");

    let article = RawArticle {
        label: "atrial fibrillation".into(),
        source: Source::Litfl,
        file: "litfl/af.md".into(),
        title: "Atrial Fibrillation".into(),
        text: "Irregularly irregular rhythm. No P waves.".into(),
    };
    let entries = clean_article(&article, Strategy::ExactQuote, &c, 0).unwrap();
    assert_eq!(entries.len(), 1);
    assert_eq!(entries[0].cleaner_tag, "mock");
}

#[test]
fn empty_cluster_list_is_accepted() {
    let srv = MockServer::start(vec![Canned::ok(r#"{"diagnostic_clusters":[]}"#)]);
    let c = ProviderCleaner::new("mock", endpoint(&srv.url));
    assert!(c.clean(&request()).unwrap().diagnostic_clusters.is_empty());
}

#[test]
fn retries_429_then_succeeds() {
    let srv = MockServer::start(vec![Canned::status(429), Canned::status(429), Canned::ok(CLUSTERS)]);
    let c = ProviderCleaner::new("mock", endpoint(&srv.url));
    let reply = c.request(&request()).unwrap();
    assert_eq!(reply.attempts, 3);
    assert_eq!(srv.hits(), 3);
}

#[test]
fn persistent_5xx_exhausts_retries() {
    let srv = MockServer::start(vec![Canned::status(503)]);
    let c = ProviderCleaner::new("mock", endpoint(&srv.url));
    match c.request(&request()) {
        Err(ProviderError::Exhausted { attempts, .. }) => assert_eq!(attempts, 4),
        other => panic!("expected exhaustion, got {other:?}"),
    }
    assert_eq!(srv.hits(), 4);
}

#[test]
fn malformed_json_is_a_schema_error() {
    for body in ["{not json", r#"{"clusters": []}"#, r#"{"diagnostic_clusters":[{"concept_label":"x","criteria":[]}]}"#] {
        let srv = MockServer::start(vec![Canned::ok(body)]);
        let c = ProviderCleaner::new("mock", endpoint(&srv.url));
        assert!(matches!(c.request(&request()), Err(ProviderError::Schema(_))), "{body}");
        assert!(matches!(c.clean(&request()), Err(CleanError::Schema(_))));
    }
}

#[test]
fn slow_provider_times_out() {
    let srv = MockServer::start(vec![Canned::slow(CLUSTERS, Duration::from_millis(1_500))]);
    let mut ep = endpoint(&srv.url);
    ep.policy.timeout_ms = 200;
    let c = ProviderCleaner::new("mock", ep);
    assert!(matches!(c.request(&request()), Err(ProviderError::Timeout { timeout_ms: 200 })));
}

#[test]
fn client_errors_are_not_retried() {
    let srv = MockServer::start(vec![Canned::status(401)]);
    let c = ProviderCleaner::new("mock", endpoint(&srv.url));
    assert!(matches!(c.request(&request()), Err(ProviderError::Rejected { status: 401, .. })));
    assert_eq!(srv.hits(), 1);
}

#[test]
fn embedder_accepts_both_reply_shapes_and_checks_dimension() {
    let srv = MockServer::start(vec![
        Canned::ok(r#"{"embedding":[3.0, 4.0, 0.0]}"#),
        Canned::ok(r#"{"data":[{"embedding":[0.0, 0.0, 2.0]}]}"#),
        Canned::ok(r#"{"embedding":[1.0, 2.0]}"#),
    ]);
    let e = ProviderEmbedder::new("mock", 3, endpoint(&srv.url));
    let v = e.embed("a").unwrap();
    assert!(v.valid);
    assert!((v.vector[0] - 0.6).abs() < 1e-6 && (v.vector[1] - 0.8).abs() < 1e-6);
    assert_eq!(e.embed("b").unwrap().vector, vec![0.0, 0.0, 1.0]);
    assert!(matches!(e.request("c"), Err(ProviderError::Schema(_))));
    assert_eq!(e.fingerprint(), "provider-mock-3");
}

#[test]
fn serial_only_endpoint_still_serves_concurrent_callers() {
    let srv = MockServer::start(vec![Canned::ok(CLUSTERS)]);
    let mut ep = endpoint(&srv.url);
    ep.serial_only = true;
    let c = ProviderCleaner::new("mock", ep);
    std::thread::scope(|s| {
        for _ in 0..4 {
            s.spawn(|| c.request(&request()).unwrap());
        }
    });
    assert_eq!(srv.hits(), 4);
}
