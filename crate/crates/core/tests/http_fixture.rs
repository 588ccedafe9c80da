//! Replays recorded chat-completions exchanges through the HTTP backend.

use serde_json::Value;
use std::sync::{Arc, Mutex};
use std::time::Duration;
use tempotree::backend::{
    estimate_tokens, Backend, BackendError, CompletionRequest, EndpointConfig, HttpBackend, HttpReply, Phase,
    RetryPolicy, Transport, TransportError,
};
use tempotree::experiment::{execute, plan_runs, load_instances, ExperimentConfig, Method};

struct Recorded {
    replies: Mutex<Vec<HttpReply>>,
    sent: Arc<Mutex<Vec<Value>>>,
}

impl Transport for Recorded {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &str) -> Result<HttpReply, TransportError> {
        assert_eq!(url, "https://api.example.test/v1/chat/completions");
        assert_eq!(bearer, Some("test-key"));
        self.sent.lock().unwrap().push(serde_json::from_str(body).unwrap());
        let mut replies = self.replies.lock().unwrap();
        assert!(!replies.is_empty(), "unexpected extra request");
        Ok(replies.remove(0))
    }
}

fn endpoint() -> EndpointConfig {
    EndpointConfig {
        base_url: "https://api.example.test/v1/".into(),
        model: "gpt-4-0613".into(),
        api_key_env: "UNUSED".into(),
        timeout_secs: 5,
    }
}

fn exchange(name: &str) -> Value {
    let all: Vec<Value> = serde_json::from_str(include_str!("fixtures/chat_exchanges.json")).unwrap();
    all.into_iter().find(|e| e["name"] == name).unwrap()
}

fn backend_for(ex: &Value) -> (HttpBackend, Arc<Mutex<Vec<Value>>>, Arc<Mutex<Vec<Duration>>>) {
    let replies = ex["replies"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| HttpReply {
            status: r["status"].as_u64().unwrap() as u16,
            body: r["body"].to_string(),
        })
        .collect();
    let sent = Arc::new(Mutex::new(Vec::new()));
    let slept = Arc::new(Mutex::new(Vec::new()));
    let log = slept.clone();
    let backend = HttpBackend::with_transport(
        endpoint(),
        Some("test-key".into()),
        RetryPolicy::default(),
        Box::new(Recorded {
            replies: Mutex::new(replies),
            sent: sent.clone(),
        }),
    )
    .with_sleeper(Box::new(move |d| log.lock().unwrap().push(d)));
    (backend, sent, slept)
}

fn request_from(ex: &Value, phase: Phase) -> CompletionRequest {
    let r = &ex["request"];
    let mut req = CompletionRequest::new("game24", phase, "k", r["messages"][0]["content"].as_str().unwrap())
        .temperature(r["temperature"].as_f64().unwrap())
        .samples(r["n"].as_u64().unwrap() as usize);
    if let Some(stop) = r["stop"].as_array() {
        req.stop = stop.iter().map(|s| s.as_str().unwrap().to_string()).collect();
    }
    req
}

#[test]
fn proposals_with_reported_usage() {
    let ex = exchange("two proposals");
    let (backend, sent, slept) = backend_for(&ex);
    let resp = backend.complete(&request_from(&ex, Phase::Propose)).unwrap();
    assert_eq!(sent.lock().unwrap()[0], ex["request"]);
    assert_eq!(resp.samples.len(), 2);
    assert!(resp.samples[0].starts_with("4 - 1 = 3"));
    assert_eq!((resp.usage.prompt_tokens, resp.usage.completion_tokens), (612, 41));
    assert!(!resp.estimated);
    assert_eq!(resp.retries, 0);
    assert!(slept.lock().unwrap().is_empty());
}

#[test]
fn rate_limit_is_retried_and_missing_usage_estimated() {
    let ex = exchange("rate limited, then served without usage");
    let (backend, sent, slept) = backend_for(&ex);
    let req = request_from(&ex, Phase::Value);
    let resp = backend.complete(&req).unwrap();
    let sent = sent.lock().unwrap();
    assert_eq!(sent.len(), 2);
    assert_eq!(sent[0], ex["request"]);
    assert_eq!(sent[1], ex["request"]);
    assert_eq!(resp.retries, 1);
    let waits = slept.lock().unwrap();
    assert_eq!(waits.len(), 1);
    assert!(waits[0] >= Duration::from_secs(1) && waits[0] < Duration::from_millis(1250));
    assert!(resp.estimated);
    assert_eq!(resp.usage.prompt_tokens, estimate_tokens(&req.prompt));
    assert_eq!(resp.usage.completion_tokens, estimate_tokens("3 * 8 = 24\nsure"));
}

struct Down;

impl Transport for Down {
    fn post_json(&self, _: &str, _: Option<&str>, _: &str) -> Result<HttpReply, TransportError> {
        Ok(HttpReply {
            status: 503,
            body: "{\"error\":\"overloaded\"}".into(),
        })
    }
}

#[test]
fn failed_backend_flags_the_run() {
    let backend = HttpBackend::with_transport(endpoint(), None, RetryPolicy::default(), Box::new(Down))
        .with_sleeper(Box::new(|_| {}));
    let err = backend
        .complete(&CompletionRequest::new("game24", Phase::Propose, "k", "p"))
        .unwrap_err();
    assert!(matches!(err, BackendError::Unavailable(_)));

    let config = ExperimentConfig {
        method: Method::T2ot,
        instances: 2,
        ..ExperimentConfig::game24_t2ot()
    };
    let specs = plan_runs(&config, &load_instances(&config).unwrap());
    for spec in &specs {
        let record = execute(spec, &backend).unwrap();
        assert!(!record.result.complete);
        assert!(record.result.answer.is_none());
        assert_eq!(record.result.trees[0].steps.len(), 1);
        assert_eq!(record.result.trees[0].steps[0].calls.len(), 0);
    }
}
