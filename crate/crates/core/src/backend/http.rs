//! Chat-completions client.
//!
//! One request per [`CompletionRequest`], with `temperature` and `n` mapped
//! onto the wire format. Rate limits, timeouts and 5xx responses are retried
//! with exponential backoff; auth failures and malformed bodies are not.

use super::ledger::{estimate_tokens, TokenUsage};
use super::{Backend, BackendError, CompletionRequest, CompletionResponse};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    /// e.g. `https://api.openai.com/v1`; `/chat/completions` is appended.
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_key_env() -> String {
    "OPENAI_API_KEY".to_string()
}

fn default_timeout() -> u64 {
    120
}

impl EndpointConfig {
    pub fn url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub base_delay_ms: u64,
    /// Upper bound of the uniform jitter added to each delay.
    pub jitter_ms: u64,
    pub jitter_seed: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_delay_ms: 1000,
            jitter_ms: 250,
            jitter_seed: 0,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (0-based): 1s, 2s, 4s plus jitter.
    pub fn delay(&self, retry: u32, rng: &mut ChaCha8Rng) -> Duration {
        let base = self.base_delay_ms.saturating_mul(1u64 << retry.min(16));
        let jitter = if self.jitter_ms == 0 {
            0
        } else {
            rng.random_range(0..self.jitter_ms)
        };
        Duration::from_millis(base + jitter)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransportError {
    #[error("timed out: {0}")]
    Timeout(String),
    #[error("transport failure: {0}")]
    Io(String),
}

/// Sends a JSON body and returns status + body text for every HTTP status.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &str) -> Result<HttpReply, TransportError>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build();
        Self {
            agent: ureq::Agent::new_with_config(config),
        }
    }
}

impl Transport for UreqTransport {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &str) -> Result<HttpReply, TransportError> {
        let mut request = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(token) = bearer {
            request = request.header("Authorization", &format!("Bearer {token}"));
        }
        match request.send(body) {
            Ok(mut response) => {
                let status = response.status().as_u16();
                let body = response
                    .body_mut()
                    .read_to_string()
                    .map_err(|e| TransportError::Io(e.to_string()))?;
                Ok(HttpReply { status, body })
            }
            Err(ureq::Error::Timeout(t)) => Err(TransportError::Timeout(t.to_string())),
            Err(e) => Err(TransportError::Io(e.to_string())),
        }
    }
}

pub type Sleeper = Box<dyn Fn(Duration) + Send + Sync>;

pub struct HttpBackend {
    id: String,
    endpoint: EndpointConfig,
    api_key: Option<String>,
    retry: RetryPolicy,
    transport: Box<dyn Transport>,
    sleeper: Sleeper,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
    n: usize,
    max_tokens: u32,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    stop: &'a [String],
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChoiceMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
    #[serde(default)]
    refusal: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    prompt_tokens: u64,
    completion_tokens: u64,
}

struct Parsed {
    samples: Vec<String>,
    usage: Option<TokenUsage>,
}

impl HttpBackend {
    /// Reads the credential from the configured environment variable.
    pub fn from_env(endpoint: EndpointConfig, retry: RetryPolicy) -> Self {
        let api_key = std::env::var(&endpoint.api_key_env).ok();
        let transport = UreqTransport::new(Duration::from_secs(endpoint.timeout_secs));
        Self::with_transport(endpoint, api_key, retry, Box::new(transport))
    }

    pub fn with_transport(
        endpoint: EndpointConfig,
        api_key: Option<String>,
        retry: RetryPolicy,
        transport: Box<dyn Transport>,
    ) -> Self {
        Self {
            id: format!("http:{}", endpoint.model),
            endpoint,
            api_key,
            retry,
            transport,
            sleeper: Box::new(std::thread::sleep),
        }
    }

    /// Replaces the function used to wait between retries.
    pub fn with_sleeper(mut self, sleeper: Sleeper) -> Self {
        self.sleeper = sleeper;
        self
    }

    pub fn request_body(&self, request: &CompletionRequest, n: usize) -> String {
        let body = ChatRequest {
            model: &self.endpoint.model,
            messages: [ChatMessage {
                role: "user",
                content: &request.prompt,
            }],
            temperature: request.temperature,
            n,
            max_tokens: request.max_output,
            stop: &request.stop,
        };
        serde_json::to_string(&body).expect("chat request serializes")
    }

    fn attempt(&self, body: &str) -> Result<Parsed, BackendError> {
        let reply = self
            .transport
            .post_json(&self.endpoint.url(), self.api_key.as_deref(), body)
            .map_err(|e| match e {
                TransportError::Timeout(m) => BackendError::Timeout(m),
                TransportError::Io(m) => BackendError::Unavailable(m),
            })?;
        match reply.status {
            200..=299 => parse_chat_response(&reply.body),
            401 | 403 => Err(BackendError::Auth(format!("status {}", reply.status))),
            408 => Err(BackendError::Timeout(format!("status {}", reply.status))),
            429 => Err(BackendError::RateLimit(snippet(&reply.body))),
            500..=599 => Err(BackendError::Unavailable(format!(
                "status {}: {}",
                reply.status,
                snippet(&reply.body)
            ))),
            s => Err(BackendError::Protocol(format!("status {s}: {}", snippet(&reply.body)))),
        }
    }

    fn with_retries(&self, body: &str, request_seed: u64, retries: &mut u32) -> Result<Parsed, BackendError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.retry.jitter_seed ^ request_seed);
        let mut retry = 0;
        loop {
            match self.attempt(body) {
                Ok(parsed) => return Ok(parsed),
                Err(e) if e.is_retryable() && retry < self.retry.max_retries => {
                    let delay = self.retry.delay(retry, &mut rng);
                    log::warn!("{} ({}), retrying in {:?}", e, e.category(), delay);
                    (self.sleeper)(delay);
                    retry += 1;
                    *retries += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

fn snippet(body: &str) -> String {
    body.chars().take(200).collect()
}

fn parse_chat_response(body: &str) -> Result<Parsed, BackendError> {
    let response: ChatResponse =
        serde_json::from_str(body).map_err(|e| BackendError::Protocol(format!("bad response body: {e}")))?;
    let mut samples = Vec::with_capacity(response.choices.len());
    for choice in response.choices {
        if let Some(refusal) = choice.message.refusal {
            return Err(BackendError::Refusal(refusal));
        }
        if choice.finish_reason.as_deref() == Some("content_filter") {
            return Err(BackendError::Refusal("content filter".into()));
        }
        samples.push(choice.message.content.unwrap_or_default());
    }
    Ok(Parsed {
        samples,
        usage: response
            .usage
            .map(|u| TokenUsage::new(u.prompt_tokens, u.completion_tokens)),
    })
}

impl Backend for HttpBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        request.validate()?;
        let started = Instant::now();
        let mut samples = Vec::with_capacity(request.sample_count);
        let mut usage = TokenUsage::default();
        let mut estimated = false;
        let mut retries = 0;
        // Some providers ignore `n`; keep asking for the remainder.
        let mut round = 0u64;
        while samples.len() < request.sample_count {
            let wanted = request.sample_count - samples.len();
            let body = self.request_body(request, wanted);
            let parsed = self.with_retries(&body, request.seed.wrapping_add(round), &mut retries)?;
            if parsed.samples.is_empty() {
                return Err(BackendError::Protocol("response has no choices".into()));
            }
            let take = parsed.samples.len().min(wanted);
            match parsed.usage {
                Some(u) => usage += u,
                None => {
                    estimated = true;
                    usage += TokenUsage::new(
                        estimate_tokens(&request.prompt),
                        parsed.samples[..take].iter().map(|s| estimate_tokens(s)).sum(),
                    );
                }
            }
            samples.extend(parsed.samples.into_iter().take(take));
            round += 1;
        }
        Ok(CompletionResponse {
            samples,
            usage,
            estimated,
            backend: self.id.clone(),
            latency_ms: started.elapsed().as_millis() as u64,
            retries,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::Phase;
    use std::sync::{Arc, Mutex};

    struct Scripted {
        replies: Mutex<Vec<Result<HttpReply, TransportError>>>,
        bodies: Arc<Mutex<Vec<String>>>,
    }

    impl Transport for Scripted {
        fn post_json(&self, _url: &str, _bearer: Option<&str>, body: &str) -> Result<HttpReply, TransportError> {
            self.bodies.lock().unwrap().push(body.to_string());
            self.replies.lock().unwrap().remove(0)
        }
    }

    fn backend(replies: Vec<Result<HttpReply, TransportError>>) -> (HttpBackend, Arc<Mutex<Vec<Duration>>>, Arc<Mutex<Vec<String>>>) {
        let slept = Arc::new(Mutex::new(Vec::new()));
        let bodies = Arc::new(Mutex::new(Vec::new()));
        let s = slept.clone();
        let endpoint = EndpointConfig {
            base_url: "http://localhost/v1/".into(),
            model: "gpt-4-0613".into(),
            api_key_env: "UNUSED".into(),
            timeout_secs: 5,
        };
        let b = HttpBackend::with_transport(
            endpoint,
            Some("k".into()),
            RetryPolicy::default(),
            Box::new(Scripted {
                replies: Mutex::new(replies),
                bodies: bodies.clone(),
            }),
        )
        .with_sleeper(Box::new(move |d| s.lock().unwrap().push(d)));
        (b, slept, bodies)
    }

    fn ok(body: &str) -> Result<HttpReply, TransportError> {
        Ok(HttpReply {
            status: 200,
            body: body.to_string(),
        })
    }

    fn req(n: usize) -> CompletionRequest {
        CompletionRequest::new("game24", Phase::Propose, "k", "hello")
            .samples(n)
            .temperature(0.7)
    }

    const TWO: &str = r#"{"choices":[{"message":{"content":"a"}},{"message":{"content":"b"}}],"usage":{"prompt_tokens":3,"completion_tokens":2}}"#;

    #[test]
    fn rate_limit_then_success_retries_once() {
        let (b, slept, _) = backend(vec![
            Ok(HttpReply {
                status: 429,
                body: "slow down".into(),
            }),
            ok(TWO),
        ]);
        let r = b.complete(&req(2)).unwrap();
        assert_eq!(r.retries, 1);
        assert_eq!(r.samples, vec!["a", "b"]);
        assert!(!r.estimated);
        let slept = slept.lock().unwrap();
        assert_eq!(slept.len(), 1);
        assert!(slept[0] >= Duration::from_secs(1) && slept[0] < Duration::from_millis(1250));
    }

    #[test]
    fn backoff_doubles_and_gives_up() {
        let limited = || {
            Ok(HttpReply {
                status: 429,
                body: String::new(),
            })
        };
        let (b, slept, _) = backend(vec![limited(), limited(), limited(), limited()]);
        assert!(matches!(b.complete(&req(1)), Err(BackendError::RateLimit(_))));
        let secs: Vec<u64> = slept.lock().unwrap().iter().map(|d| d.as_secs()).collect();
        assert_eq!(secs, vec![1, 2, 4]);
    }

    #[test]
    fn auth_failure_is_not_retried() {
        let (b, slept, _) = backend(vec![Ok(HttpReply {
            status: 401,
            body: String::new(),
        })]);
        assert!(matches!(b.complete(&req(1)), Err(BackendError::Auth(_))));
        assert!(slept.lock().unwrap().is_empty());
    }

    #[test]
    fn malformed_body_is_protocol_error() {
        let (b, _, _) = backend(vec![ok("{not json")]);
        assert!(matches!(b.complete(&req(1)), Err(BackendError::Protocol(_))));
    }

    #[test]
    fn refusal_detected() {
        let (b, _, _) = backend(vec![ok(r#"{"choices":[{"message":{"content":null,"refusal":"no"}}]}"#)]);
        assert!(matches!(b.complete(&req(1)), Err(BackendError::Refusal(_))));
    }

    #[test]
    fn missing_usage_is_estimated() {
        let (b, _, _) = backend(vec![ok(r#"{"choices":[{"message":{"content":"abcdefgh"}}]}"#)]);
        let r = b.complete(&req(1)).unwrap();
        assert!(r.estimated);
        assert_eq!(r.usage, TokenUsage::new(2, 2));
    }

    #[test]
    fn short_choice_lists_are_topped_up() {
        let one = r#"{"choices":[{"message":{"content":"x"}}],"usage":{"prompt_tokens":1,"completion_tokens":1}}"#;
        let (b, _, bodies) = backend(vec![ok(one), ok(one), ok(one)]);
        let r = b.complete(&req(3)).unwrap();
        assert_eq!(r.samples.len(), 3);
        assert_eq!(r.usage, TokenUsage::new(3, 3));
        let ns: Vec<u64> = bodies
            .lock()
            .unwrap()
            .iter()
            .map(|body| serde_json::from_str::<serde_json::Value>(body).unwrap()["n"].as_u64().unwrap())
            .collect();
        assert_eq!(ns, vec![3, 2, 1]);
    }

    #[test]
    fn wire_body_maps_temperature_and_n() {
        let (b, _, _) = backend(vec![]);
        let body: serde_json::Value = serde_json::from_str(&b.request_body(&req(4), 4)).unwrap();
        assert_eq!(body["model"], "gpt-4-0613");
        assert_eq!(body["temperature"], 0.7);
        assert_eq!(body["n"], 4);
        assert_eq!(body["messages"][0]["content"], "hello");
        assert!(body.get("stop").is_none());
    }
}
