//! Model access: a completion contract shared by the simulated model and the
//! chat-completions HTTP client, plus token accounting.

mod http;
mod ledger;
mod seed;
mod simulated;

pub use http::{
    EndpointConfig, HttpBackend, HttpReply, RetryPolicy, Sleeper, Transport, TransportError,
    UreqTransport,
};
pub use ledger::{
    aggregate_cost, estimate_tokens, format_k, CostReport, PhaseUsage, PriceTable, TokenUsage,
    UsageLedger,
};
pub use seed::derive_seed;
pub use simulated::{
    softmax_pick, softmax_probabilities, Candidate, PolicyRule, ScriptedPolicy, SimulatedBackend,
    MIN_TEMPERATURE,
};

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// What a request is for. Ledger entries and scripted-policy rules are keyed
/// by it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Propose,
    Value,
    Answer,
    Plan,
    Vote,
    Write,
    Judge,
}

impl Phase {
    pub const ALL: [Phase; 7] = [
        Phase::Propose,
        Phase::Value,
        Phase::Answer,
        Phase::Plan,
        Phase::Vote,
        Phase::Write,
        Phase::Judge,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Propose => "propose",
            Phase::Value => "value",
            Phase::Answer => "answer",
            Phase::Plan => "plan",
            Phase::Vote => "vote",
            Phase::Write => "write",
            Phase::Judge => "judge",
        }
    }

    /// Stable numeric tag mixed into request seeds.
    pub fn seed_tag(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Provider-side temperature bound.
pub const WIRE_TEMPERATURE_MAX: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub temperature: f64,
    pub sample_count: usize,
    pub max_output: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stop: Vec<String>,
    pub phase: Phase,
    /// Task name and state key: what the simulated model matches rules on.
    pub task: String,
    pub state_key: String,
    /// Request seed, derived from (run seed, node id, phase, call index).
    pub seed: u64,
}

impl CompletionRequest {
    pub fn new(task: &str, phase: Phase, state_key: impl Into<String>, prompt: impl Into<String>) -> Self {
        Self {
            prompt: prompt.into(),
            temperature: 0.7,
            sample_count: 1,
            max_output: 1000,
            stop: Vec::new(),
            phase,
            task: task.to_string(),
            state_key: state_key.into(),
            seed: 0,
        }
    }

    pub fn temperature(mut self, t: f64) -> Self {
        self.temperature = t;
        self
    }

    pub fn samples(mut self, n: usize) -> Self {
        self.sample_count = n;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if !self.temperature.is_finite() || !(0.0..=WIRE_TEMPERATURE_MAX).contains(&self.temperature) {
            return Err(BackendError::InvalidRequest(format!(
                "temperature {} outside [0, {WIRE_TEMPERATURE_MAX}]",
                self.temperature
            )));
        }
        if self.sample_count == 0 {
            return Err(BackendError::InvalidRequest("sample_count must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub samples: Vec<String>,
    pub usage: TokenUsage,
    /// Usage was computed by the local estimator, not reported by a provider.
    pub estimated: bool,
    pub backend: String,
    pub latency_ms: u64,
    pub retries: u32,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("request timed out: {0}")]
    Timeout(String),
    #[error("rate limited: {0}")]
    RateLimit(String),
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("model refused: {0}")]
    Refusal(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

impl BackendError {
    pub fn category(&self) -> &'static str {
        match self {
            BackendError::Timeout(_) => "timeout",
            BackendError::RateLimit(_) => "rate-limit",
            BackendError::Unavailable(_) => "unavailable",
            BackendError::Protocol(_) => "protocol",
            BackendError::Refusal(_) => "refusal",
            BackendError::Auth(_) => "auth",
            BackendError::InvalidRequest(_) => "invalid-request",
        }
    }

    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            BackendError::Timeout(_) | BackendError::RateLimit(_) | BackendError::Unavailable(_)
        )
    }
}

/// Anything that can answer a [`CompletionRequest`]. Implementations must be
/// safe to call from several threads.
pub trait Backend: Send + Sync {
    fn id(&self) -> &str;
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError>;
}

impl<B: Backend + ?Sized> Backend for &B {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        (**self).complete(request)
    }
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        (**self).complete(request)
    }
}

impl<B: Backend + ?Sized> Backend for std::sync::Arc<B> {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        (**self).complete(request)
    }
}

/// Calls `backend` and books the usage into `ledger`.
pub fn complete_metered(
    backend: &dyn Backend,
    ledger: &mut UsageLedger,
    request: &CompletionRequest,
) -> Result<CompletionResponse, BackendError> {
    request.validate()?;
    let response = backend.complete(request)?;
    ledger.record(request.phase, response.usage, response.estimated);
    Ok(response)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_validation() {
        let ok = CompletionRequest::new("t", Phase::Propose, "k", "p").temperature(1.2);
        assert!(ok.validate().is_ok());
        assert!(ok.clone().temperature(2.5).validate().is_err());
        assert!(ok.clone().temperature(-0.1).validate().is_err());
        assert!(ok.clone().temperature(f64::NAN).validate().is_err());
        assert!(ok.samples(0).validate().is_err());
    }

    #[test]
    fn retry_classification() {
        assert!(BackendError::RateLimit("x".into()).is_retryable());
        assert!(BackendError::Timeout("x".into()).is_retryable());
        assert!(!BackendError::Auth("x".into()).is_retryable());
        assert!(!BackendError::Protocol("x".into()).is_retryable());
        assert_eq!(BackendError::Refusal("x".into()).category(), "refusal");
    }
}
