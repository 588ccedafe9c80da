//! A deterministic stand-in for a language model.
//!
//! Each rule lists candidate responses with base weights. A sample is drawn
//! from `softmax(weight / max(T, MIN_TEMPERATURE))` using a generator seeded
//! from the request seed and the sample index, so low temperatures collapse
//! onto the heaviest candidate and high temperatures spread out.

use super::ledger::{estimate_tokens, TokenUsage};
use super::seed::derive_seed;
use super::{Backend, BackendError, CompletionRequest, CompletionResponse, Phase};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub const MIN_TEMPERATURE: f64 = 1e-3;

/// Key wildcard: matches any state key of the rule's task and phase.
const ANY_KEY: &str = "*";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    pub weight: f64,
}

impl Candidate {
    pub fn new(text: impl Into<String>, weight: f64) -> Self {
        Self {
            text: text.into(),
            weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRule {
    pub task: String,
    pub phase: Phase,
    pub key: String,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(from = "PolicyFile", into = "PolicyFile")]
pub struct ScriptedPolicy {
    rules: Vec<PolicyRule>,
    index: HashMap<(String, Phase, String), usize>,
}

impl PartialEq for ScriptedPolicy {
    fn eq(&self, other: &Self) -> bool {
        self.rules == other.rules
    }
}

#[derive(Serialize, Deserialize)]
struct PolicyFile {
    rules: Vec<PolicyRule>,
}

impl From<PolicyFile> for ScriptedPolicy {
    fn from(file: PolicyFile) -> Self {
        let mut policy = ScriptedPolicy::default();
        for rule in file.rules {
            policy.push(rule);
        }
        policy
    }
}

impl From<ScriptedPolicy> for PolicyFile {
    fn from(policy: ScriptedPolicy) -> Self {
        PolicyFile { rules: policy.rules }
    }
}

impl ScriptedPolicy {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a rule. A rule with an empty candidate list is ignored; a later
    /// rule for the same (task, phase, key) replaces the earlier one.
    pub fn push(&mut self, rule: PolicyRule) {
        if rule.candidates.is_empty() {
            return;
        }
        let key = (rule.task.clone(), rule.phase, rule.key.clone());
        match self.index.get(&key) {
            Some(&i) => self.rules[i] = rule,
            None => {
                self.index.insert(key, self.rules.len());
                self.rules.push(rule);
            }
        }
    }

    pub fn add(&mut self, task: &str, phase: Phase, key: impl Into<String>, candidates: Vec<Candidate>) {
        self.push(PolicyRule {
            task: task.to_string(),
            phase,
            key: key.into(),
            candidates,
        });
    }

    pub fn rules(&self) -> &[PolicyRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Exact key first, then the phase wildcard.
    pub fn lookup(&self, task: &str, phase: Phase, key: &str) -> Option<&PolicyRule> {
        let exact = (task.to_string(), phase, key.to_string());
        self.index
            .get(&exact)
            .or_else(|| self.index.get(&(task.to_string(), phase, ANY_KEY.to_string())))
            .map(|&i| &self.rules[i])
    }
}

pub fn softmax_probabilities(weights: &[f64], temperature: f64) -> Vec<f64> {
    let t = temperature.max(MIN_TEMPERATURE);
    let top = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = weights.iter().map(|w| ((w - top) / t).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Index chosen by the uniform draw `u` in `[0, 1)`.
pub fn softmax_pick(weights: &[f64], temperature: f64, u: f64) -> usize {
    let probs = softmax_probabilities(weights, temperature);
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left `acc` just below 1
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Backend that answers from a [`ScriptedPolicy`]. Requests no rule matches
/// get an empty completion, which every task parser treats as "nothing
/// usable".
#[derive(Debug, Clone)]
pub struct SimulatedBackend {
    id: String,
    policy: ScriptedPolicy,
}

impl SimulatedBackend {
    pub fn new(policy: ScriptedPolicy) -> Self {
        Self {
            id: "simulated".to_string(),
            policy,
        }
    }

    pub fn policy(&self) -> &ScriptedPolicy {
        &self.policy
    }

    pub fn sample(&self, request: &CompletionRequest) -> Vec<String> {
        let Some(rule) = self
            .policy
            .lookup(&request.task, request.phase, &request.state_key)
        else {
            log::debug!(
                "no scripted rule for {}/{}/{:?}",
                request.task,
                request.phase,
                request.state_key
            );
            return vec![String::new(); request.sample_count];
        };
        let weights: Vec<f64> = rule.candidates.iter().map(|c| c.weight).collect();
        (0..request.sample_count)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[request.seed, i as u64]));
                let u: f64 = rng.random();
                rule.candidates[softmax_pick(&weights, request.temperature, u)]
                    .text
                    .clone()
            })
            .collect()
    }
}

impl Backend for SimulatedBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        request.validate()?;
        let samples = self.sample(request);
        let usage = TokenUsage::new(
            estimate_tokens(&request.prompt),
            samples.iter().map(|s| estimate_tokens(s)).sum(),
        );
        Ok(CompletionResponse {
            samples,
            usage,
            estimated: true,
            backend: self.id.clone(),
            latency_ms: 0,
            retries: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_way() -> SimulatedBackend {
        let mut policy = ScriptedPolicy::new();
        policy.add(
            "t",
            Phase::Propose,
            "k",
            vec![Candidate::new("top", 2.0), Candidate::new("low", 1.0)],
        );
        SimulatedBackend::new(policy)
    }

    fn frequency_of_top(backend: &SimulatedBackend, temperature: f64, n: usize) -> f64 {
        let req = CompletionRequest::new("t", Phase::Propose, "k", "p")
            .temperature(temperature)
            .samples(n)
            .seed(99);
        let samples = backend.complete(&req).unwrap().samples;
        samples.iter().filter(|s| *s == "top").count() as f64 / n as f64
    }

    #[test]
    fn same_seed_same_samples() {
        let b = two_way();
        let req = CompletionRequest::new("t", Phase::Propose, "k", "p").samples(3).seed(5);
        let a = b.complete(&req).unwrap();
        assert_eq!(a.samples.len(), 3);
        assert_eq!(a, b.complete(&req).unwrap());
    }

    #[test]
    fn near_zero_temperature_is_argmax() {
        assert!(frequency_of_top(&two_way(), 0.001, 10_000) > 0.99);
        assert_eq!(softmax_pick(&[1.0, 3.0, 2.0], 0.0, 0.999_999), 1);
    }

    #[test]
    fn unit_temperature_equal_weights_is_uniform() {
        let mut policy = ScriptedPolicy::new();
        policy.add(
            "t",
            Phase::Vote,
            "*",
            (0..4).map(|i| Candidate::new(i.to_string(), 1.0)).collect(),
        );
        let b = SimulatedBackend::new(policy);
        let req = CompletionRequest::new("t", Phase::Vote, "anything", "p")
            .temperature(1.0)
            .samples(10_000)
            .seed(3);
        let samples = b.complete(&req).unwrap().samples;
        for i in 0..4 {
            let f = samples.iter().filter(|s| **s == i.to_string()).count() as f64 / 1e4;
            assert!((f - 0.25).abs() < 0.03, "candidate {i}: {f}");
        }
    }

    #[test]
    fn top_share_falls_with_temperature() {
        let b = two_way();
        let f: Vec<f64> = [0.2, 0.7, 1.5]
            .iter()
            .map(|&t| frequency_of_top(&b, t, 10_000))
            .collect();
        assert!(f[0] > f[1] && f[1] > f[2], "{f:?}");
        let p = softmax_probabilities(&[2.0, 1.0], 1.0);
        assert!((f[1] - softmax_probabilities(&[2.0, 1.0], 0.7)[0]).abs() < 0.02);
        assert!((p[0] - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn unmatched_request_gets_empty_text() {
        let b = two_way();
        let req = CompletionRequest::new("t", Phase::Value, "k", "p").samples(2);
        assert_eq!(b.complete(&req).unwrap().samples, vec!["", ""]);
    }

    #[test]
    fn policy_round_trips_through_json() {
        let b = two_way();
        let json = serde_json::to_string(b.policy()).unwrap();
        let back: ScriptedPolicy = serde_json::from_str(&json).unwrap();
        assert!(back.lookup("t", Phase::Propose, "k").is_some());
        assert_eq!(back.len(), 1);
    }
}
