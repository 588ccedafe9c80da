//! Transcript types shared by every pipeline. All of them serialize to JSON
//! and contain everything needed to audit or replay a run.

use crate::backend::{Phase, TokenUsage, UsageLedger};
use crate::controller::HistoryEntry;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One backend call as it happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub phase: Phase,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node_id: Option<u64>,
    pub state_key: String,
    pub prompt: String,
    pub temperature: f64,
    pub sample_count: usize,
    pub seed: u64,
    pub samples: Vec<String>,
    pub usage: TokenUsage,
    pub estimated: bool,
    pub retries: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThoughtNode {
    pub id: u64,
    pub parent_id: Option<u64>,
    pub depth: usize,
    pub content: String,
    pub value: Option<f64>,
    pub temperature_used: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub value_labels: Vec<String>,
}

/// Plan/passage selection details of a generate-and-vote step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteDetail {
    pub tally: Vec<u32>,
    pub discarded_rounds: u32,
    /// Index into the step's candidates.
    pub winner: usize,
    /// Every round was discarded and the first candidate won by default.
    pub defaulted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub judged_score: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTranscript {
    /// 1-based reasoning step.
    pub step: usize,
    pub temperature: f64,
    pub calls: Vec<CallRecord>,
    pub candidates: Vec<ThoughtNode>,
    pub beam: Vec<u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub rejects: BTreeMap<String, u64>,
    pub x: Option<f64>,
    pub pb_before: Option<f64>,
    pub gb_before: Option<f64>,
    pub pb_after: Option<f64>,
    pub gb_after: Option<f64>,
    /// Temperature chosen for the following step, when there is one.
    pub next_temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vote: Option<VoteDetail>,
}

impl StepTranscript {
    pub fn new(step: usize, temperature: f64) -> Self {
        Self {
            step,
            temperature,
            calls: Vec::new(),
            candidates: Vec::new(),
            beam: Vec::new(),
            rejects: BTreeMap::new(),
            x: None,
            pb_before: None,
            gb_before: None,
            pb_after: None,
            gb_after: None,
            next_temperature: None,
            vote: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum TreeStatus {
    Complete,
    /// No candidates survived at `step`; the tree stopped there.
    Exhausted { step: usize },
    Aborted { step: usize, error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeTranscript {
    pub tree_index: usize,
    pub seed: u64,
    pub status: TreeStatus,
    pub steps: Vec<StepTranscript>,
    pub history: Vec<HistoryEntry>,
    /// Last non-empty beam, best first.
    pub final_beam: Vec<ThoughtNode>,
}

impl TreeTranscript {
    /// Temperature used at each executed step.
    pub fn temperature_trajectory(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.temperature).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerChoice {
    pub tree_index: usize,
    pub node_id: u64,
    pub text: String,
    pub value: Option<f64>,
}

/// Counter keys used across pipelines.
pub mod counters {
    pub const PROPOSAL_DUPLICATE: &str = "proposal_duplicate";
    pub const VALUE_FALLBACK: &str = "value_fallback";
    pub const VOTE_DISCARDED: &str = "vote_discarded";
    pub const VOTE_DEFAULTED: &str = "vote_defaulted";
    pub const JUDGE_FALLBACK: &str = "judge_fallback";
    pub const JUDGE_CLAMPED: &str = "judge_clamped";
    pub const ANSWER_UNPARSED: &str = "answer_unparsed";

    pub fn proposal_rejected(code: &str) -> String {
        format!("proposal_rejected:{code}")
    }
}

pub type Counters = BTreeMap<String, u64>;

pub fn bump(counters: &mut Counters, key: &str) {
    *counters.entry(key.to_string()).or_default() += 1;
}

pub fn merge_counters(into: &mut Counters, from: &Counters) {
    for (k, v) in from {
        *into.entry(k.clone()).or_default() += v;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub trees: Vec<TreeTranscript>,
    pub answer: Option<AnswerChoice>,
    pub usage: UsageLedger,
    pub counters: Counters,
    /// False when any tree aborted on a backend error.
    pub complete: bool,
}
