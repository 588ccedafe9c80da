use super::instance::WritingInstance;
use super::parse::{parse_judge, parse_vote, tally_votes, validate_passage, CoherencyScore, PassageCheck, VoteTally};
use crate::backend::{derive_seed, Backend, BackendError, CompletionRequest, Phase, UsageLedger};
use crate::controller::{update_global_best, Controller, ControllerError, SwarmState};
use crate::record::{
    bump, counters, AnswerChoice, Counters, SearchResult, StepTranscript, ThoughtNode, TreeStatus, TreeTranscript,
    VoteDetail,
};
use crate::search::{Baseline, Caller};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

pub const TASK_NAME: &str = "creative-writing";

pub const JUDGE_HEAD: &str =
    "Analyze the following passage in detail. Consider the clarity, structure, argument coherence, and style of the writing.";
pub const JUDGE_TAIL: &str = "Conclude with: 'Thus, the coherency score is {s}', where s is an integer from 0 to 100, aiming for a normal distribution of scores with an average of 50.";
pub const DEFAULT_JUDGE_BODY: &str = "Point out concrete strengths and weaknesses before settling on a number.";

/// Which plans are judged to produce the plan step's score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanScore {
    #[default]
    Winner,
    /// Judge every plan and take the highest score.
    MaxAll,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WritingConfig {
    pub plans: usize,
    pub vote_rounds: usize,
    pub passages: usize,
    pub judge_temperature: f64,
    pub plan_score: PlanScore,
    /// Middle of the judge prompt, between the fixed head and sentinel line.
    pub judge_body: String,
    pub max_output: u32,
}

impl Default for WritingConfig {
    fn default() -> Self {
        Self {
            plans: 5,
            vote_rounds: 5,
            passages: 5,
            judge_temperature: 0.0,
            plan_score: PlanScore::Winner,
            judge_body: DEFAULT_JUDGE_BODY.to_string(),
            max_output: 1000,
        }
    }
}

impl WritingConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.plans == 0 || self.vote_rounds == 0 || self.passages == 0 {
            return Err("plans, vote_rounds and passages must be >= 1".into());
        }
        if !(0.0..=2.0).contains(&self.judge_temperature) {
            return Err(format!("judge_temperature {} outside [0, 2]", self.judge_temperature));
        }
        Ok(())
    }
}

fn constraint_lines(instance: &WritingInstance) -> String {
    let mut out = String::new();
    for (i, s) in instance.sentences.iter().enumerate() {
        let _ = writeln!(out, "{}. {s}", i + 1);
    }
    out
}

pub fn plan_prompt(instance: &WritingInstance) -> String {
    format!(
        "Write a coherent passage of 4 short paragraphs. The last sentence of each paragraph must be, in order:\n{}\nMake a plan first. Reply with the plan only, starting with \"Plan:\".",
        constraint_lines(instance)
    )
}

pub fn write_prompt(instance: &WritingInstance, plan: &str) -> String {
    format!(
        "Write a coherent passage of 4 short paragraphs separated by blank lines. The last sentence of each paragraph must be, in order:\n{}\nFollow this plan:\n{plan}\n\nReply with the passage only.",
        constraint_lines(instance)
    )
}

pub fn io_prompt(instance: &WritingInstance) -> String {
    format!(
        "Write a coherent passage of 4 short paragraphs separated by blank lines. The last sentence of each paragraph must be, in order:\n{}\nReply with the passage only.",
        constraint_lines(instance)
    )
}

pub fn cot_prompt(instance: &WritingInstance) -> String {
    format!(
        "Write a coherent passage of 4 short paragraphs separated by blank lines. The last sentence of each paragraph must be, in order:\n{}\nMake a plan, then write. Use the format:\n\nPlan:\n<plan>\n\nPassage:\n<passage>",
        constraint_lines(instance)
    )
}

pub fn vote_prompt(instance: &WritingInstance, noun: &str, choices: &[String]) -> String {
    let mut out = format!(
        "Read the instruction and the numbered choices below. Compare them, then end with a last line of the form \"The best {noun} is {{s}}\", where s is the number of the best choice.\n\nInstruction: write a coherent passage of 4 short paragraphs ending with, in order:\n{}",
        constraint_lines(instance)
    );
    for (i, c) in choices.iter().enumerate() {
        let _ = write!(out, "\nChoice {}:\n{}\n", i + 1, c.trim());
    }
    out
}

pub fn judge_prompt(body: &str, passage: &str) -> String {
    let body = body.trim();
    let middle = if body.is_empty() { String::new() } else { format!(" {body}") };
    format!("{JUDGE_HEAD}{middle} {JUDGE_TAIL}\n\nPassage:\n{passage}")
}

/// Passage part of a plan-then-write response.
pub fn extract_passage(text: &str) -> String {
    let lower = text.to_ascii_lowercase();
    match lower.rfind("passage:") {
        Some(i) => text[i + "passage:".len()..].trim().to_string(),
        None => text.trim().to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WritingOutcome {
    pub result: SearchResult,
    pub passage: Option<String>,
    pub score: Option<CoherencyScore>,
    pub check: Option<PassageCheck>,
}

struct Run<'a> {
    instance: &'a WritingInstance,
    config: &'a WritingConfig,
    seed: u64,
    caller: Caller<'a>,
    counters: Counters,
    steps: Vec<StepTranscript>,
}

impl Run<'_> {
    fn step(&mut self) -> &mut StepTranscript {
        self.steps.last_mut().expect("step started")
    }

    fn judge(&mut self, text: &str, node_id: u64) -> Result<CoherencyScore, BackendError> {
        let request = CompletionRequest::new(
            TASK_NAME,
            Phase::Judge,
            text.to_string(),
            judge_prompt(&self.config.judge_body, text),
        )
        .temperature(self.config.judge_temperature)
        .seed(derive_seed(&[self.seed, node_id, Phase::Judge.seed_tag(), 0]));
        let samples = self.call(request, Some(node_id))?;
        let score = parse_judge(samples.first().map(String::as_str).unwrap_or(""));
        if score.fallback {
            bump(&mut self.counters, counters::JUDGE_FALLBACK);
        }
        if score.clamped {
            bump(&mut self.counters, counters::JUDGE_CLAMPED);
        }
        Ok(score)
    }

    fn call(&mut self, mut request: CompletionRequest, node_id: Option<u64>) -> Result<Vec<String>, BackendError> {
        request.max_output = self.config.max_output;
        let calls = &mut self.steps.last_mut().expect("step started").calls;
        self.caller.call(request, node_id, calls)
    }

    /// One generation call for `count` candidates, then the vote rounds.
    #[allow(clippy::too_many_arguments)]
    fn generate_and_vote(
        &mut self,
        request: CompletionRequest,
        count: usize,
        noun: &str,
        first_id: u64,
        parent: u64,
        depth: usize,
        transform: fn(&str) -> String,
    ) -> Result<(Vec<ThoughtNode>, VoteTally), BackendError> {
        let temperature = request.temperature;
        let step_no = self.step().step as u64;
        let samples = self.call(request.samples(count), Some(parent))?;
        let nodes: Vec<ThoughtNode> = samples
            .iter()
            .enumerate()
            .map(|(i, s)| ThoughtNode {
                id: first_id + i as u64,
                parent_id: Some(parent),
                depth,
                content: transform(s),
                value: None,
                temperature_used: temperature,
                value_labels: Vec::new(),
            })
            .collect();
        self.step().candidates = nodes.clone();
        let choices: Vec<String> = nodes.iter().map(|n| n.content.clone()).collect();
        let prompt = vote_prompt(self.instance, noun, &choices);
        let mut votes = Vec::with_capacity(self.config.vote_rounds);
        for r in 0..self.config.vote_rounds {
            let request = CompletionRequest::new(TASK_NAME, Phase::Vote, format!("{}:{noun}", self.instance.id), prompt.clone())
                .temperature(temperature)
                .seed(derive_seed(&[self.seed, step_no, Phase::Vote.seed_tag(), r as u64]));
            let samples = self.call(request, None)?;
            let vote = parse_vote(samples.first().map(String::as_str).unwrap_or(""), nodes.len());
            if vote.is_none() {
                bump(&mut self.counters, counters::VOTE_DISCARDED);
            }
            votes.push(vote);
        }
        let tally = tally_votes(&votes, nodes.len());
        if tally.defaulted {
            bump(&mut self.counters, counters::VOTE_DEFAULTED);
        }
        Ok((nodes, tally))
    }

    fn finish_step(&mut self, nodes: &[ThoughtNode], tally: &VoteTally, judged: i64) {
        let step = self.step();
        step.candidates = nodes.to_vec();
        step.beam = vec![nodes[tally.winner].id];
        step.x = Some(judged as f64);
        step.vote = Some(VoteDetail {
            tally: tally.counts.clone(),
            discarded_rounds: tally.discarded,
            winner: tally.winner,
            defaulted: tally.defaulted,
            judged_score: Some(judged),
        });
    }
}

fn identity(s: &str) -> String {
    s.trim().to_string()
}

/// Records `x` against the controller; advances the temperature unless this
/// was the last step.
fn settle(controller: &mut Controller, swarm: &mut SwarmState, step: &mut StepTranscript, x: f64, last: bool) -> Result<(), ControllerError> {
    step.pb_before = controller.personal_best();
    step.gb_before = swarm.global_best;
    if !last {
        step.next_temperature = Some(controller.advance(x, swarm.global_best_or(x))?);
    }
    controller.observe_best(x);
    swarm.personal_bests[0] = controller.personal_best();
    update_global_best(swarm);
    step.pb_after = controller.personal_best();
    step.gb_after = swarm.global_best;
    Ok(())
}

fn plans_then_passages(
    run: &mut Run<'_>,
    controller: &mut Controller,
    swarm: &mut SwarmState,
) -> Result<Option<(String, u64, CoherencyScore)>, BackendError> {
    let config = run.config.clone();
    let instance = run.instance;

    // step 1: plans
    let t1 = controller.temperature();
    run.steps.push(StepTranscript::new(1, t1));
    let request = CompletionRequest::new(TASK_NAME, Phase::Plan, instance.id.clone(), plan_prompt(instance))
        .temperature(t1)
        .seed(derive_seed(&[run.seed, 0, Phase::Plan.seed_tag(), 0]));
    let (mut plans, tally) = run.generate_and_vote(request, config.plans, "plan", 1, 0, 1, identity)?;
    if plans.is_empty() {
        return Ok(None);
    }
    let winner = tally.winner;
    let judged: Vec<usize> = match config.plan_score {
        PlanScore::Winner => vec![winner],
        PlanScore::MaxAll => (0..plans.len()).collect(),
    };
    let mut x1 = i64::MIN;
    for i in judged {
        let score = run.judge(&plans[i].content.clone(), plans[i].id)?;
        plans[i].value = Some(score.value as f64);
        x1 = x1.max(score.value);
    }
    run.finish_step(&plans, &tally, x1);
    settle(controller, swarm, run.step(), x1 as f64, false).expect("finite score");

    // step 2: passages from the winning plan
    let plan = &plans[winner];
    let t2 = controller.temperature();
    run.steps.push(StepTranscript::new(2, t2));
    let request = CompletionRequest::new(TASK_NAME, Phase::Write, plan.content.clone(), write_prompt(instance, &plan.content))
        .temperature(t2)
        .seed(derive_seed(&[run.seed, plan.id, Phase::Write.seed_tag(), 0]));
    let first = plans.iter().map(|n| n.id).max().unwrap_or(0) + 1;
    let (mut passages, tally) = run.generate_and_vote(request, config.passages, "passage", first, plan.id, 2, identity)?;
    if passages.is_empty() {
        return Ok(None);
    }
    let best = &mut passages[tally.winner];
    let score = run.judge(&best.content.clone(), best.id)?;
    best.value = Some(score.value as f64);
    let (text, id) = (best.content.clone(), best.id);
    run.finish_step(&passages, &tally, score.value);
    settle(controller, swarm, run.step(), score.value as f64, true).expect("finite score");
    Ok(Some((text, id, score)))
}

fn outcome(
    instance: &WritingInstance,
    steps: Vec<StepTranscript>,
    counters: Counters,
    ledger: UsageLedger,
    seed: u64,
    history: Vec<crate::controller::HistoryEntry>,
    result: Result<Option<(String, u64, CoherencyScore)>, BackendError>,
) -> WritingOutcome {
    let (status, done) = match result {
        Ok(Some(done)) => (TreeStatus::Complete, Some(done)),
        Ok(None) => (TreeStatus::Exhausted { step: steps.len() }, None),
        Err(e) => (
            TreeStatus::Aborted {
                step: steps.len(),
                error: format!("{} ({})", e, e.category()),
            },
            None,
        ),
    };
    let final_beam = steps
        .iter()
        .rev()
        .find(|s| !s.beam.is_empty())
        .map(|s| s.candidates.iter().filter(|c| s.beam.contains(&c.id)).cloned().collect())
        .unwrap_or_default();
    let complete = !matches!(status, TreeStatus::Aborted { .. });
    let (passage, score, answer) = match done {
        Some((text, id, score)) => (
            Some(text.clone()),
            Some(score),
            Some(AnswerChoice {
                tree_index: 0,
                node_id: id,
                text,
                value: Some(score.value as f64),
            }),
        ),
        None => (None, None, None),
    };
    let check = passage.as_deref().map(|p| validate_passage(p, instance));
    WritingOutcome {
        result: SearchResult {
            trees: vec![TreeTranscript {
                tree_index: 0,
                seed,
                status,
                steps,
                history,
                final_beam,
            }],
            answer,
            usage: ledger,
            counters,
            complete,
        },
        passage,
        score,
        check,
    }
}

/// Two-step plan/passage pipeline: each step generates candidates at the
/// controller's temperature and picks one by vote; the judged plan score
/// drives the single temperature update between the steps.
pub fn run_writing(
    instance: &WritingInstance,
    backend: &dyn Backend,
    mut controller: Controller,
    config: &WritingConfig,
    seed: u64,
) -> WritingOutcome {
    let mut ledger = UsageLedger::new();
    let mut swarm = SwarmState::new(1).expect("one tree");
    let mut run = Run {
        instance,
        config,
        seed,
        caller: Caller {
            backend,
            ledger: &mut ledger,
        },
        counters: Counters::new(),
        steps: Vec::new(),
    };
    let result = plans_then_passages(&mut run, &mut controller, &mut swarm);
    let Run { steps, counters, .. } = run;
    let history = controller.state().history.clone();
    outcome(instance, steps, counters, ledger, seed, history, result)
}

/// Single-prompt passage, then judged.
pub fn run_writing_baseline(
    instance: &WritingInstance,
    backend: &dyn Backend,
    kind: Baseline,
    temperature: f64,
    config: &WritingConfig,
    seed: u64,
) -> WritingOutcome {
    let mut ledger = UsageLedger::new();
    let mut run = Run {
        instance,
        config,
        seed,
        caller: Caller {
            backend,
            ledger: &mut ledger,
        },
        counters: Counters::new(),
        steps: vec![StepTranscript::new(1, temperature)],
    };
    let (prefix, prompt) = match kind {
        Baseline::Io => ("io", io_prompt(instance)),
        Baseline::Cot => ("cot", cot_prompt(instance)),
    };
    let request = CompletionRequest::new(TASK_NAME, Phase::Write, format!("{prefix}:{}", instance.id), prompt)
        .temperature(temperature)
        .seed(derive_seed(&[seed, 0, Phase::Write.seed_tag(), 0]));
    let result = (|| {
        let samples = run.call(request, Some(0))?;
        let text = extract_passage(samples.first().map(String::as_str).unwrap_or(""));
        let score = run.judge(&text, 1)?;
        let step = run.step();
        step.candidates.push(ThoughtNode {
            id: 1,
            parent_id: Some(0),
            depth: 1,
            content: text.clone(),
            value: Some(score.value as f64),
            temperature_used: temperature,
            value_labels: Vec::new(),
        });
        step.beam.push(1);
        step.x = Some(score.value as f64);
        Ok(Some((text, 1, score)))
    })();
    let Run { steps, counters, .. } = run;
    outcome(instance, steps, counters, ledger, seed, Vec::new(), result)
}
