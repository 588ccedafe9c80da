//! Breadth-first beam search over model-proposed thoughts.
//!
//! Every step of every tree runs expand, evaluate, select at the tree's
//! current temperature. Trees of a swarm move in lockstep: all of them finish
//! step `s` before any starts `s + 1`, and the coordinator folds their
//! personal bests into the global best at that barrier.

use crate::backend::{complete_metered, derive_seed, Backend, CompletionRequest, Phase, UsageLedger};
use crate::controller::{update_global_best, Controller, ControllerError, SwarmState};
use crate::record::{
    bump, counters, merge_counters, AnswerChoice, CallRecord, Counters, SearchResult, StepTranscript,
    ThoughtNode, TreeStatus, TreeTranscript,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

/// One parsed value judgment.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSample {
    pub label: String,
    pub score: f64,
    /// The text had no recognizable judgment; `score` is the task fallback.
    pub fallback: bool,
}

/// What a task supplies to the search: prompts, parsers and the terminal and
/// answer rules. Parsers must be total.
pub trait Task: Send + Sync {
    type State: Clone + Send + Sync;

    fn name(&self) -> &str;
    fn root(&self) -> Self::State;
    /// Text of the partial solution.
    fn content(&self, state: &Self::State) -> String;
    /// Key the simulated model matches rules on.
    fn state_key(&self, state: &Self::State) -> String;
    fn propose_prompt(&self, state: &Self::State) -> String;
    fn value_prompt(&self, state: &Self::State) -> String;
    /// Parses one proposal line; `Err` carries a reject reason code.
    fn parse_proposal(&self, state: &Self::State, line: &str) -> Result<Self::State, String>;
    fn parse_value(&self, text: &str) -> ValueSample;
    fn is_terminal(&self, state: &Self::State) -> bool;
    fn extract_answer(&self, state: &Self::State) -> Option<String>;
    fn io_prompt(&self) -> String;
    fn cot_prompt(&self) -> String;
    fn parse_final_answer(&self, text: &str) -> Option<String>;
}

/// How a step's beam collapses to the single `x` the controller sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Max,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub depth_limit: usize,
    pub beam_width: usize,
    pub value_samples: usize,
    pub tree_count: usize,
    /// Samples requested from each propose call.
    pub proposals_per_node: usize,
    pub aggregation: Aggregation,
    pub max_output: u32,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            depth_limit: 3,
            beam_width: 5,
            value_samples: 3,
            tree_count: 1,
            proposals_per_node: 8,
            aggregation: Aggregation::Max,
            max_output: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Controller(#[from] ControllerError),
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let checks = [
            ("depth_limit", self.depth_limit),
            ("beam_width", self.beam_width),
            ("value_samples", self.value_samples),
            ("tree_count", self.tree_count),
            ("proposals_per_node", self.proposals_per_node),
        ];
        for (name, v) in checks {
            if v == 0 {
                return Err(SearchError::InvalidConfig(format!("{name} must be >= 1")));
            }
        }
        Ok(())
    }

    pub fn tree_seed(&self, tree_index: usize) -> u64 {
        self.seed.wrapping_add(tree_index as u64)
    }
}

/// The `b` highest-valued nodes, ties broken by ascending id.
pub fn select_beam(nodes: &[ThoughtNode], beam_width: usize) -> Vec<ThoughtNode> {
    let mut sorted: Vec<ThoughtNode> = nodes.to_vec();
    sorted.sort_by(|a, b| {
        let va = a.value.unwrap_or(f64::NEG_INFINITY);
        let vb = b.value.unwrap_or(f64::NEG_INFINITY);
        vb.total_cmp(&va).then(a.id.cmp(&b.id))
    });
    sorted.truncate(beam_width);
    sorted
}

pub fn aggregate(values: &[f64], how: Aggregation) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    Some(match how {
        Aggregation::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Aggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
    })
}

/// Backend call bound to a ledger and a call log.
pub(crate) struct Caller<'a> {
    pub backend: &'a dyn Backend,
    pub ledger: &'a mut UsageLedger,
}

impl Caller<'_> {
    pub fn call(
        &mut self,
        request: CompletionRequest,
        node_id: Option<u64>,
        log: &mut Vec<CallRecord>,
    ) -> Result<Vec<String>, crate::backend::BackendError> {
        let response = complete_metered(self.backend, self.ledger, &request)?;
        log.push(CallRecord {
            phase: request.phase,
            node_id,
            state_key: request.state_key,
            prompt: request.prompt,
            temperature: request.temperature,
            sample_count: request.sample_count,
            seed: request.seed,
            samples: response.samples.clone(),
            usage: response.usage,
            estimated: response.estimated,
            retries: response.retries,
        });
        Ok(response.samples)
    }
}

/// Expands one node: one propose call, every non-empty line of every sample
/// parsed into a child. Duplicate lines within the node are skipped; rejected
/// lines are counted by reason. Children get ids from `next_id` in order.
#[allow(clippy::too_many_arguments)]
pub(crate) fn expand_node<T: Task>(
    task: &T,
    caller: &mut Caller<'_>,
    node: &ThoughtNode,
    state: &T::State,
    temperature: f64,
    config: &SearchConfig,
    tree_seed: u64,
    next_id: &mut u64,
    step: &mut StepTranscript,
    counters: &mut Counters,
) -> Result<Vec<(ThoughtNode, T::State)>, crate::backend::BackendError> {
    if task.is_terminal(state) {
        return Ok(Vec::new());
    }
    let mut request = CompletionRequest::new(
        task.name(),
        Phase::Propose,
        task.state_key(state),
        task.propose_prompt(state),
    )
    .temperature(temperature)
    .samples(config.proposals_per_node)
    .seed(derive_seed(&[tree_seed, node.id, Phase::Propose.seed_tag(), 0]));
    request.max_output = config.max_output;
    let samples = caller.call(request, Some(node.id), &mut step.calls)?;
    let mut seen = HashSet::new();
    let mut children = Vec::new();
    for line in samples.iter().flat_map(|s| s.lines()) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match task.parse_proposal(state, line) {
            Ok(child) => {
                let content = task.content(&child);
                if !seen.insert(content.clone()) {
                    bump(counters, counters::PROPOSAL_DUPLICATE);
                    continue;
                }
                let id = *next_id;
                *next_id += 1;
                children.push((
                    ThoughtNode {
                        id,
                        parent_id: Some(node.id),
                        depth: node.depth + 1,
                        content,
                        value: None,
                        temperature_used: temperature,
                        value_labels: Vec::new(),
                    },
                    child,
                ));
            }
            Err(code) => {
                bump(counters, &counters::proposal_rejected(&code));
                *step.rejects.entry(code).or_default() += 1;
            }
        }
    }
    Ok(children)
}

/// Values each candidate with `k` independent single-sample calls; the node
/// value is the mean of the mapped samples.
#[allow(clippy::too_many_arguments)]
pub(crate) fn evaluate_candidates<T: Task>(
    task: &T,
    caller: &mut Caller<'_>,
    candidates: &mut [(ThoughtNode, T::State)],
    temperature: f64,
    config: &SearchConfig,
    tree_seed: u64,
    step: &mut StepTranscript,
    counters: &mut Counters,
) -> Result<(), crate::backend::BackendError> {
    for (node, state) in candidates.iter_mut() {
        let mut total = 0.0;
        for j in 0..config.value_samples {
            let mut request = CompletionRequest::new(
                task.name(),
                Phase::Value,
                task.state_key(state),
                task.value_prompt(state),
            )
            .temperature(temperature)
            .seed(derive_seed(&[tree_seed, node.id, Phase::Value.seed_tag(), j as u64]));
            request.max_output = config.max_output;
            let samples = caller.call(request, Some(node.id), &mut step.calls)?;
            let sample = task.parse_value(samples.first().map(String::as_str).unwrap_or(""));
            if sample.fallback {
                bump(counters, counters::VALUE_FALLBACK);
            }
            total += sample.score;
            node.value_labels.push(sample.label);
        }
        node.value = Some(total / config.value_samples as f64);
    }
    Ok(())
}

struct Tree<S> {
    index: usize,
    seed: u64,
    controller: Controller,
    frontier: Vec<(ThoughtNode, S)>,
    next_id: u64,
    status: Option<TreeStatus>,
    steps: Vec<StepTranscript>,
    final_beam: Vec<ThoughtNode>,
    ledger: UsageLedger,
    counters: Counters,
}

impl<S: Clone> Tree<S> {
    fn new<T: Task<State = S>>(task: &T, index: usize, seed: u64, controller: Controller) -> Self {
        let root_state = task.root();
        let root = ThoughtNode {
            id: 0,
            parent_id: None,
            depth: 0,
            content: task.content(&root_state),
            value: None,
            temperature_used: controller.temperature(),
            value_labels: Vec::new(),
        };
        Self {
            index,
            seed,
            controller,
            frontier: vec![(root, root_state)],
            next_id: 1,
            status: None,
            steps: Vec::new(),
            final_beam: Vec::new(),
            ledger: UsageLedger::new(),
            counters: Counters::new(),
        }
    }

    fn running(&self) -> bool {
        self.status.is_none()
    }
}

/// One expand/evaluate/select round. Returns the step's aggregated value, or
/// `None` when the tree is not running or stops during this step.
fn step_tree<T: Task>(task: &T, backend: &dyn Backend, config: &SearchConfig, tree: &mut Tree<T::State>, step_no: usize) -> Option<f64> {
    if !tree.running() {
        return None;
    }
    let temperature = tree.controller.temperature();
    let mut step = StepTranscript::new(step_no, temperature);
    let mut caller = Caller {
        backend,
        ledger: &mut tree.ledger,
    };
    let mut candidates = Vec::new();
    for (node, state) in &tree.frontier {
        match expand_node(
            task,
            &mut caller,
            node,
            state,
            temperature,
            config,
            tree.seed,
            &mut tree.next_id,
            &mut step,
            &mut tree.counters,
        ) {
            Ok(children) => candidates.extend(children),
            Err(e) => {
                tree.status = Some(TreeStatus::Aborted {
                    step: step_no,
                    error: format!("{} ({})", e, e.category()),
                });
                tree.steps.push(step);
                return None;
            }
        }
    }
    if candidates.is_empty() {
        tree.status = Some(TreeStatus::Exhausted { step: step_no });
        tree.steps.push(step);
        return None;
    }
    if let Err(e) = evaluate_candidates(
        task,
        &mut caller,
        &mut candidates,
        temperature,
        config,
        tree.seed,
        &mut step,
        &mut tree.counters,
    ) {
        step.candidates = candidates.into_iter().map(|c| c.0).collect();
        tree.status = Some(TreeStatus::Aborted {
            step: step_no,
            error: format!("{} ({})", e, e.category()),
        });
        tree.steps.push(step);
        return None;
    }
    let nodes: Vec<ThoughtNode> = candidates.iter().map(|c| c.0.clone()).collect();
    let beam = select_beam(&nodes, config.beam_width);
    let beam_ids: Vec<u64> = beam.iter().map(|n| n.id).collect();
    let mut states: Vec<Option<T::State>> = candidates.into_iter().map(|c| Some(c.1)).collect();
    tree.frontier = beam
        .iter()
        .map(|n| {
            let pos = nodes.iter().position(|m| m.id == n.id).unwrap();
            (n.clone(), states[pos].take().unwrap())
        })
        .collect();
    let values: Vec<f64> = beam.iter().filter_map(|n| n.value).collect();
    let x = aggregate(&values, config.aggregation);
    step.candidates = nodes;
    step.beam = beam_ids;
    step.x = x;
    tree.final_beam = beam;
    tree.steps.push(step);
    x
}

/// Lockstep driver shared by [`run_search`] and [`run_swarm`].
fn run_trees<T: Task>(
    task: &T,
    backend: &dyn Backend,
    controllers: Vec<Controller>,
    config: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    config.validate()?;
    let mut swarm = SwarmState::new(controllers.len())?;
    let mut trees: Vec<Tree<T::State>> = controllers
        .into_iter()
        .enumerate()
        .map(|(i, c)| Tree::new(task, i, config.tree_seed(i), c))
        .collect();

    for step_no in 1..=config.depth_limit {
        if !trees.iter().any(Tree::running) {
            break;
        }
        let xs: Vec<Option<f64>> = trees
            .par_iter_mut()
            .map(|tree| step_tree(task, backend, config, tree, step_no))
            .collect();

        // barrier: temperatures from pre-step bests, then pb, then gb
        let gb_before = swarm.global_best;
        let last = step_no == config.depth_limit;
        for (tree, x) in trees.iter_mut().zip(&xs) {
            let Some(x) = *x else { continue };
            let pb_before = tree.controller.personal_best();
            let next = if last {
                None
            } else {
                Some(tree.controller.advance(x, swarm.global_best_or(x))?)
            };
            tree.controller.observe_best(x);
            swarm.personal_bests[tree.index] = tree.controller.personal_best();
            let step = tree.steps.last_mut().expect("step recorded");
            step.pb_before = pb_before;
            step.gb_before = gb_before;
            step.next_temperature = next;
        }
        update_global_best(&mut swarm);
        for (tree, x) in trees.iter_mut().zip(&xs) {
            if x.is_some() {
                let step = tree.steps.last_mut().unwrap();
                step.pb_after = tree.controller.personal_best();
                step.gb_after = swarm.global_best;
            }
        }
    }

    let mut usage = UsageLedger::new();
    let mut all_counters = Counters::new();
    let mut transcripts = Vec::with_capacity(trees.len());
    let mut answer: Option<AnswerChoice> = None;
    for tree in trees {
        usage.merge(&tree.ledger);
        merge_counters(&mut all_counters, &tree.counters);
        // the frontier holds the states of the final beam, best first
        for (node, state) in &tree.frontier {
            if node.value.is_none() {
                continue;
            }
            let Some(text) = task.extract_answer(state) else { continue };
            let better = match &answer {
                None => true,
                Some(a) => node.value > a.value,
            };
            if better {
                answer = Some(AnswerChoice {
                    tree_index: tree.index,
                    node_id: node.id,
                    text,
                    value: node.value,
                });
            }
            break;
        }
        transcripts.push(TreeTranscript {
            tree_index: tree.index,
            seed: tree.seed,
            status: tree.status.unwrap_or(TreeStatus::Complete),
            steps: tree.steps,
            history: tree.controller.state().history.clone(),
            final_beam: tree.final_beam,
        });
    }
    let complete = transcripts
        .iter()
        .all(|t| !matches!(t.status, TreeStatus::Aborted { .. }));
    Ok(SearchResult {
        trees: transcripts,
        answer,
        usage,
        counters: all_counters,
        complete,
    })
}

/// Single-tree search with the given controller.
pub fn run_search<T: Task>(
    task: &T,
    backend: &dyn Backend,
    controller: Controller,
    config: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    let config = SearchConfig {
        tree_count: 1,
        ..config.clone()
    };
    run_trees(task, backend, vec![controller], &config)
}

/// `config.tree_count` trees in lockstep; `make_controller(i)` builds tree
/// `i`'s controller.
pub fn run_swarm<T: Task>(
    task: &T,
    backend: &dyn Backend,
    mut make_controller: impl FnMut(usize) -> Result<Controller, ControllerError>,
    config: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    config.validate()?;
    let controllers = (0..config.tree_count)
        .map(&mut make_controller)
        .collect::<Result<Vec<_>, _>>()?;
    run_trees(task, backend, controllers, config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    Io,
    Cot,
}

impl Baseline {
    fn key_prefix(self) -> &'static str {
        match self {
            Baseline::Io => "io",
            Baseline::Cot => "cot",
        }
    }
}

/// Single-prompt baselines: one generation call at `temperature`, answer
/// parsed from the response. No controller is involved.
pub fn run_baseline<T: Task>(
    task: &T,
    backend: &dyn Backend,
    kind: Baseline,
    temperature: f64,
    config: &SearchConfig,
) -> SearchResult {
    let root = task.root();
    let prompt = match kind {
        Baseline::Io => task.io_prompt(),
        Baseline::Cot => task.cot_prompt(),
    };
    let mut ledger = UsageLedger::new();
    let mut counters = Counters::new();
    let mut step = StepTranscript::new(1, temperature);
    let seed = config.tree_seed(0);
    let mut request = CompletionRequest::new(
        task.name(),
        Phase::Answer,
        format!("{}:{}", kind.key_prefix(), task.state_key(&root)),
        prompt,
    )
    .temperature(temperature)
    .seed(derive_seed(&[seed, 0, Phase::Answer.seed_tag(), 0]));
    request.max_output = config.max_output;
    let mut caller = Caller {
        backend,
        ledger: &mut ledger,
    };
    let (status, answer) = match caller.call(request, Some(0), &mut step.calls) {
        Ok(samples) => {
            let raw = samples.into_iter().next().unwrap_or_default();
            let parsed = task.parse_final_answer(&raw);
            if parsed.is_none() {
                bump(&mut counters, counters::ANSWER_UNPARSED);
            }
            let node = ThoughtNode {
                id: 1,
                parent_id: Some(0),
                depth: 1,
                content: raw,
                value: None,
                temperature_used: temperature,
                value_labels: Vec::new(),
            };
            step.candidates.push(node);
            step.beam.push(1);
            let answer = parsed.map(|text| AnswerChoice {
                tree_index: 0,
                node_id: 1,
                text,
                value: None,
            });
            (TreeStatus::Complete, answer)
        }
        Err(e) => (
            TreeStatus::Aborted {
                step: 1,
                error: format!("{} ({})", e, e.category()),
            },
            None,
        ),
    };
    let complete = status == TreeStatus::Complete;
    let final_beam = step.candidates.clone();
    SearchResult {
        trees: vec![TreeTranscript {
            tree_index: 0,
            seed,
            status,
            steps: vec![step],
            history: Vec::new(),
            final_beam,
        }],
        answer,
        usage: ledger,
        counters,
        complete,
    }
}

pub fn run_io_baseline<T: Task>(task: &T, backend: &dyn Backend, temperature: f64, config: &SearchConfig) -> SearchResult {
    run_baseline(task, backend, Baseline::Io, temperature, config)
}

pub fn run_cot_baseline<T: Task>(task: &T, backend: &dyn Backend, temperature: f64, config: &SearchConfig) -> SearchResult {
    run_baseline(task, backend, Baseline::Cot, temperature, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: u64, value: f64) -> ThoughtNode {
        ThoughtNode {
            id,
            parent_id: Some(0),
            depth: 1,
            content: String::new(),
            value: Some(value),
            temperature_used: 0.7,
            value_labels: Vec::new(),
        }
    }

    #[test]
    fn beam_keeps_top_values() {
        let nodes: Vec<ThoughtNode> = [0.1, 0.9, 0.3, 0.8, 0.5, 0.7, 0.2]
            .iter()
            .enumerate()
            .map(|(i, &v)| node(i as u64 + 1, v))
            .collect();
        let ids: Vec<u64> = select_beam(&nodes, 5).iter().map(|n| n.id).collect();
        assert_eq!(ids, vec![2, 4, 6, 5, 3]);
        assert_eq!(select_beam(&nodes[..3], 5).len(), 3);
    }

    #[test]
    fn beam_ties_go_to_lower_id() {
        let nodes = vec![node(9, 0.5), node(1, 0.9), node(4, 0.5)];
        let ids: Vec<u64> = select_beam(&nodes, 2).iter().map(|n| n.id).collect();
        assert_eq!(ids, vec![1, 4]);
    }

    #[test]
    fn aggregation() {
        assert_eq!(aggregate(&[0.2, 0.9, 0.4], Aggregation::Max), Some(0.9));
        assert_eq!(aggregate(&[0.2, 0.4], Aggregation::Mean), Some(0.30000000000000004));
        assert_eq!(aggregate(&[], Aggregation::Max), None);
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().validate().is_ok());
        let bad = SearchConfig {
            beam_width: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
