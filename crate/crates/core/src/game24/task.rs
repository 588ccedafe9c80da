//! Search-facing side of the puzzle: states, prompts, and the parsers that
//! turn model text into moves and value labels.

use super::expr::{extract_answer_text, parse_expression, verify_expression, Expr};
use super::number::{format_number, format_numbers, int, parse_number, Op, Rational};
use crate::search::{Task, ValueSample};
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::LazyLock;

pub const TASK_NAME: &str = "game24";

/// One applied operation, `a op b = result`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceOp {
    pub a: Rational,
    pub op: Op,
    pub b: Rational,
    pub result: Rational,
}

impl fmt::Display for TraceOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} = {}",
            format_number(&self.a),
            self.op,
            format_number(&self.b),
            format_number(&self.result)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Game24State {
    pub origin: [i64; 4],
    /// Origin order at the root, ascending after the first move.
    pub remaining: Vec<Rational>,
    /// Expression that produced each remaining number, parallel to it.
    pub exprs: Vec<Expr>,
    pub trace: Vec<TraceOp>,
}

impl Game24State {
    pub fn new(origin: [i64; 4]) -> Self {
        Self {
            origin,
            remaining: origin.iter().map(|&n| int(n)).collect(),
            exprs: origin.iter().map(|&n| Expr::Num(n)).collect(),
            trace: Vec::new(),
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.remaining.len() <= 1
    }

    /// Sorted remaining numbers, e.g. `"2 2 6"`.
    pub fn key(&self) -> String {
        let mut sorted = self.remaining.clone();
        sorted.sort();
        format_numbers(&sorted)
    }

    pub fn apply(&self, a: Rational, op: Op, b: Rational) -> Result<Game24State, ProposalReject> {
        let i = self
            .remaining
            .iter()
            .position(|v| *v == a)
            .ok_or(ProposalReject::NotInRemaining)?;
        let j = self
            .remaining
            .iter()
            .enumerate()
            .position(|(k, v)| k != i && *v == b)
            .ok_or(ProposalReject::NotInRemaining)?;
        let result = op.apply(a, b).ok_or(if op == Op::Div && b == int(0) {
            ProposalReject::DivisionByZero
        } else {
            ProposalReject::Overflow
        })?;
        let mut items: Vec<(Rational, Expr)> = self
            .remaining
            .iter()
            .zip(&self.exprs)
            .enumerate()
            .filter(|(k, _)| *k != i && *k != j)
            .map(|(_, (v, e))| (*v, e.clone()))
            .collect();
        items.push((result, Expr::bin(op, self.exprs[i].clone(), self.exprs[j].clone())));
        items.sort_by(|x, y| x.0.cmp(&y.0).then_with(|| x.1.to_string().cmp(&y.1.to_string())));
        let mut trace = self.trace.clone();
        trace.push(TraceOp { a, op, b, result });
        Ok(Game24State {
            origin: self.origin,
            remaining: items.iter().map(|x| x.0).collect(),
            exprs: items.into_iter().map(|x| x.1).collect(),
            trace,
        })
    }

    /// The normalized proposal line that produced this state.
    pub fn last_line(&self) -> Option<String> {
        self.trace
            .last()
            .map(|op| format!("{op} (left: {})", format_numbers(&self.remaining)))
    }

    pub fn content(&self) -> String {
        let mut replay = Game24State::new(self.origin);
        let mut lines = Vec::new();
        for op in &self.trace {
            replay = replay.apply(op.a, op.op, op.b).expect("trace replays");
            lines.push(replay.last_line().unwrap());
        }
        lines.join("\n")
    }

    /// The expression for the single remaining number, once terminal.
    pub fn answer(&self) -> Option<&Expr> {
        (self.remaining.len() == 1).then(|| &self.exprs[0])
    }
}

/// Replays `trace` from `origin` with exact arithmetic and returns the
/// remaining multiset, sorted.
pub fn replay_trace(origin: [i64; 4], trace: &[TraceOp]) -> Result<Vec<Rational>, ProposalReject> {
    let mut state = Game24State::new(origin);
    for op in trace {
        let next = state.apply(op.a, op.op, op.b)?;
        if next.trace.last().unwrap().result != op.result {
            return Err(ProposalReject::ArithmeticMismatch);
        }
        state = next;
    }
    let mut remaining = state.remaining;
    remaining.sort();
    Ok(remaining)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ProposalReject {
    #[error("malformed")]
    Malformed,
    #[error("not-in-remaining")]
    NotInRemaining,
    #[error("arithmetic-mismatch")]
    ArithmeticMismatch,
    #[error("division-by-zero")]
    DivisionByZero,
    #[error("overflow")]
    Overflow,
    #[error("terminal")]
    Terminal,
}

impl ProposalReject {
    pub fn code(&self) -> &'static str {
        match self {
            ProposalReject::Malformed => "malformed",
            ProposalReject::NotInRemaining => "not-in-remaining",
            ProposalReject::ArithmeticMismatch => "arithmetic-mismatch",
            ProposalReject::DivisionByZero => "division-by-zero",
            ProposalReject::Overflow => "overflow",
            ProposalReject::Terminal => "terminal",
        }
    }
}

static PROPOSAL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^\s*(?:[-*•]|\d+[.)])?\s*(-?[0-9./]+)\s*([+\-*/×÷−])\s*(-?[0-9./]+)\s*=\s*(-?[0-9./]+)\s*(?:\(\s*left\s*:[^)]*\))?\s*$",
    )
    .unwrap()
});

/// Parses `"a op b = c (left: ...)"` against `state`. The stated result must
/// match exact arithmetic; the `left` list is ignored and recomputed.
pub fn parse_proposal(state: &Game24State, line: &str) -> Result<Game24State, ProposalReject> {
    if state.is_terminal() {
        return Err(ProposalReject::Terminal);
    }
    let caps = PROPOSAL.captures(line).ok_or(ProposalReject::Malformed)?;
    let a = parse_number(&caps[1]).ok_or(ProposalReject::Malformed)?;
    let op = caps[2]
        .chars()
        .next()
        .and_then(Op::from_symbol)
        .ok_or(ProposalReject::Malformed)?;
    let b = parse_number(&caps[3]).ok_or(ProposalReject::Malformed)?;
    let claimed = parse_number(&caps[4]).ok_or(ProposalReject::Malformed)?;
    if op == Op::Div && b == int(0) {
        return Err(ProposalReject::DivisionByZero);
    }
    let next = state.apply(a, op, b)?;
    if next.trace.last().unwrap().result != claimed {
        return Err(ProposalReject::ArithmeticMismatch);
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueLabel {
    Sure,
    Maybe,
    Impossible,
}

impl ValueLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueLabel::Sure => "sure",
            ValueLabel::Maybe => "maybe",
            ValueLabel::Impossible => "impossible",
        }
    }
}

static LABEL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(sure|maybe|likely|impossible)\b").unwrap());

/// Last label keyword in `text` (`likely` reads as maybe). Without any
/// keyword the result is `Maybe` and the flag is set.
pub fn classify_value(text: &str) -> (ValueLabel, bool) {
    match LABEL.find_iter(text).last() {
        Some(m) => {
            let label = match m.as_str().to_lowercase().as_str() {
                "sure" => ValueLabel::Sure,
                "impossible" => ValueLabel::Impossible,
                _ => ValueLabel::Maybe,
            };
            (label, false)
        }
        None => (ValueLabel::Maybe, true),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueMapping {
    pub sure: f64,
    pub maybe: f64,
    pub impossible: f64,
}

impl Default for ValueMapping {
    fn default() -> Self {
        Self {
            sure: 1.0,
            maybe: 0.5,
            impossible: 0.0,
        }
    }
}

impl ValueMapping {
    pub fn value_to_score(&self, label: ValueLabel) -> f64 {
        match label {
            ValueLabel::Sure => self.sure,
            ValueLabel::Maybe => self.maybe,
            ValueLabel::Impossible => self.impossible,
        }
    }
}

const PROPOSE_EXAMPLE: &str = "\
Input: 3 9 4 12
Possible next steps:
3 + 9 = 12 (left: 4 12 12)
12 / 4 = 3 (left: 3 3 9)
9 - 3 = 6 (left: 4 6 12)
4 * 3 = 12 (left: 9 12 12)
12 - 9 = 3 (left: 3 3 4)
12 + 4 = 16 (left: 3 9 16)
9 / 3 = 3 (left: 3 4 12)
12 - 4 = 8 (left: 3 8 9)";

const VALUE_EXAMPLE: &str = "\
10 14
10 + 14 = 24
sure
11 12
11 + 12 = 23
12 - 11 = 1
11 * 12 = 132
11 / 12 = 0.91
impossible
4 4 10
4 * 10 - 4 = 36
(10 - 4) * 4 = 24
sure
5 7 8
5 + 7 + 8 = 20
(8 - 5) * 7 = 21
I cannot obtain 24 now, but numbers are within a reasonable range
maybe
1 3 3
1 * 3 * 3 = 9
(1 + 3) * 3 = 12
1 3 3 are all too small
impossible";

pub fn build_propose_prompt(state: &Game24State) -> String {
    if state.is_terminal() {
        let steps = state.content();
        return format!(
            "Use numbers and basic arithmetic operations (+ - * /) to obtain 24. \
             Each input number must be used exactly once. Rewrite the steps below as a single \
             expression.\nInput: {}\nSteps:\n{steps}\nAnswer:",
            state.origin.map(|n| n.to_string()).join(" ")
        );
    }
    format!(
        "{PROPOSE_EXAMPLE}\nInput: {}\nPossible next steps:\n",
        format_numbers(&state.remaining)
    )
}

pub fn build_value_prompt(state: &Game24State) -> String {
    format!(
        "Evaluate if given numbers can reach 24 (sure/maybe/impossible)\n{VALUE_EXAMPLE}\n{}\n",
        format_numbers(&state.remaining)
    )
}

pub fn build_io_prompt(origin: [i64; 4]) -> String {
    format!(
        "Use numbers and basic arithmetic operations (+ - * /) to obtain 24.\n\
         Input: 4 4 6 8\nAnswer: (4 + 8) * (6 - 4) = 24\n\
         Input: 2 9 10 12\nAnswer: 2 * 12 * (10 - 9) = 24\n\
         Input: {}\nAnswer:",
        origin.map(|n| n.to_string()).join(" ")
    )
}

pub fn build_cot_prompt(origin: [i64; 4]) -> String {
    format!(
        "Use numbers and basic arithmetic operations (+ - * /) to obtain 24. Each step, you are \
         only allowed to choose two of the remaining numbers to obtain a new number.\n\
         Input: 4 4 6 8\nSteps:\n4 + 8 = 12 (left: 4 6 12)\n6 - 4 = 2 (left: 2 12)\n\
         2 * 12 = 24 (left: 24)\nAnswer: (6 - 4) * (4 + 8) = 24\n\
         Input: {}\nSteps:\n",
        origin.map(|n| n.to_string()).join(" ")
    )
}

/// Parses and verifies an answer text against `origin`. Any failure is just
/// "not verified".
pub fn verify_answer(answer: &str, origin: [i64; 4]) -> bool {
    parse_expression(answer).is_ok_and(|e| verify_expression(&e, &origin))
}

/// Game-of-24 task definition.
#[derive(Debug, Clone, PartialEq)]
pub struct Game24Task {
    pub origin: [i64; 4],
    pub mapping: ValueMapping,
}

impl Game24Task {
    pub fn new(origin: [i64; 4]) -> Self {
        Self {
            origin,
            mapping: ValueMapping::default(),
        }
    }
}

impl Task for Game24Task {
    type State = Game24State;

    fn name(&self) -> &str {
        TASK_NAME
    }

    fn root(&self) -> Game24State {
        Game24State::new(self.origin)
    }

    fn content(&self, state: &Game24State) -> String {
        state.content()
    }

    fn state_key(&self, state: &Game24State) -> String {
        state.key()
    }

    fn propose_prompt(&self, state: &Game24State) -> String {
        build_propose_prompt(state)
    }

    fn value_prompt(&self, state: &Game24State) -> String {
        build_value_prompt(state)
    }

    fn parse_proposal(&self, state: &Game24State, line: &str) -> Result<Game24State, String> {
        parse_proposal(state, line).map_err(|e| e.code().to_string())
    }

    fn parse_value(&self, text: &str) -> ValueSample {
        let (label, fallback) = classify_value(text);
        ValueSample {
            label: label.as_str().to_string(),
            score: self.mapping.value_to_score(label),
            fallback,
        }
    }

    fn is_terminal(&self, state: &Game24State) -> bool {
        state.is_terminal()
    }

    fn extract_answer(&self, state: &Game24State) -> Option<String> {
        state.answer().map(|e| e.to_string())
    }

    fn io_prompt(&self) -> String {
        build_io_prompt(self.origin)
    }

    fn cot_prompt(&self) -> String {
        build_cot_prompt(self.origin)
    }

    fn parse_final_answer(&self, text: &str) -> Option<String> {
        extract_answer_text(text)
    }
}
