//! The Game of 24: combine four numbers with `+ - * /` into 24.

mod canon;
mod dataset;
mod expr;
mod number;
mod oracle;
mod policy;
mod task;

pub use canon::{canonicalize, CanonicalForm};
pub use dataset::{format_dataset, generate_dataset, parse_dataset, DatasetError, DatasetOptions};
pub use expr::{extract_answer_text, parse_expression, verify_expression, Expr, ParseError};
pub use number::{format_number, int, parse_number, Op, Rational};
pub use oracle::{
    enumerate_expressions, oracle_solve, reduction_solutions, successors, MoveSet, OracleResult,
    Reachability,
};
pub use policy::{cot_key, io_key, OraclePolicy};
pub use task::{
    build_cot_prompt, build_io_prompt, build_propose_prompt, build_value_prompt, classify_value,
    parse_proposal, replay_trace, verify_answer, Game24State, Game24Task, ProposalReject, TraceOp,
    ValueLabel, ValueMapping, TASK_NAME,
};

use std::collections::BTreeMap;

/// Histogram of canonical solution types over verified expressions,
/// normalized to frequencies and sorted by descending frequency (ties by
/// key).
pub fn solution_diversity(expressions: &[Expr]) -> Vec<(CanonicalForm, f64)> {
    let mut counts: BTreeMap<CanonicalForm, usize> = BTreeMap::new();
    for e in expressions {
        *counts.entry(canonicalize(e)).or_default() += 1;
    }
    let total = expressions.len() as f64;
    let mut rows: Vec<(CanonicalForm, usize)> = counts.into_iter().collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    rows.into_iter().map(|(k, c)| (k, c as f64 / total)).collect()
}
