//! Paper-style tables computed from run records alone.

use crate::backend::{aggregate_cost, format_k, PriceTable};
use crate::experiment::{Instance, Method, RunRecord, TaskKind};
use crate::game24::{canonicalize, extract_answer_text, parse_expression, verify_answer};
use crate::record::counters;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessRow {
    pub method: Method,
    pub runs: usize,
    pub verified: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeFrequency {
    pub form: String,
    pub count: usize,
    pub frequency: f64,
    /// First verified expression of this type, as the model wrote it.
    pub example: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityRow {
    pub instance: String,
    pub method: Method,
    pub runs: usize,
    pub failed: usize,
    /// Descending by frequency; frequencies are over all runs, so they sum
    /// to at most 1.
    pub types: Vec<TypeFrequency>,
}

impl DiversityRow {
    /// `"(0.5, 0.3, 0.2)"`
    pub fn tuple(&self) -> String {
        let parts: Vec<String> = self.types.iter().map(|t| format!("{}", t.frequency)).collect();
        format!("({})", parts.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub method: Method,
    pub runs: usize,
    pub scored: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 with `single` set when only one score.
    pub std: f64,
    pub single: bool,
    pub constraints_met: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub task: TaskKind,
    pub method: Method,
    pub cases: usize,
    pub generate_tokens: f64,
    pub prompt_tokens: f64,
    pub tokens: String,
    pub cost_per_case: f64,
    /// Calls whose usage was estimated from text length.
    pub estimated_calls: u64,
    pub ledger_consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub runs: usize,
    pub incomplete: usize,
    pub success: Vec<SuccessRow>,
    pub diversity: Vec<DiversityRow>,
    pub scores: Vec<ScoreRow>,
    pub cost: Vec<CostRow>,
    pub counters: BTreeMap<String, BTreeMap<String, u64>>,
}

/// Counters always listed, even at zero.
const ALWAYS: &[&str] = &[
    counters::PROPOSAL_DUPLICATE,
    counters::VALUE_FALLBACK,
    counters::VOTE_DISCARDED,
    counters::VOTE_DEFAULTED,
    counters::JUDGE_FALLBACK,
    counters::JUDGE_CLAMPED,
    counters::ANSWER_UNPARSED,
    "incomplete_runs",
];

/// Final answer text from the transcript, re-verified against the instance.
pub fn record_verified(record: &RunRecord) -> bool {
    match (&record.spec.instance, &record.result.answer) {
        (Instance::Game24 { numbers }, Some(a)) => verify_answer(&a.text, *numbers),
        _ => false,
    }
}

/// Coherency score of the final passage, from the transcript.
pub fn record_score(record: &RunRecord) -> Option<f64> {
    match record.spec.instance {
        Instance::CreativeWriting(_) => record.result.answer.as_ref().and_then(|a| a.value),
        _ => None,
    }
}

pub fn report_success(records: &[RunRecord]) -> Vec<SuccessRow> {
    let mut groups: BTreeMap<Method, (usize, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.spec.task() == TaskKind::Game24) {
        let g = groups.entry(r.spec.method).or_default();
        g.0 += 1;
        g.1 += usize::from(record_verified(r));
    }
    groups
        .into_iter()
        .map(|(method, (runs, verified))| SuccessRow {
            method,
            runs,
            verified,
            rate: if runs == 0 { 0.0 } else { verified as f64 / runs as f64 },
        })
        .collect()
}

/// Canonical solution types per (instance, method).
pub fn report_diversity(records: &[RunRecord]) -> Vec<DiversityRow> {
    let mut groups: BTreeMap<(usize, Method), Vec<&RunRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.spec.task() == TaskKind::Game24) {
        groups.entry((r.spec.instance_index, r.spec.method)).or_default().push(r);
    }
    groups
        .into_values()
        .map(|runs| {
            let mut counts: BTreeMap<String, (usize, String)> = BTreeMap::new();
            let mut failed = 0;
            for r in &runs {
                let expr = record_verified(r)
                    .then_some(r.result.answer.as_ref())
                    .flatten()
                    .and_then(|a| extract_answer_text(&a.text))
                    .and_then(|t| parse_expression(&t).ok());
                match expr {
                    Some(e) => {
                        let entry = counts.entry(canonicalize(&e).0).or_insert((0, e.to_string()));
                        entry.0 += 1;
                    }
                    None => failed += 1,
                }
            }
            let total = runs.len();
            let mut types: Vec<TypeFrequency> = counts
                .into_iter()
                .map(|(form, (count, example))| TypeFrequency {
                    form,
                    count,
                    frequency: count as f64 / total as f64,
                    example,
                })
                .collect();
            types.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.form.cmp(&b.form)));
            DiversityRow {
                instance: runs[0].spec.instance.label(),
                method: runs[0].spec.method,
                runs: total,
                failed,
                types,
            }
        })
        .collect()
}

/// Mean and sample standard deviation; `None` for no scores.
pub fn mean_std(scores: &[f64]) -> Option<(f64, f64)> {
    let n = scores.len();
    if n == 0 {
        return None;
    }
    let mean = scores.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Some((mean, 0.0));
    }
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Some((mean, var.sqrt()))
}

pub fn format_mean_std(mean: f64, std: f64) -> String {
    format!("{mean:.2} ± {std:.2}")
}

pub fn report_scores(records: &[RunRecord]) -> Vec<ScoreRow> {
    let mut groups: BTreeMap<Method, Vec<&RunRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.spec.task() == TaskKind::CreativeWriting) {
        groups.entry(r.spec.method).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(method, runs)| {
            let scores: Vec<f64> = runs.iter().filter_map(|r| record_score(r)).collect();
            let (mean, std) = mean_std(&scores).unwrap_or((0.0, 0.0));
            let constraints_met = runs
                .iter()
                .filter(|r| match (&r.spec.instance, &r.result.answer) {
                    (Instance::CreativeWriting(inst), Some(a)) => crate::writing::validate_passage(&a.text, inst).valid,
                    _ => false,
                })
                .count();
            ScoreRow {
                method,
                runs: runs.len(),
                scored: scores.len(),
                mean,
                std,
                single: scores.len() == 1,
                constraints_met,
                label: format_mean_std(mean, std),
            }
        })
        .collect()
}

/// Per-case token averages and cost recomputed from the configured prices.
pub fn report_cost(records: &[RunRecord], prices: &PriceTable) -> Vec<CostRow> {
    let mut groups: BTreeMap<(TaskKind, Method), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.spec.task(), r.spec.method)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((task, method), runs)| {
            let n = runs.len() as f64;
            let mut generate = 0u64;
            let mut prompt = 0u64;
            let mut cost = 0.0;
            let mut estimated = 0;
            let mut consistent = true;
            for r in &runs {
                let c = aggregate_cost(&r.result.usage, prices);
                generate += c.generate_tokens;
                prompt += c.prompt_tokens;
                cost += c.total;
                estimated += r.result.usage.total.estimated_calls;
                consistent &= r.result.usage.is_consistent();
            }
            let (g, p) = (generate as f64 / n, prompt as f64 / n);
            CostRow {
                task,
                method,
                cases: runs.len(),
                generate_tokens: g,
                prompt_tokens: p,
                tokens: format!("{} / {}", format_k(g), format_k(p)),
                cost_per_case: cost / n,
                estimated_calls: estimated,
                ledger_consistent: consistent,
            }
        })
        .collect()
}

pub fn report_counters(records: &[RunRecord]) -> BTreeMap<String, BTreeMap<String, u64>> {
    let mut out: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for r in records {
        let group = out.entry(format!("{}/{}", r.spec.task(), r.spec.method)).or_insert_with(|| {
            ALWAYS.iter().map(|k| (k.to_string(), 0)).collect()
        });
        for (k, v) in &r.result.counters {
            *group.entry(k.clone()).or_default() += v;
        }
        if !r.result.complete {
            *group.entry("incomplete_runs".into()).or_default() += 1;
        }
    }
    out
}

pub fn build_report(records: &[RunRecord], prices: &PriceTable) -> ReportBundle {
    ReportBundle {
        runs: records.len(),
        incomplete: records.iter().filter(|r| !r.result.complete).count(),
        success: report_success(records),
        diversity: report_diversity(records),
        scores: report_scores(records),
        cost: report_cost(records, prices),
        counters: report_counters(records),
    }
}

/// Left-aligned columns padded to the widest cell.
fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<String>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        padded.join("  ").trim_end().to_string()
    };
    let mut out = line(header.iter().map(|h| h.to_string()).collect());
    out.push('\n');
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row.clone()));
        out.push('\n');
    }
    out
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Table name, header, rows.
type Section = (&'static str, Vec<&'static str>, Vec<Vec<String>>);

impl ReportBundle {
    fn sections(&self) -> Vec<Section> {
        let success = self
            .success
            .iter()
            .map(|r| {
                vec![
                    r.method.to_string(),
                    r.runs.to_string(),
                    r.verified.to_string(),
                    format!("{:.0}%", r.rate * 100.0),
                ]
            })
            .collect();
        let diversity = self
            .diversity
            .iter()
            .map(|r| {
                let examples: Vec<&str> = r.types.iter().map(|t| t.example.as_str()).collect();
                vec![
                    r.instance.clone(),
                    r.method.to_string(),
                    r.runs.to_string(),
                    r.failed.to_string(),
                    r.tuple(),
                    examples.join("; "),
                ]
            })
            .collect();
        let scores = self
            .scores
            .iter()
            .map(|r| {
                vec![
                    r.method.to_string(),
                    r.runs.to_string(),
                    r.scored.to_string(),
                    r.label.clone(),
                    if r.single { "single score".into() } else { String::new() },
                    r.constraints_met.to_string(),
                ]
            })
            .collect();
        let cost = self
            .cost
            .iter()
            .map(|r| {
                vec![
                    r.task.to_string(),
                    r.method.to_string(),
                    r.cases.to_string(),
                    r.tokens.clone(),
                    format!("{:.2}", r.cost_per_case),
                    r.estimated_calls.to_string(),
                ]
            })
            .collect();
        let counters = self
            .counters
            .iter()
            .flat_map(|(group, map)| map.iter().map(move |(k, v)| vec![group.clone(), k.clone(), v.to_string()]))
            .collect();
        vec![
            ("success", vec!["method", "runs", "verified", "success"], success),
            (
                "diversity",
                vec!["instance", "method", "runs", "failed", "frequencies", "examples"],
                diversity,
            ),
            ("scores", vec!["method", "runs", "scored", "score", "note", "constraints met"], scores),
            (
                "cost",
                vec!["task", "method", "cases", "generate / prompt tokens", "cost per case", "estimated calls"],
                cost,
            ),
            ("counters", vec!["group", "counter", "count"], counters),
        ]
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("runs: {}  incomplete: {}\n", self.runs, self.incomplete);
        for (name, header, rows) in self.sections() {
            if rows.is_empty() {
                continue;
            }
            let _ = write!(out, "\n[{name}]\n{}", table(&header, &rows));
        }
        out
    }

    /// One block per table, each with its own header, separated by blank lines.
    pub fn render_csv(&self) -> String {
        let mut blocks = Vec::new();
        for (name, header, rows) in self.sections() {
            let mut block = String::new();
            let head: Vec<String> = std::iter::once("table").chain(header).map(csv_cell).collect();
            let _ = writeln!(block, "{}", head.join(","));
            for row in rows {
                let cells: Vec<String> = std::iter::once(name.to_string()).chain(row).map(|c| csv_cell(&c)).collect();
                let _ = writeln!(block, "{}", cells.join(","));
            }
            blocks.push(block);
        }
        blocks.join("\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_arithmetic() {
        let (m, s) = mean_std(&[60.0, 70.0, 80.0]).unwrap();
        assert_eq!(format_mean_std(m, s), "70.00 ± 10.00");
        assert_eq!(mean_std(&[42.0]), Some((42.0, 0.0)));
        assert_eq!(mean_std(&[]), None);
    }

    #[test]
    fn text_table_aligns() {
        let t = table(&["a", "long"], &[vec!["xyz".into(), "1".into()]]);
        assert_eq!(t, "a    long\n---  ----\nxyz  1\n");
    }

    #[test]
    fn csv_quotes() {
        assert_eq!(csv_cell("5.5k / 1.6k"), "5.5k / 1.6k");
        assert_eq!(csv_cell("(0.5, 0.5)"), "\"(0.5, 0.5)\"");
    }
}
