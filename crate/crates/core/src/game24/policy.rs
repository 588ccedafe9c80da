use super::canon::canonicalize;
use super::expr::Expr;
use super::number::{format_number, format_numbers, int, Rational};
use super::oracle::{enumerate_expressions, oracle_solve, successors, MoveSet, Reachability};
use super::task::{Game24State, TASK_NAME};
use crate::backend::{Candidate, Phase, ScriptedPolicy};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet, VecDeque};

/// Builds a scripted model for one instance from the exact solver: moves
/// that keep 24 reachable and correct value judgments get `good_weight`,
/// everything else `decoy_weight`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OraclePolicy {
    pub good_weight: f64,
    pub decoy_weight: f64,
    /// Add one line per state whose stated result is off by one.
    pub arithmetic_slips: bool,
    /// Wrong final answers offered to the single-prompt baselines.
    pub answer_decoys: usize,
}

impl Default for OraclePolicy {
    fn default() -> Self {
        Self {
            good_weight: 2.0,
            decoy_weight: 1.0,
            arithmetic_slips: true,
            answer_decoys: 6,
        }
    }
}

pub fn io_key(state: &Game24State) -> String {
    format!("io:{}", state.key())
}

pub fn cot_key(state: &Game24State) -> String {
    format!("cot:{}", state.key())
}

impl OraclePolicy {
    pub fn build(&self, origin: [i64; 4]) -> ScriptedPolicy {
        let mut policy = ScriptedPolicy::new();
        let mut reach = Reachability::new(MoveSet::NonNegative);
        let root: Vec<Rational> = origin.iter().map(|&n| int(n)).collect();
        let mut queue = VecDeque::from([sorted(root)]);
        let mut seen = HashSet::new();
        while let Some(values) = queue.pop_front() {
            if !seen.insert(values.clone()) {
                continue;
            }
            let key = format_numbers(&values);
            let solvable = reach.can_reach_24(&values);
            policy.add(TASK_NAME, Phase::Value, key.clone(), self.value_candidates(&key, solvable));
            if values.len() == 1 {
                continue;
            }
            let mut lines = Vec::new();
            for (a, op, b, rest) in successors(&values, MoveSet::NonNegative) {
                let c = op.apply(a, b).expect("successor is defined");
                let text = format!(
                    "{} {op} {} = {} (left: {})",
                    format_number(&a),
                    format_number(&b),
                    format_number(&c),
                    format_numbers(&rest)
                );
                let good = reach.can_reach_24(&rest);
                lines.push(Candidate::new(text, if good { self.good_weight } else { self.decoy_weight }));
                queue.push_back(rest);
            }
            if self.arithmetic_slips {
                if let Some((a, op, b, _)) = successors(&values, MoveSet::NonNegative).first() {
                    let wrong = op.apply(*a, *b).unwrap() + int(1);
                    lines.push(Candidate::new(
                        format!("{} {op} {} = {}", format_number(a), format_number(b), format_number(&wrong)),
                        self.decoy_weight,
                    ));
                }
            }
            policy.add(TASK_NAME, Phase::Propose, key, lines);
        }
        self.add_answers(&mut policy, origin);
        policy
    }

    fn value_candidates(&self, key: &str, solvable: bool) -> Vec<Candidate> {
        let (g, d) = (self.good_weight, self.decoy_weight);
        let text = |label: &str| format!("{key}\n{label}");
        if solvable {
            vec![
                Candidate::new(text("sure"), g),
                Candidate::new(text("maybe"), d),
                Candidate::new(text("impossible"), d),
            ]
        } else {
            vec![
                Candidate::new(text("impossible"), g),
                Candidate::new(text("maybe"), d),
                Candidate::new(text("sure"), d),
            ]
        }
    }

    fn add_answers(&self, policy: &mut ScriptedPolicy, origin: [i64; 4]) {
        let solutions: Vec<Expr> = oracle_solve(origin).forms.into_values().take(3).collect();
        let mut decoy_forms = BTreeSet::new();
        let mut decoys = Vec::new();
        let all = enumerate_expressions(origin);
        // spread the picks over the enumeration instead of taking a prefix
        let stride = (all.len() / 97).max(1);
        for e in all.iter().step_by(stride) {
            if decoys.len() >= self.answer_decoys {
                break;
            }
            if matches!(e.eval(), Some(v) if v != int(24)) && decoy_forms.insert(canonicalize(e)) {
                decoys.push(e.clone());
            }
        }
        let state = Game24State::new(origin);
        let mut io = Vec::new();
        let mut cot = Vec::new();
        for (exprs, weight) in [(&solutions, self.good_weight), (&decoys, self.decoy_weight)] {
            for e in exprs.iter() {
                io.push(Candidate::new(format!("Answer: {e} = 24"), weight));
                cot.push(Candidate::new(
                    format!("Combining the numbers two at a time.\nAnswer: {e} = 24"),
                    weight,
                ));
            }
        }
        policy.add(TASK_NAME, Phase::Answer, io_key(&state), io);
        policy.add(TASK_NAME, Phase::Answer, cot_key(&state), cot);
    }
}

fn sorted(mut v: Vec<Rational>) -> Vec<Rational> {
    v.sort();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game24::task::{parse_proposal, verify_answer};
    use crate::game24::{classify_value, extract_answer_text, ValueLabel};

    #[test]
    fn every_good_line_parses_and_keeps_24_reachable() {
        let policy = OraclePolicy::default().build([7, 5, 2, 6]);
        let root = Game24State::new([7, 5, 2, 6]);
        let rule = policy.lookup(TASK_NAME, Phase::Propose, &root.key()).unwrap();
        let mut reach = Reachability::new(MoveSet::All);
        let mut good = 0;
        for c in &rule.candidates {
            match parse_proposal(&root, &c.text) {
                Ok(next) => {
                    let solvable = reach.can_reach_24(&next.remaining);
                    assert_eq!(solvable, c.weight == 2.0, "{}", c.text);
                    good += usize::from(solvable);
                }
                Err(_) => assert_eq!(c.weight, 1.0),
            }
        }
        assert!(good > 0);
    }

    #[test]
    fn value_rules_tell_the_truth_at_top_weight() {
        let policy = OraclePolicy::default().build([1, 1, 1, 1]);
        let rule = policy.lookup(TASK_NAME, Phase::Value, "1 1 1 1").unwrap();
        let top = rule
            .candidates
            .iter()
            .max_by(|a, b| a.weight.total_cmp(&b.weight))
            .unwrap();
        assert_eq!(classify_value(&top.text).0, ValueLabel::Impossible);
        let policy = OraclePolicy::default().build([3, 3, 8, 8]);
        let rule = policy.lookup(TASK_NAME, Phase::Value, "24").unwrap();
        assert_eq!(classify_value(&rule.candidates[0].text).0, ValueLabel::Sure);
    }

    #[test]
    fn baseline_answers_split_by_weight() {
        let policy = OraclePolicy::default().build([7, 5, 2, 6]);
        let root = Game24State::new([7, 5, 2, 6]);
        let rule = policy.lookup(TASK_NAME, Phase::Answer, &io_key(&root)).unwrap();
        for c in &rule.candidates {
            let answer = extract_answer_text(&c.text).unwrap();
            assert_eq!(verify_answer(&answer, [7, 5, 2, 6]), c.weight == 2.0, "{}", c.text);
        }
        assert!(policy.lookup(TASK_NAME, Phase::Answer, &cot_key(&root)).is_some());
    }
}
