//! Exhaustive solvers.
//!
//! [`oracle_solve`] enumerates every operand ordering, operator assignment
//! and the five binary-tree shapes over four leaves. [`reduction_solutions`]
//! takes the other classic route (repeatedly combine two numbers) and is
//! kept separate so the two can check each other.

use super::canon::{canonicalize, CanonicalForm};
use super::expr::Expr;
use super::number::{int, Op, Rational};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Canonical solution types with one representative expression each.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OracleResult {
    pub forms: BTreeMap<CanonicalForm, Expr>,
}

impl OracleResult {
    pub fn solvable(&self) -> bool {
        !self.forms.is_empty()
    }

    pub fn type_count(&self) -> usize {
        self.forms.len()
    }

    pub fn contains(&self, form: &CanonicalForm) -> bool {
        self.forms.contains_key(form)
    }

    pub fn keys(&self) -> BTreeSet<CanonicalForm> {
        self.forms.keys().cloned().collect()
    }
}

fn distinct_permutations(values: &[i64]) -> Vec<Vec<i64>> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let mut out = Vec::new();
    loop {
        out.push(sorted.clone());
        // next lexicographic permutation
        let Some(i) = (0..sorted.len().saturating_sub(1)).rev().find(|&i| sorted[i] < sorted[i + 1]) else {
            break;
        };
        let j = (i + 1..sorted.len()).rev().find(|&j| sorted[j] > sorted[i]).unwrap();
        sorted.swap(i, j);
        sorted[i + 1..].reverse();
    }
    out
}

/// The five full binary trees over leaves `a b c d` (in order).
fn shapes(v: &[i64], o: [Op; 3]) -> [Expr; 5] {
    let n = |i: usize| Expr::Num(v[i]);
    [
        Expr::bin(o[2], Expr::bin(o[1], Expr::bin(o[0], n(0), n(1)), n(2)), n(3)),
        Expr::bin(o[2], Expr::bin(o[1], n(0), Expr::bin(o[0], n(1), n(2))), n(3)),
        Expr::bin(o[1], Expr::bin(o[0], n(0), n(1)), Expr::bin(o[2], n(2), n(3))),
        Expr::bin(o[2], n(0), Expr::bin(o[1], Expr::bin(o[0], n(1), n(2)), n(3))),
        Expr::bin(o[2], n(0), Expr::bin(o[1], n(1), Expr::bin(o[0], n(2), n(3)))),
    ]
}

/// Every expression over the four numbers, in a fixed order.
pub fn enumerate_expressions(origin: [i64; 4]) -> Vec<Expr> {
    let mut out = Vec::new();
    for perm in distinct_permutations(&origin) {
        for &a in &Op::ALL {
            for &b in &Op::ALL {
                for &c in &Op::ALL {
                    out.extend(shapes(&perm, [a, b, c]));
                }
            }
        }
    }
    out
}

pub fn oracle_solve(origin: [i64; 4]) -> OracleResult {
    let target = int(24);
    let mut forms = BTreeMap::new();
    for expr in enumerate_expressions(origin) {
        if expr.eval() == Some(target) {
            forms.entry(canonicalize(&expr)).or_insert(expr);
        }
    }
    OracleResult { forms }
}

/// Every expression reaching 24 by combining two of the remaining numbers at
/// a time (both operand orders, all four operators).
pub fn reduction_solutions(origin: &[i64]) -> Vec<Expr> {
    fn go(items: Vec<(Rational, Expr)>, out: &mut Vec<Expr>) {
        if items.len() == 1 {
            if items[0].0 == int(24) {
                out.push(items[0].1.clone());
            }
            return;
        }
        for i in 0..items.len() {
            for j in 0..items.len() {
                if i == j {
                    continue;
                }
                for op in Op::ALL {
                    let Some(value) = op.apply(items[i].0, items[j].0) else {
                        continue;
                    };
                    let mut next: Vec<(Rational, Expr)> = items
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| *k != i && *k != j)
                        .map(|(_, it)| it.clone())
                        .collect();
                    next.push((value, Expr::bin(op, items[i].1.clone(), items[j].1.clone())));
                    go(next, out);
                }
            }
        }
    }
    let mut out = Vec::new();
    go(origin.iter().map(|&n| (int(n), Expr::Num(n))).collect(), &mut out);
    out
}

/// Which moves a reachability search may take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveSet {
    /// Every ordered pair and operator.
    All,
    /// Moves a proposer writes down: `a - b` only when `a >= b`.
    NonNegative,
}

/// Memoized "can these numbers still make 24" over sorted multisets.
#[derive(Debug, Default)]
pub struct Reachability {
    moves: Option<MoveSet>,
    memo: HashMap<Vec<Rational>, bool>,
}

impl Reachability {
    pub fn new(moves: MoveSet) -> Self {
        Self {
            moves: Some(moves),
            memo: HashMap::new(),
        }
    }

    pub fn can_reach_24(&mut self, values: &[Rational]) -> bool {
        let mut key = values.to_vec();
        key.sort();
        if let Some(&hit) = self.memo.get(&key) {
            return hit;
        }
        let result = if key.len() == 1 {
            key[0] == int(24)
        } else {
            let moves = self.moves.unwrap_or(MoveSet::All);
            successors(&key, moves)
                .into_iter()
                .any(|(_, _, _, next)| self.can_reach_24(&next))
        };
        self.memo.insert(key, result);
        result
    }
}

/// `(a, op, b, remaining)` for every legal move from `values`, remaining
/// sorted ascending; duplicate moves (same operands, op and outcome) appear
/// once.
pub fn successors(values: &[Rational], moves: MoveSet) -> Vec<(Rational, Op, Rational, Vec<Rational>)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for i in 0..values.len() {
        for j in 0..values.len() {
            if i == j {
                continue;
            }
            let (a, b) = (values[i], values[j]);
            for op in Op::ALL {
                if op.is_commutative() && a < b {
                    continue;
                }
                if moves == MoveSet::NonNegative && op == Op::Sub && a < b {
                    continue;
                }
                let Some(c) = op.apply(a, b) else { continue };
                if !seen.insert((a, op, b)) {
                    continue;
                }
                let mut rest: Vec<Rational> = values
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != i && *k != j)
                    .map(|(_, v)| *v)
                    .collect();
                rest.push(c);
                rest.sort();
                out.push((a, op, b, rest));
            }
        }
    }
    out
}
