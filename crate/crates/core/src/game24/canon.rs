use super::expr::Expr;
use super::number::Op;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Solution-type key: operands of `+` and `*` are flattened across
/// same-operator chains and sorted, then the tree is rendered with explicit
/// parentheses around every compound operand. No other rewrites apply, so
/// `7-5` and `5-7` stay distinct.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalForm(pub String);

impl CanonicalForm {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

enum Node {
    Leaf(i64),
    Chain(Op, Vec<String>),
    Pair(Op, String, String),
}

fn collect_chain(op: Op, e: &Expr, out: &mut Vec<String>) {
    match e {
        Expr::Bin(inner, l, r) if *inner == op => {
            collect_chain(op, l, out);
            collect_chain(op, r, out);
        }
        other => out.push(render_operand(other)),
    }
}

fn node(e: &Expr) -> Node {
    match e {
        Expr::Num(n) => Node::Leaf(*n),
        Expr::Bin(op, l, r) if op.is_commutative() => {
            let mut operands = Vec::new();
            collect_chain(*op, l, &mut operands);
            collect_chain(*op, r, &mut operands);
            operands.sort();
            Node::Chain(*op, operands)
        }
        Expr::Bin(op, l, r) => Node::Pair(*op, render_operand(l), render_operand(r)),
    }
}

fn render_bare(e: &Expr) -> String {
    match node(e) {
        Node::Leaf(n) => n.to_string(),
        Node::Chain(op, operands) => operands.join(&op.symbol().to_string()),
        Node::Pair(op, l, r) => format!("{l}{}{r}", op.symbol()),
    }
}

fn render_operand(e: &Expr) -> String {
    match e {
        Expr::Num(n) => n.to_string(),
        _ => format!("({})", render_bare(e)),
    }
}

pub fn canonicalize(expr: &Expr) -> CanonicalForm {
    CanonicalForm(render_bare(expr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game24::expr::parse_expression;

    fn canon(s: &str) -> CanonicalForm {
        canonicalize(&parse_expression(s).unwrap())
    }

    #[test]
    fn commutative_and_associative_variants_agree() {
        assert_eq!(canon("6*2*(7-5)"), canon("(7-5)*2*6"));
        assert_eq!(canon("6*(2*(7-5))"), canon("(7-5)*2*6"));
        assert_eq!(canon("(7-5)*2*6").as_str(), "(7-5)*2*6");
        assert_eq!(canon("1+(2+3)+4"), canon("4+3+2+1"));
    }

    #[test]
    fn non_commutative_ops_stay_ordered() {
        assert_ne!(canon("7-5"), canon("5-7"));
        assert_ne!(canon("8/2"), canon("2/8"));
        assert_ne!(canon("(1-2)-3"), canon("1-(2-3)"));
    }

    #[test]
    fn idempotent() {
        for s in ["6*2*(7-5)", "8/(3-8/3)", "(1+2)*(3+4)", "13-(2*(3+4))", "1-2-3-4"] {
            let once = canon(s);
            let twice = canon(once.as_str());
            assert_eq!(once, twice, "{s}");
        }
    }

    #[test]
    fn distributivity_is_not_applied() {
        assert_ne!(canon("(1+2)*3"), canon("1*3+2*3"));
    }
}
