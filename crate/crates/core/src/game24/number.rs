use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Exact rational used for every number in the game.
pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

impl Op {
    pub const ALL: [Op; 4] = [Op::Add, Op::Sub, Op::Mul, Op::Div];

    pub fn symbol(self) -> char {
        match self {
            Op::Add => '+',
            Op::Sub => '-',
            Op::Mul => '*',
            Op::Div => '/',
        }
    }

    pub fn from_symbol(c: char) -> Option<Op> {
        match c {
            '+' => Some(Op::Add),
            '-' | '−' => Some(Op::Sub),
            '*' | '×' | 'x' => Some(Op::Mul),
            '/' | '÷' => Some(Op::Div),
            _ => None,
        }
    }

    pub fn is_commutative(self) -> bool {
        matches!(self, Op::Add | Op::Mul)
    }

    pub fn precedence(self) -> u8 {
        match self {
            Op::Add | Op::Sub => 1,
            Op::Mul | Op::Div => 2,
        }
    }

    /// `None` on division by zero or overflow.
    pub fn apply(self, a: Rational, b: Rational) -> Option<Rational> {
        match self {
            Op::Add => a.checked_add(&b),
            Op::Sub => a.checked_sub(&b),
            Op::Mul => a.checked_mul(&b),
            Op::Div if b.is_zero() => None,
            Op::Div => a.checked_div(&b),
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(n)
}

/// `"7"`, `"-2"`, `"8/3"`.
pub fn format_number(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn format_numbers(qs: &[Rational]) -> String {
    qs.iter().map(format_number).collect::<Vec<_>>().join(" ")
}

/// Parses an integer, fraction (`8/3`) or finite decimal (`2.5`) exactly.
pub fn parse_number(token: &str) -> Option<Rational> {
    let (negative, body) = match token.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, token),
    };
    let value = if let Some((n, d)) = body.split_once('/') {
        let n = parse_digits(n)?;
        let d = parse_digits(d)?;
        if d == 0 {
            return None;
        }
        Rational::new(n, d)
    } else if let Some((whole, frac)) = body.split_once('.') {
        if frac.is_empty() || frac.len() > 12 {
            return None;
        }
        let scale = 10i64.checked_pow(frac.len() as u32)?;
        let w = if whole.is_empty() { 0 } else { parse_digits(whole)? };
        let f = parse_digits(frac)?;
        Rational::new(w.checked_mul(scale)?.checked_add(f)?, scale)
    } else {
        int(parse_digits(body)?)
    };
    Some(if negative { -value } else { value })
}

fn parse_digits(s: &str) -> Option<i64> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_parse_exactly() {
        assert_eq!(parse_number("7"), Some(int(7)));
        assert_eq!(parse_number("-2"), Some(int(-2)));
        assert_eq!(parse_number("8/3"), Some(Rational::new(8, 3)));
        assert_eq!(parse_number("2.5"), Some(Rational::new(5, 2)));
        assert_eq!(parse_number("1/0"), None);
        assert_eq!(parse_number("abc"), None);
        assert_eq!(parse_number("99999999999999999999"), None);
        assert_eq!(parse_number(""), None);
    }

    #[test]
    fn formatting() {
        assert_eq!(format_number(&Rational::new(8, 3)), "8/3");
        assert_eq!(format_numbers(&[int(2), int(2), int(6)]), "2 2 6");
    }

    #[test]
    fn ops_are_exact() {
        let third = Op::Sub.apply(int(3), Rational::new(8, 3)).unwrap();
        assert_eq!(third, Rational::new(1, 3));
        assert_eq!(Op::Div.apply(int(8), third), Some(int(24)));
        assert_eq!(Op::Div.apply(int(7), int(0)), None);
        assert_eq!(Op::Mul.apply(int(i64::MAX), int(2)), None);
    }
}
