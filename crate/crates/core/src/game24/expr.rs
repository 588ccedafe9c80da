//! Final-answer expressions: a recursive-descent parser over integers and the
//! four operators, exact evaluation, and verification against an instance.

use super::number::{int, Op, Rational};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expr {
    Num(i64),
    Bin(Op, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unexpected character `{0}` at {1}")]
    BadChar(char, usize),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected token at {0}")]
    UnexpectedToken(usize),
    #[error("integer literal out of range at {0}")]
    Overflow(usize),
}

impl Expr {
    pub fn bin(op: Op, l: Expr, r: Expr) -> Expr {
        Expr::Bin(op, Box::new(l), Box::new(r))
    }

    /// Exact value; `None` on division by zero or overflow.
    pub fn eval(&self) -> Option<Rational> {
        match self {
            Expr::Num(n) => Some(int(*n)),
            Expr::Bin(op, l, r) => op.apply(l.eval()?, r.eval()?),
        }
    }

    pub fn leaves(&self) -> Vec<i64> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<i64>) {
        match self {
            Expr::Num(n) => out.push(*n),
            Expr::Bin(_, l, r) => {
                l.collect_leaves(out);
                r.collect_leaves(out);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Num(_) => u8::MAX,
            Expr::Bin(op, _, _) => op.precedence(),
        }
    }
}

impl fmt::Display for Expr {
    /// Infix with the minimum parentheses that keep left-associative parsing
    /// equal to this tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(n) => write!(f, "{n}"),
            Expr::Bin(op, l, r) => {
                let p = op.precedence();
                if l.precedence() < p {
                    write!(f, "({l})")?;
                } else {
                    write!(f, "{l}")?;
                }
                write!(f, "{}", op.symbol())?;
                if r.precedence() <= p {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Token {
    Num(i64),
    Op(Op),
    Open,
    Close,
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            let n = digits.parse().map_err(|_| ParseError::Overflow(start))?;
            tokens.push((Token::Num(n), start));
        } else if c == '(' || c == '[' {
            tokens.push((Token::Open, i));
            i += 1;
        } else if c == ')' || c == ']' {
            tokens.push((Token::Close, i));
            i += 1;
        } else if let Some(op) = Op::from_symbol(c).filter(|_| c != 'x') {
            tokens.push((Token::Op(op), i));
            i += 1;
        } else {
            return Err(ParseError::BadChar(c, i));
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<Token> {
        self.tokens.get(self.pos).map(|t| t.0)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(usize::MAX, |t| t.1)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(op @ (Op::Add | Op::Sub))) = self.peek() {
            self.pos += 1;
            lhs = Expr::bin(op, lhs, self.term()?);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.atom()?;
        while let Some(Token::Op(op @ (Op::Mul | Op::Div))) = self.peek() {
            self.pos += 1;
            lhs = Expr::bin(op, lhs, self.atom()?);
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(Token::Num(n)) => {
                self.pos += 1;
                Ok(Expr::Num(n))
            }
            Some(Token::Open) => {
                self.pos += 1;
                let inner = self.expr()?;
                match self.peek() {
                    Some(Token::Close) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    Some(_) => Err(ParseError::UnexpectedToken(self.offset())),
                    None => Err(ParseError::UnexpectedEnd),
                }
            }
            Some(_) => Err(ParseError::UnexpectedToken(self.offset())),
            None => Err(ParseError::UnexpectedEnd),
        }
    }
}

/// Parses infix arithmetic over non-negative integer literals.
pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    let mut parser = Parser {
        tokens: tokenize(text)?,
        pos: 0,
    };
    let expr = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(ParseError::UnexpectedToken(parser.offset()));
    }
    Ok(expr)
}

/// True iff `expr` uses exactly the numbers of `origin` and equals 24.
pub fn verify_expression(expr: &Expr, origin: &[i64]) -> bool {
    let mut leaves = expr.leaves();
    let mut want = origin.to_vec();
    leaves.sort_unstable();
    want.sort_unstable();
    leaves == want && expr.eval() == Some(int(24))
}

/// Pulls the expression out of a model answer such as
/// `"Answer: (7-5)*2*6 = 24"`: the text after the last `answer:` marker (or
/// the last non-empty line), cut at `=`.
pub fn extract_answer_text(raw: &str) -> Option<String> {
    let lower = raw.to_lowercase();
    let body = match lower.rfind("answer:") {
        Some(i) => &raw[i + "answer:".len()..],
        None => raw.lines().rev().find(|l| !l.trim().is_empty())?,
    };
    let line = body.lines().next().unwrap_or("");
    let expr = line.split('=').next().unwrap_or("").trim();
    (!expr.is_empty()).then(|| expr.to_string())
}
