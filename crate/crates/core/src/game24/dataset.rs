use super::oracle::oracle_solve;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error("line {line}: expected four integers, got {found:?}")]
    BadLine { line: usize, found: String },
}

/// One instance per line, four whitespace-separated integers. Blank lines and
/// `#` comments are skipped.
pub fn parse_dataset(text: &str) -> Result<Vec<[i64; 4]>, DatasetError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || DatasetError::BadLine {
            line: i + 1,
            found: line.to_string(),
        };
        let nums: Vec<i64> = line
            .split_whitespace()
            .map(|t| t.parse::<i64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        let quad: [i64; 4] = nums.try_into().map_err(|_| bad())?;
        if quad.iter().any(|&n| n < 0) {
            return Err(bad());
        }
        out.push(quad);
    }
    Ok(out)
}

pub fn format_dataset(instances: &[[i64; 4]]) -> String {
    let mut out = String::new();
    for q in instances {
        let _ = writeln!(out, "{} {} {} {}", q[0], q[1], q[2], q[3]);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetOptions {
    pub count: usize,
    pub min: i64,
    pub max: i64,
    pub seed: u64,
    pub solvable_only: bool,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        Self {
            count: 50,
            min: 1,
            max: 13,
            seed: 0,
            solvable_only: true,
        }
    }
}

/// Seeded random quadruples in `[min, max]`, optionally only solvable ones.
pub fn generate_dataset(opts: &DatasetOptions) -> Vec<[i64; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = Vec::with_capacity(opts.count);
    while out.len() < opts.count {
        let q: [i64; 4] = std::array::from_fn(|_| rng.random_range(opts.min..=opts.max));
        if !opts.solvable_only || oracle_solve(q).solvable() {
            out.push(q);
        }
    }
    out
}
