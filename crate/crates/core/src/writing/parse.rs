use super::instance::{WritingInstance, SENTENCES};
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::LazyLock;

pub const SCORE_MIN: i64 = 0;
pub const SCORE_MAX: i64 = 100;
/// Used when the judge output has no sentinel.
pub const FALLBACK_SCORE: i64 = 50;

static SENTINEL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)thus,?\s+the\s+coherency\s+score\s+is\s*:?\s*(-?\d+)").unwrap());
static BEST_IS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)best\s+(?:plan|choice|passage)\s+is\s*:?\s*(?:plan\s+|choice\s+)?(\d+)").unwrap());
static NAMED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\b(?:plan|choice|passage)\s+(\d+)\b").unwrap());

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoherencyScore {
    pub value: i64,
    pub fallback: bool,
    pub clamped: bool,
}

/// Last sentinel match wins; out-of-range values are clamped.
pub fn parse_judge(text: &str) -> CoherencyScore {
    let Some(caps) = SENTINEL.captures_iter(text).last() else {
        return CoherencyScore {
            value: FALLBACK_SCORE,
            fallback: true,
            clamped: false,
        };
    };
    let digits = &caps[1];
    let raw = digits.parse::<i64>().unwrap_or(if digits.starts_with('-') { i64::MIN } else { i64::MAX });
    let value = raw.clamp(SCORE_MIN, SCORE_MAX);
    CoherencyScore {
        value,
        fallback: false,
        clamped: value != raw,
    }
}

/// 0-based choice from a vote response, if it names one of `n` choices
/// (1-based in the text).
pub fn parse_vote(text: &str, n: usize) -> Option<usize> {
    let pick = |s: &str| s.parse::<usize>().ok().filter(|&i| (1..=n).contains(&i)).map(|i| i - 1);
    if let Some(c) = BEST_IS.captures_iter(text).last() {
        return pick(&c[1]);
    }
    if let Some(c) = NAMED.captures_iter(text).last() {
        return pick(&c[1]);
    }
    let bare = text.trim().trim_end_matches('.');
    pick(bare)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteTally {
    pub counts: Vec<u32>,
    pub discarded: u32,
    pub winner: usize,
    /// No round parsed; the first choice won by default.
    pub defaulted: bool,
}

/// Plurality over parsed votes, ties to the lowest index.
pub fn tally_votes(votes: &[Option<usize>], n: usize) -> VoteTally {
    let mut counts = vec![0u32; n];
    let mut discarded = 0;
    for v in votes {
        match v {
            Some(i) if *i < n => counts[*i] += 1,
            _ => discarded += 1,
        }
    }
    let defaulted = counts.iter().all(|&c| c == 0);
    let mut winner = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[winner] {
            winner = i;
        }
    }
    VoteTally {
        counts,
        discarded,
        winner,
        defaulted,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParagraphFlag {
    Match,
    Mismatch,
    Missing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassageCheck {
    pub valid: bool,
    pub paragraphs: usize,
    pub flags: [ParagraphFlag; SENTENCES],
}

const TRAILING_MARKS: &[char] = &['.', '!', '?', ',', ';', ':', '"', '\'', '\u{201d}', '\u{2019}'];

fn normalize(s: &str) -> String {
    let collapsed = s.split_whitespace().collect::<Vec<_>>().join(" ");
    let mut t = collapsed.as_str();
    if let Some(c) = t.chars().last() {
        if TRAILING_MARKS.contains(&c) {
            t = &t[..t.len() - c.len_utf8()];
        }
    }
    t.trim_end().to_string()
}

/// Paragraphs are separated by blank lines. Valid iff there are exactly four
/// and paragraph `i` ends with sentence `i`.
pub fn validate_passage(passage: &str, instance: &WritingInstance) -> PassageCheck {
    let mut paragraphs: Vec<String> = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in passage.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                paragraphs.push(current.join(" "));
                current.clear();
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        paragraphs.push(current.join(" "));
    }
    let flags: [ParagraphFlag; SENTENCES] = std::array::from_fn(|i| match paragraphs.get(i) {
        None => ParagraphFlag::Missing,
        Some(p) if normalize(p).ends_with(&normalize(&instance.sentences[i])) => ParagraphFlag::Match,
        Some(_) => ParagraphFlag::Mismatch,
    });
    PassageCheck {
        valid: paragraphs.len() == SENTENCES && flags.iter().all(|f| *f == ParagraphFlag::Match),
        paragraphs: paragraphs.len(),
        flags,
    }
}
