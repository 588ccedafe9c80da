use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

pub const SENTENCES: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WritingInstance {
    pub id: String,
    pub sentences: [String; SENTENCES],
}

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("instance {index} (line {line}): expected 4 sentences, got {found}")]
    WrongCount { index: usize, line: usize, found: usize },
}

impl WritingInstance {
    pub fn new(id: impl Into<String>, sentences: [&str; SENTENCES]) -> Self {
        Self {
            id: id.into(),
            sentences: sentences.map(|s| s.trim().to_string()),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.sentences.iter().all(|s| !s.trim().is_empty())
    }
}

pub fn instance_id(index: usize) -> String {
    format!("cw{index:03}")
}

/// Groups of four non-empty lines separated by blank lines.
pub fn parse_instances(text: &str) -> Result<Vec<WritingInstance>, InstanceError> {
    let mut out = Vec::new();
    let mut group: Vec<&str> = Vec::new();
    let mut start = 1;
    let flush = |group: &mut Vec<&str>, start: usize, out: &mut Vec<WritingInstance>| {
        if group.is_empty() {
            return Ok(());
        }
        let index = out.len();
        let sentences: [&str; SENTENCES] = group.as_slice().try_into().map_err(|_| InstanceError::WrongCount {
            index,
            line: start,
            found: group.len(),
        })?;
        out.push(WritingInstance::new(instance_id(index), sentences));
        group.clear();
        Ok(())
    };
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            flush(&mut group, start, &mut out)?;
            continue;
        }
        if group.is_empty() {
            start = i + 1;
        }
        group.push(line);
    }
    flush(&mut group, start, &mut out)?;
    Ok(out)
}

pub fn format_instances(instances: &[WritingInstance]) -> String {
    let mut out = String::new();
    for (i, inst) in instances.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for s in &inst.sentences {
            let _ = writeln!(out, "{s}");
        }
    }
    out
}

const SUBJECTS: &[&str] = &[
    "The old lighthouse", "My neighbor's cat", "A forgotten letter", "The morning train",
    "Her grandmother's garden", "The city library", "A broken umbrella", "The night market",
    "An empty stadium", "The river", "A paper kite", "The last bakery in town",
];
const PREDICATES: &[&str] = &[
    "hummed quietly all evening", "refused to move an inch", "smelled of rain and cedar",
    "was painted bright yellow", "kept every secret it heard", "glowed under the winter moon",
    "had seen better days", "waited for someone who never came", "changed everything that summer",
    "was louder than anyone expected", "turned out to be a map", "belonged to nobody at all",
];

/// Seeded placeholder instances built from a small phrase bank.
pub fn generate_instances(count: usize, seed: u64) -> Vec<WritingInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let sentences: [String; SENTENCES] = std::array::from_fn(|_| {
                let s = SUBJECTS.choose(&mut rng).unwrap();
                let p = PREDICATES.choose(&mut rng).unwrap();
                format!("{s} {p}.")
            });
            WritingInstance {
                id: instance_id(i),
                sentences,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loader_groups_by_blank_lines() {
        let text = "a.\nb.\nc.\nd.\n\n\ne.\nf.\ng.\nh.\n";
        let got = parse_instances(text).unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(got[1].sentences[0], "e.");
        assert_eq!(got[1].id, "cw001");
        assert_eq!(parse_instances(&format_instances(&got)).unwrap(), got);
    }

    #[test]
    fn loader_rejects_short_groups() {
        let err = parse_instances("a.\nb.\nc.\nd.\n\ne.\nf.\n").unwrap_err();
        assert_eq!(
            err,
            InstanceError::WrongCount {
                index: 1,
                line: 6,
                found: 2
            }
        );
    }

    #[test]
    fn generator_is_seeded_and_valid() {
        let a = generate_instances(5, 3);
        assert_eq!(a, generate_instances(5, 3));
        assert!(a.iter().all(WritingInstance::is_valid));
        assert_ne!(a, generate_instances(5, 4));
    }
}
