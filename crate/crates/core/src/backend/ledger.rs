use super::Phase;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::ops::AddAssign;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl TokenUsage {
    pub fn new(prompt_tokens: u64, completion_tokens: u64) -> Self {
        Self {
            prompt_tokens,
            completion_tokens,
        }
    }

    pub fn total(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

impl AddAssign for TokenUsage {
    fn add_assign(&mut self, rhs: Self) {
        self.prompt_tokens += rhs.prompt_tokens;
        self.completion_tokens += rhs.completion_tokens;
    }
}

/// Fallback token count for text without provider usage: `ceil(chars / 4)`.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseUsage {
    pub calls: u64,
    pub estimated_calls: u64,
    pub usage: TokenUsage,
}

/// Token tallies per phase, plus a running total kept alongside them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageLedger {
    pub phases: BTreeMap<Phase, PhaseUsage>,
    pub total: PhaseUsage,
}

impl UsageLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, phase: Phase, usage: TokenUsage, estimated: bool) {
        for entry in [self.phases.entry(phase).or_default(), &mut self.total] {
            entry.calls += 1;
            entry.estimated_calls += u64::from(estimated);
            entry.usage += usage;
        }
    }

    pub fn merge(&mut self, other: &UsageLedger) {
        for (phase, entry) in &other.phases {
            let mine = self.phases.entry(*phase).or_default();
            mine.calls += entry.calls;
            mine.estimated_calls += entry.estimated_calls;
            mine.usage += entry.usage;
        }
        self.total.calls += other.total.calls;
        self.total.estimated_calls += other.total.estimated_calls;
        self.total.usage += other.total.usage;
    }

    pub fn phase(&self, phase: Phase) -> PhaseUsage {
        self.phases.get(&phase).copied().unwrap_or_default()
    }

    /// Sum of the per-phase entries, recomputed.
    pub fn phase_sum(&self) -> PhaseUsage {
        let mut sum = PhaseUsage::default();
        for entry in self.phases.values() {
            sum.calls += entry.calls;
            sum.estimated_calls += entry.estimated_calls;
            sum.usage += entry.usage;
        }
        sum
    }

    /// `total` equals the sum of the phase entries.
    pub fn is_consistent(&self) -> bool {
        self.phase_sum() == self.total
    }
}

/// Currency per 1000 tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceTable {
    pub prompt_per_1k: f64,
    pub completion_per_1k: f64,
}

impl Default for PriceTable {
    fn default() -> Self {
        // list price of the 8k-context gpt-4 tier
        Self {
            prompt_per_1k: 0.03,
            completion_per_1k: 0.06,
        }
    }
}

impl PriceTable {
    pub fn cost(&self, usage: TokenUsage) -> f64 {
        usage.prompt_tokens as f64 / 1000.0 * self.prompt_per_1k
            + usage.completion_tokens as f64 / 1000.0 * self.completion_per_1k
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub per_phase: BTreeMap<Phase, f64>,
    pub total: f64,
    pub generate_tokens: u64,
    pub prompt_tokens: u64,
}

impl CostReport {
    /// `"5.5k / 1.6k"`: generated over prompt tokens.
    pub fn tokens_label(&self) -> String {
        format!(
            "{} / {}",
            format_k(self.generate_tokens as f64),
            format_k(self.prompt_tokens as f64)
        )
    }
}

pub fn aggregate_cost(ledger: &UsageLedger, prices: &PriceTable) -> CostReport {
    let per_phase: BTreeMap<Phase, f64> = ledger
        .phases
        .iter()
        .map(|(phase, entry)| (*phase, prices.cost(entry.usage)))
        .collect();
    CostReport {
        total: per_phase.values().sum(),
        per_phase,
        generate_tokens: ledger.total.usage.completion_tokens,
        prompt_tokens: ledger.total.usage.prompt_tokens,
    }
}

/// Token count in thousands with one decimal: `5500.0 -> "5.5k"`.
pub fn format_k(tokens: f64) -> String {
    format!("{:.1}k", tokens / 1000.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ledger_total_is_sum_of_phases() {
        let mut ledger = UsageLedger::new();
        ledger.record(Phase::Propose, TokenUsage::new(100, 40), false);
        ledger.record(Phase::Value, TokenUsage::new(30, 5), true);
        ledger.record(Phase::Value, TokenUsage::new(30, 6), true);
        assert!(ledger.is_consistent());
        assert_eq!(ledger.total.usage, TokenUsage::new(160, 51));
        assert_eq!(ledger.phase(Phase::Value).calls, 2);
        assert_eq!(ledger.total.estimated_calls, 2);

        let mut merged = UsageLedger::new();
        merged.merge(&ledger);
        merged.merge(&ledger);
        assert!(merged.is_consistent());
        assert_eq!(merged.total.calls, 6);
    }

    #[test]
    fn estimator_rounds_up() {
        assert_eq!(estimate_tokens(""), 0);
        assert_eq!(estimate_tokens("abcd"), 1);
        assert_eq!(estimate_tokens("abcde"), 2);
    }

    #[test]
    fn cost_rows() {
        let mut ledger = UsageLedger::new();
        ledger.record(Phase::Propose, TokenUsage::new(1_000, 4_000), false);
        ledger.record(Phase::Value, TokenUsage::new(600, 1_500), false);
        let prices = PriceTable {
            prompt_per_1k: 0.03,
            completion_per_1k: 0.06,
        };
        let report = aggregate_cost(&ledger, &prices);
        assert_eq!(report.tokens_label(), "5.5k / 1.6k");
        let expected = 1.6 * 0.03 + 5.5 * 0.06;
        assert!((report.total - expected).abs() < 1e-12);
        let phase_sum: f64 = report.per_phase.values().sum();
        assert!((phase_sum - report.total).abs() < 1e-15);

        let empty = aggregate_cost(&UsageLedger::new(), &prices);
        assert_eq!(empty.total, 0.0);
        assert_eq!(empty.tokens_label(), "0.0k / 0.0k");
    }
}
