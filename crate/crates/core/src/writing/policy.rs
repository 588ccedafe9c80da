use super::instance::WritingInstance;
use super::pipeline::TASK_NAME;
use crate::backend::{Candidate, Phase, ScriptedPolicy};
use serde::{Deserialize, Serialize};

const THEMES: &[&str] = &[
    "a slow homecoming",
    "an unlikely friendship",
    "a week of storms",
    "a small mistake that grows",
    "a map nobody could read",
    "the last day of summer",
];

/// Scripted writer for one instance. Plans come in variants of descending
/// quality and weight; each plan has passages of its own, one of which drops
/// a paragraph. Judge rules score every text the pipeline can produce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WritingPolicy {
    pub plan_variants: usize,
    /// Judged score of the best plan; each further variant is `quality_step` lower.
    pub top_quality: i64,
    pub quality_step: i64,
    pub good_weight: f64,
    pub decoy_weight: f64,
    /// Weight of a vote response that names no choice.
    pub unparseable_vote_weight: f64,
}

impl Default for WritingPolicy {
    fn default() -> Self {
        Self {
            plan_variants: 4,
            top_quality: 78,
            quality_step: 12,
            good_weight: 2.0,
            decoy_weight: 1.0,
            unparseable_vote_weight: 0.25,
        }
    }
}

fn judge_text(score: i64) -> String {
    format!("The passage has a clear arc and consistent voice.\nThus, the coherency score is {score}")
}

pub fn plan_text(instance: &WritingInstance, variant: usize) -> String {
    let theme = THEMES[variant % THEMES.len()];
    let mut out = format!("Plan: a story about {theme}.");
    for (i, s) in instance.sentences.iter().enumerate() {
        out.push_str(&format!(" Part {} leads up to \"{}\"", i + 1, s.trim()));
        out.push(if i + 1 == instance.sentences.len() { '.' } else { ';' });
    }
    if variant >= THEMES.len() {
        out.push_str(&format!(" (draft {variant})"));
    }
    out
}

/// `paragraphs` paragraphs, each closing with its sentence.
pub fn passage_text(instance: &WritingInstance, variant: usize, style: &str, paragraphs: usize) -> String {
    let theme = THEMES[variant % THEMES.len()];
    instance
        .sentences
        .iter()
        .take(paragraphs)
        .enumerate()
        .map(|(i, s)| format!("In {style} terms, part {} of {theme} unfolds. {}", i + 1, s.trim()))
        .collect::<Vec<_>>()
        .join("\n\n")
}

impl WritingPolicy {
    fn weight(&self, variant: usize) -> f64 {
        if self.plan_variants <= 1 {
            return self.good_weight;
        }
        let t = variant as f64 / (self.plan_variants - 1) as f64;
        self.good_weight - t * (self.good_weight - self.decoy_weight)
    }

    fn judge(policy: &mut ScriptedPolicy, text: &str, score: i64) {
        let score = score.clamp(0, 100);
        policy.add(
            TASK_NAME,
            Phase::Judge,
            text,
            vec![
                Candidate::new(judge_text(score), 2.0),
                Candidate::new(judge_text((score - 4).max(0)), 1.0),
                Candidate::new(judge_text((score + 4).min(100)), 1.0),
            ],
        );
    }

    pub fn build(&self, instance: &WritingInstance, choices: usize) -> ScriptedPolicy {
        let mut policy = ScriptedPolicy::new();
        let mut plans = Vec::new();
        let mut io = Vec::new();
        let mut cot = Vec::new();
        for v in 0..self.plan_variants {
            let quality = self.top_quality - self.quality_step * v as i64;
            let plan = plan_text(instance, v);
            plans.push(Candidate::new(plan.clone(), self.weight(v)));
            Self::judge(&mut policy, &plan, quality);

            let passages = [
                (passage_text(instance, v, "vivid", 4), quality + 6, self.good_weight),
                (passage_text(instance, v, "plain", 4), quality - 6, (self.good_weight + self.decoy_weight) / 2.0),
                (passage_text(instance, v, "hurried", 3), quality - 20, self.decoy_weight),
            ];
            let mut written = Vec::new();
            for (text, score, weight) in passages {
                Self::judge(&mut policy, &text, score);
                written.push(Candidate::new(text, weight));
            }
            policy.add(TASK_NAME, Phase::Write, plan.clone(), written);

            let plain = passage_text(instance, v, "plain", 4);
            io.push(Candidate::new(plain, self.weight(v)));
            let cot_passage = passage_text(instance, v, "vivid", 4);
            cot.push(Candidate::new(format!("{plan}\n\nPassage:\n{cot_passage}"), self.weight(v)));
        }
        policy.add(TASK_NAME, Phase::Plan, instance.id.clone(), plans);
        policy.add(TASK_NAME, Phase::Write, format!("io:{}", instance.id), io);
        policy.add(TASK_NAME, Phase::Write, format!("cot:{}", instance.id), cot);
        for noun in ["plan", "passage"] {
            let mut votes: Vec<Candidate> = (1..=choices)
                .map(|i| Candidate::new(format!("Weighing the choices.\nThe best {noun} is {i}"), 1.0))
                .collect();
            if self.unparseable_vote_weight > 0.0 {
                votes.push(Candidate::new("They all have merit.", self.unparseable_vote_weight));
            }
            policy.add(TASK_NAME, Phase::Vote, format!("{}:{noun}", instance.id), votes);
        }
        policy
    }
}
