//! Constrained creative writing: four given sentences must close the four
//! paragraphs of a generated passage.

mod instance;
mod parse;
mod pipeline;
mod policy;

pub use instance::{format_instances, generate_instances, instance_id, parse_instances, InstanceError, WritingInstance, SENTENCES};
pub use parse::{
    parse_judge, parse_vote, tally_votes, validate_passage, CoherencyScore, ParagraphFlag, PassageCheck, VoteTally,
    FALLBACK_SCORE,
};
pub use pipeline::{
    cot_prompt, extract_passage, io_prompt, judge_prompt, plan_prompt, run_writing, run_writing_baseline, vote_prompt,
    write_prompt, PlanScore, WritingConfig, WritingOutcome, DEFAULT_JUDGE_BODY, JUDGE_HEAD, JUDGE_TAIL, TASK_NAME,
};
pub use policy::{passage_text, plan_text, WritingPolicy};
