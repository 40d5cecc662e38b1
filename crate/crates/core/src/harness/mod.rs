//! Verification and evaluation tools: an exact value-iteration oracle over
//! explicit finite MDPs, a decomposed-vs-monolithic learning sanity check,
//! and an automated judge that scores whether an agent's configured
//! priorities are recoverable from its summaries.

mod judge;
mod mdp;
mod oracle;
mod report;
mod sanity;

pub use judge::{
    correctness, correctness_high_contrast, judge_preferences, judge_preferences_with,
    weight_ratio, weight_verdict, JudgeOutcome, JudgeSignal, PairVerdict, Verdict,
    INDIFFERENCE_DELTA,
};
pub use mdp::{ExplicitMdp, MdpEnv};
pub use oracle::{value_iteration, ValueIterationResult};
pub use report::{AgentReport, ConditionReport, EvaluationReport, OracleReport};
pub use sanity::{sanity_check, MonolithicEnv, SanityReport, ScaledEnv};
