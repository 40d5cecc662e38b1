//! Reward-decomposed tabular reinforcement learning with policy summaries.
//!
//! The crate trains agents whose reward is split into named components, each
//! with its own Q-table, records greedy rollouts as traces, extracts summary
//! states from those traces (importance-ranked or frequency-sampled), renders
//! per-component Q-value bar charts and scenario reports, and judges whether
//! an agent's configured priorities are recoverable from its summaries.

pub mod env;
pub mod error;
pub mod explain;
pub mod harness;
pub mod learner;
pub mod recorder;
pub mod rng;
pub mod summarizer;
pub mod trace_io;
pub mod types;

pub use error::{Error, Result};
pub use types::{ActionId, ComponentId, HyperParams, Observation, RewardVector, Trace, TraceStep};
