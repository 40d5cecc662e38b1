//! Greedy rollouts of a trained policy, captured as full traces.
//!
//! Evaluation runs with epsilon = 0 so summaries reflect the policy rather
//! than exploration noise. Every step records the per-head Q-values of all
//! legal actions alongside the decomposed reward actually received.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::learner::DecomposedQ;
use crate::rng::derive_seed;
use crate::trace_io::write_trace_file;
use crate::types::{greedy_action, Trace, TraceStep};

/// Hard ceiling on episode length, independent of the environment's own cap.
const MAX_EPISODE_STEPS: usize = 100_000;

/// Rolls out `num_episodes` greedy episodes and returns the recorded traces.
/// Episode seeds derive from `seed` via the `env.record` stream.
pub fn record<E: Environment>(
    env: &mut E,
    q: &DecomposedQ,
    num_episodes: usize,
    seed: u64,
    agent_id: &str,
) -> Result<Vec<Trace>> {
    let mut traces = Vec::with_capacity(num_episodes);
    for episode in 0..num_episodes {
        let mut obs = env.reset(derive_seed(seed, "env.record", episode as u64))?;
        let mut steps: Vec<TraceStep> = Vec::new();
        let mut total = 0.0;
        loop {
            if steps.len() >= MAX_EPISODE_STEPS {
                return Err(Error::RunawayEpisode {
                    episode_id: episode as u64,
                    max_steps: MAX_EPISODE_STEPS,
                });
            }
            let legal = env.legal_actions();
            let q_values: BTreeMap<_, _> = q.q_values_for(&obs.id, &legal);
            let chosen = greedy_action(&q_values)?;
            let outcome = env.step(chosen)?;
            let done = outcome.ends_episode();
            total += outcome.reward.sum();
            steps.push(TraceStep {
                step_index: steps.len(),
                observation: obs,
                legal_actions: legal,
                q_values,
                chosen_action: chosen,
                reward: outcome.reward,
                terminal: outcome.terminal,
            });
            obs = outcome.observation;
            if done {
                break;
            }
        }
        traces.push(Trace {
            episode_id: episode as u64,
            agent_id: agent_id.to_string(),
            steps,
            total_reward: total,
        });
    }
    Ok(traces)
}

/// Persists traces as `dir/<agent_id>/<episode_id>.jsonl`, one file per
/// episode, each written atomically.
pub fn persist_traces(traces: &[Trace], components: &[String], dir: &Path) -> Result<Vec<PathBuf>> {
    traces
        .iter()
        .map(|t| write_trace_file(t, components, dir))
        .collect()
}
