//! Decomposed-vs-monolithic learning sanity check.
//!
//! Trains two learners on the same environment: one on the plain summed
//! reward and one on per-component rewards, both normalized so the per-step
//! total lies in [-..., 1] (each component then spans at most 1/|C| of that
//! range when weights are equal). Comparable mean greedy returns indicate
//! that decomposing the reward did not hurt learning.

use serde::{Deserialize, Serialize};

use crate::env::{Environment, StepOutcome};
use crate::error::Result;
use crate::learner::{evaluate, train};
use crate::types::{ActionId, ComponentId, HyperParams, Observation, RewardVector};

/// Below this many training episodes the report is flagged as insufficient.
const MIN_MEANINGFUL_EPISODES: usize = 100;

/// Wrapper scaling every reward component by a constant factor.
pub struct ScaledEnv<E> {
    inner: E,
    scale: f64,
}

impl<E: Environment> ScaledEnv<E> {
    pub fn new(inner: E, scale: f64) -> Self {
        Self { inner, scale }
    }
}

impl<E: Environment> Environment for ScaledEnv<E> {
    fn components(&self) -> &[ComponentId] {
        self.inner.components()
    }
    fn num_actions(&self) -> usize {
        self.inner.num_actions()
    }
    fn action_names(&self) -> &[&'static str] {
        self.inner.action_names()
    }
    fn reset(&mut self, episode_seed: u64) -> Result<Observation> {
        self.inner.reset(episode_seed)
    }
    fn legal_actions(&self) -> Vec<ActionId> {
        self.inner.legal_actions()
    }
    fn step(&mut self, action: ActionId) -> Result<StepOutcome> {
        let mut outcome = self.inner.step(action)?;
        outcome.reward = outcome.reward.scaled(self.scale);
        Ok(outcome)
    }
}

/// Wrapper collapsing the decomposed reward to a single scaled component.
pub struct MonolithicEnv<E> {
    inner: E,
    scale: f64,
    components: Vec<ComponentId>,
}

impl<E: Environment> MonolithicEnv<E> {
    pub fn new(inner: E, scale: f64) -> Self {
        Self {
            inner,
            scale,
            components: vec![ComponentId::new(0, "R")],
        }
    }
}

impl<E: Environment> Environment for MonolithicEnv<E> {
    fn components(&self) -> &[ComponentId] {
        &self.components
    }
    fn num_actions(&self) -> usize {
        self.inner.num_actions()
    }
    fn action_names(&self) -> &[&'static str] {
        self.inner.action_names()
    }
    fn reset(&mut self, episode_seed: u64) -> Result<Observation> {
        self.inner.reset(episode_seed)
    }
    fn legal_actions(&self) -> Vec<ActionId> {
        self.inner.legal_actions()
    }
    fn step(&mut self, action: ActionId) -> Result<StepOutcome> {
        let mut outcome = self.inner.step(action)?;
        outcome.reward = RewardVector::from_vec(vec![outcome.reward.sum() * self.scale]);
        Ok(outcome)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SanityReport {
    /// Mean greedy episode reward of the single-head learner (normalized scale).
    pub monolithic_mean: f64,
    /// Mean greedy episode reward of the decomposed learner (normalized scale).
    pub hra_mean: f64,
    /// hra_mean / monolithic_mean.
    pub ratio: f64,
    pub training_episodes: usize,
    pub eval_episodes: usize,
    pub insufficient_training: bool,
}

/// Runs the check on two identically configured environments (one per
/// learner). `normalization` divides every reward component so that the
/// maximum per-step summed reward is 1; both learners see the same totals.
pub fn sanity_check<E: Environment>(
    make_env: impl Fn() -> Result<E>,
    normalization: f64,
    hp: &HyperParams,
    eval_episodes: usize,
) -> Result<SanityReport> {
    let scale = if normalization > 0.0 {
        1.0 / normalization
    } else {
        1.0
    };

    let mut mono_env = MonolithicEnv::new(make_env()?, scale);
    let mono = train(&mut mono_env, hp)?;
    let monolithic_mean = evaluate(&mut mono_env, &mono.q, eval_episodes, hp.seed)?;

    let mut hra_env = ScaledEnv::new(make_env()?, scale);
    let hra = train(&mut hra_env, hp)?;
    let hra_mean = evaluate(&mut hra_env, &hra.q, eval_episodes, hp.seed)?;

    let ratio = if monolithic_mean.abs() > 1e-12 {
        hra_mean / monolithic_mean
    } else {
        f64::NAN
    };
    Ok(SanityReport {
        monolithic_mean,
        hra_mean,
        ratio,
        training_episodes: hp.episodes,
        eval_episodes,
        insufficient_training: hp.episodes < MIN_MEANINGFUL_EPISODES,
    })
}
