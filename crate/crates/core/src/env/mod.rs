//! Environment abstraction shared by the learner, recorder, and harness.

pub mod highway;
pub mod pacman;

use crate::error::Result;
use crate::types::{ActionId, ComponentId, Observation, RewardVector};

/// Result of applying one action.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: RewardVector,
    /// Episode over and no future reward obtainable; bootstrap targets are
    /// cut here.
    pub terminal: bool,
    /// Episode artificially cut (step cap) without being terminal; bootstrap
    /// targets still look past this step.
    pub truncated: bool,
}

impl StepOutcome {
    pub fn ends_episode(&self) -> bool {
        self.terminal || self.truncated
    }
}

/// A sequential decision environment with a decomposed reward function.
///
/// Implementations are fully deterministic given the episode seed passed to
/// `reset` and the action sequence; any internal randomness (traffic layout,
/// frightened-ghost moves) must flow from that seed.
pub trait Environment {
    /// Reward components in index order.
    fn components(&self) -> &[ComponentId];

    /// Size of the fixed action set; action ids are `0..num_actions()`.
    fn num_actions(&self) -> usize;

    /// Human-readable action names, indexed by action id.
    fn action_names(&self) -> &[&'static str];

    /// Starts a new episode and returns the initial observation.
    fn reset(&mut self, episode_seed: u64) -> Result<Observation>;

    /// Actions legal in the current state.
    fn legal_actions(&self) -> Vec<ActionId>;

    /// Applies an action to the current state.
    fn step(&mut self, action: ActionId) -> Result<StepOutcome>;

    fn num_components(&self) -> usize {
        self.components().len()
    }

    fn component_names(&self) -> Vec<String> {
        self.components().iter().map(|c| c.name.clone()).collect()
    }
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn components(&self) -> &[ComponentId] {
        (**self).components()
    }
    fn num_actions(&self) -> usize {
        (**self).num_actions()
    }
    fn action_names(&self) -> &[&'static str] {
        (**self).action_names()
    }
    fn reset(&mut self, episode_seed: u64) -> Result<Observation> {
        (**self).reset(episode_seed)
    }
    fn legal_actions(&self) -> Vec<ActionId> {
        (**self).legal_actions()
    }
    fn step(&mut self, action: ActionId) -> Result<StepOutcome> {
        (**self).step(action)
    }
}
