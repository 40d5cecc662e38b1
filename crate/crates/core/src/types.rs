//! Environment-agnostic data model: reward components, observations, traces.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of an action within an environment's fixed action set.
///
/// All argmax-style tie-breaks resolve to the lowest action index so that
/// runs are reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Default)]
#[serde(transparent)]
pub struct ActionId(pub usize);

// Hand-rolled so that JSON map keys (strings) parse as well as plain numbers.
impl<'de> Deserialize<'de> for ActionId {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = ActionId;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an action index as integer or string")
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<ActionId, E> {
                Ok(ActionId(v as usize))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<ActionId, E> {
                usize::try_from(v)
                    .map(ActionId)
                    .map_err(|_| E::custom("negative action index"))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<ActionId, E> {
                v.parse::<usize>().map(ActionId).map_err(E::custom)
            }
        }
        deserializer.deserialize_any(V)
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// One named slice of a decomposed reward function, e.g. "CL" or "NP".
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComponentId {
    pub index: usize,
    pub name: String,
}

impl ComponentId {
    pub fn new(index: usize, name: impl Into<String>) -> Self {
        Self {
            index,
            name: name.into(),
        }
    }
}

/// Fixed-length vector of per-component rewards or Q-values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct RewardVector(pub Vec<f64>);

impl RewardVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Total reward across components: R = Σ_c R_c.
    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|v| v * factor).collect())
    }
}

impl std::ops::Index<usize> for RewardVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for RewardVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Sum of a reward vector's components.
pub fn sum_components(v: &RewardVector) -> f64 {
    v.sum()
}

/// Agent-visible state: a canonical hashable id for tabular lookup plus a
/// numeric feature vector for distance computations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub id: String,
    pub features: Vec<f64>,
}

impl Observation {
    pub fn new(id: impl Into<String>, features: Vec<f64>) -> Self {
        Self {
            id: id.into(),
            features,
        }
    }
}

/// Euclidean distance between two feature vectors.
pub fn feature_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// One recorded step of an episode, including the per-head Q-values of every
/// legal action at the moment of the decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step_index: usize,
    pub observation: Observation,
    pub legal_actions: Vec<ActionId>,
    pub q_values: BTreeMap<ActionId, RewardVector>,
    pub chosen_action: ActionId,
    pub reward: RewardVector,
    pub terminal: bool,
}

impl TraceStep {
    /// Checks the structural invariants: the chosen action is legal and
    /// q_values covers exactly the legal action set.
    pub fn validate(&self) -> Result<()> {
        if !self.legal_actions.contains(&self.chosen_action) {
            return Err(Error::InvalidTrace(format!(
                "step {}: chosen action {} is not legal",
                self.step_index, self.chosen_action
            )));
        }
        if self.q_values.len() != self.legal_actions.len()
            || !self
                .legal_actions
                .iter()
                .all(|a| self.q_values.contains_key(a))
        {
            return Err(Error::InvalidTrace(format!(
                "step {}: q_values must cover exactly the legal actions",
                self.step_index
            )));
        }
        Ok(())
    }
}

/// One recorded episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub episode_id: u64,
    pub agent_id: String,
    pub steps: Vec<TraceStep>,
    pub total_reward: f64,
}

impl Trace {
    /// Checks that terminal appears only on the last step and that
    /// total_reward matches the recomputed per-step sum to 1e-9.
    pub fn validate(&self) -> Result<()> {
        for step in &self.steps {
            step.validate()?;
        }
        for (i, step) in self.steps.iter().enumerate() {
            if step.terminal && i + 1 != self.steps.len() {
                return Err(Error::InvalidTrace(format!(
                    "episode {}: terminal flag on non-final step {}",
                    self.episode_id, step.step_index
                )));
            }
        }
        let recomputed: f64 = self.steps.iter().map(|s| s.reward.sum()).sum();
        if (recomputed - self.total_reward).abs() > 1e-9 {
            return Err(Error::InvalidTrace(format!(
                "episode {}: total_reward {} does not match recomputed {}",
                self.episode_id, self.total_reward, recomputed
            )));
        }
        Ok(())
    }
}

/// Learner hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Discount factor, in [0, 1).
    pub gamma: f64,
    /// Learning rate, in (0, 1].
    pub alpha: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Episodes over which epsilon decays linearly from start to end.
    pub epsilon_decay_episodes: usize,
    /// Target-table copy period, in update steps.
    pub tau: usize,
    pub episodes: usize,
    pub seed: u64,
    /// Bootstrap each head on its own argmax instead of the shared argmax
    /// over the summed online Q.
    #[serde(default)]
    pub head_local_bootstrap: bool,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            alpha: 0.1,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_episodes: 1600,
            tau: 500,
            episodes: 2000,
            seed: 0,
            head_local_bootstrap: false,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma {} not in [0, 1)", self.gamma)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha {} not in (0, 1]", self.alpha)));
        }
        for (name, v) in [
            ("epsilon_start", self.epsilon_start),
            ("epsilon_end", self.epsilon_end),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} {v} not in [0, 1]")));
            }
        }
        if self.epsilon_end > self.epsilon_start {
            return Err(Error::Config(format!(
                "epsilon_end {} exceeds epsilon_start {}",
                self.epsilon_end, self.epsilon_start
            )));
        }
        if self.tau == 0 {
            return Err(Error::Config("tau must be positive".into()));
        }
        Ok(())
    }

    /// Epsilon for a given episode: linear decay from `epsilon_start` to
    /// `epsilon_end` over `epsilon_decay_episodes`, then flat.
    pub fn epsilon_at(&self, episode: usize) -> f64 {
        if episode >= self.epsilon_decay_episodes {
            return self.epsilon_end;
        }
        let frac = episode as f64 / self.epsilon_decay_episodes as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

/// Per-action summed Q: Q_HRA(s, a) = Σ_c Q_c(s, a).
pub fn q_sum(q: &BTreeMap<ActionId, RewardVector>) -> Result<BTreeMap<ActionId, f64>> {
    let mut expected = None;
    let mut out = BTreeMap::new();
    for (&a, v) in q {
        match expected {
            None => expected = Some(v.len()),
            Some(n) if n != v.len() => {
                return Err(Error::MismatchedComponents {
                    expected: n,
                    found: v.len(),
                })
            }
            _ => {}
        }
        out.insert(a, v.sum());
    }
    Ok(out)
}

/// Action with the maximal summed Q; ties break to the lowest action index.
pub fn greedy_action(q: &BTreeMap<ActionId, RewardVector>) -> Result<ActionId> {
    let sums = q_sum(q)?;
    greedy_over_sums(&sums)
}

/// Argmax over already-summed Q-values; ties break to the lowest action index.
pub fn greedy_over_sums(sums: &BTreeMap<ActionId, f64>) -> Result<ActionId> {
    let mut best: Option<(ActionId, f64)> = None;
    // BTreeMap iterates in ascending ActionId order, so strict `>` keeps the
    // lowest index among ties.
    for (&a, &s) in sums {
        match best {
            None => best = Some((a, s)),
            Some((_, bs)) if s > bs => best = Some((a, s)),
            _ => {}
        }
    }
    best.map(|(a, _)| a).ok_or(Error::EmptyActionSet)
}
