//! Explicit finite MDPs with decomposed rewards, used as oracle fixtures.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::env::{Environment, StepOutcome};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::types::{ActionId, ComponentId, Observation, RewardVector};

/// One outgoing branch: (probability, next state, decomposed reward).
pub type Branch = (f64, usize, RewardVector);

/// A fully enumerated MDP. Terminal states are absorbing; their outgoing
/// transitions are ignored.
#[derive(Debug, Clone)]
pub struct ExplicitMdp {
    pub num_states: usize,
    pub num_actions: usize,
    pub num_components: usize,
    pub start_state: usize,
    pub terminal: Vec<bool>,
    /// transitions[state][action] -> branches, probabilities summing to 1.
    pub transitions: Vec<Vec<Vec<Branch>>>,
}

impl ExplicitMdp {
    pub fn validate(&self) -> Result<()> {
        if self.terminal.len() != self.num_states || self.transitions.len() != self.num_states {
            return Err(Error::Config(
                "mdp table sizes disagree with num_states".into(),
            ));
        }
        for (s, row) in self.transitions.iter().enumerate() {
            if self.terminal[s] {
                continue;
            }
            if row.len() != self.num_actions {
                return Err(Error::Config(format!("state {s} is missing actions")));
            }
            for (a, branches) in row.iter().enumerate() {
                let total: f64 = branches.iter().map(|(p, _, _)| p).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!(
                        "transition probabilities for ({s}, {a}) sum to {total}"
                    )));
                }
                for (_, next, r) in branches {
                    if *next >= self.num_states || r.len() != self.num_components {
                        return Err(Error::Config(format!("malformed branch at ({s}, {a})")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Seeded random episodic MDP. Rewards are uniform in [-1, 1] per
    /// component; roughly a quarter of the non-start states are terminal
    /// (always at least one). Deterministic MDPs have single-branch
    /// transitions.
    pub fn random(
        seed: u64,
        num_states: usize,
        num_actions: usize,
        num_components: usize,
        deterministic: bool,
    ) -> Self {
        let mut rng = stream_rng(seed, "mdp.random", 0);
        let mut terminal = vec![false; num_states];
        for t in terminal.iter_mut().skip(1) {
            *t = rng.random::<f64>() < 0.25;
        }
        if !terminal.iter().any(|&t| t) {
            let last = num_states - 1;
            terminal[last] = true;
        }

        let mut transitions = Vec::with_capacity(num_states);
        for &is_terminal in &terminal {
            let mut row = Vec::with_capacity(num_actions);
            for _ in 0..num_actions {
                if is_terminal {
                    row.push(Vec::new());
                    continue;
                }
                let branches = if deterministic {
                    1
                } else {
                    rng.random_range(1..=3)
                };
                let mut raw: Vec<(f64, usize, RewardVector)> = (0..branches)
                    .map(|_| {
                        let next = rng.random_range(0..num_states);
                        let reward = RewardVector::from_vec(
                            (0..num_components)
                                .map(|_| rng.random_range(-1.0..1.0))
                                .collect(),
                        );
                        (rng.random_range(0.1..1.0), next, reward)
                    })
                    .collect();
                let total: f64 = raw.iter().map(|(p, _, _)| p).sum();
                for b in &mut raw {
                    b.0 /= total;
                }
                // Make the probabilities sum to exactly 1.
                let fixup: f64 = 1.0 - raw.iter().map(|(p, _, _)| p).sum::<f64>();
                raw.last_mut().expect("at least one branch").0 += fixup;
                row.push(raw);
            }
            transitions.push(row);
        }
        let mdp = Self {
            num_states,
            num_actions,
            num_components,
            start_state: 0,
            terminal,
            transitions,
        };
        mdp.validate().expect("random mdp is well-formed");
        mdp
    }

    /// (state, action) pairs reachable from the start state.
    pub fn reachable_pairs(&self) -> Vec<(usize, usize)> {
        let mut seen = vec![false; self.num_states];
        let mut queue = vec![self.start_state];
        seen[self.start_state] = true;
        while let Some(s) = queue.pop() {
            if self.terminal[s] {
                continue;
            }
            for branches in &self.transitions[s] {
                for &(_, next, _) in branches {
                    if !seen[next] {
                        seen[next] = true;
                        queue.push(next);
                    }
                }
            }
        }
        let mut pairs = Vec::new();
        for (s, &was_seen) in seen.iter().enumerate() {
            if was_seen && !self.terminal[s] {
                for a in 0..self.num_actions {
                    pairs.push((s, a));
                }
            }
        }
        pairs
    }

    pub fn obs_id(state: usize) -> String {
        format!("s{state}")
    }
}

/// Environment adapter so the tabular learner can train on an explicit MDP.
/// Episodes truncate (without a bootstrap cut) after `max_steps`.
pub struct MdpEnv {
    mdp: ExplicitMdp,
    components: Vec<ComponentId>,
    action_names: Vec<&'static str>,
    state: usize,
    steps: usize,
    max_steps: usize,
    rng: ChaCha8Rng,
}

const MDP_ACTION_NAMES: [&str; 8] = ["a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7"];

impl MdpEnv {
    pub fn new(mdp: ExplicitMdp, max_steps: usize) -> Result<Self> {
        mdp.validate()?;
        if mdp.num_actions > MDP_ACTION_NAMES.len() {
            return Err(Error::Config(format!(
                "MdpEnv supports up to {} actions",
                MDP_ACTION_NAMES.len()
            )));
        }
        let components = (0..mdp.num_components)
            .map(|i| ComponentId::new(i, format!("c{i}")))
            .collect();
        let action_names = MDP_ACTION_NAMES[..mdp.num_actions].to_vec();
        Ok(Self {
            state: mdp.start_state,
            steps: 0,
            max_steps,
            components,
            action_names,
            mdp,
            rng: stream_rng(0, "mdp.episode", 0),
        })
    }

    pub fn mdp(&self) -> &ExplicitMdp {
        &self.mdp
    }

    fn observe(&self) -> Observation {
        Observation::new(ExplicitMdp::obs_id(self.state), vec![self.state as f64])
    }
}

impl Environment for MdpEnv {
    fn components(&self) -> &[ComponentId] {
        &self.components
    }

    fn num_actions(&self) -> usize {
        self.mdp.num_actions
    }

    fn action_names(&self) -> &[&'static str] {
        &self.action_names
    }

    fn reset(&mut self, episode_seed: u64) -> Result<Observation> {
        self.state = self.mdp.start_state;
        self.steps = 0;
        self.rng = stream_rng(0, "mdp.episode", episode_seed);
        Ok(self.observe())
    }

    fn legal_actions(&self) -> Vec<ActionId> {
        (0..self.mdp.num_actions).map(ActionId).collect()
    }

    fn step(&mut self, action: ActionId) -> Result<StepOutcome> {
        if action.0 >= self.mdp.num_actions {
            return Err(Error::UnknownAction {
                action: action.0,
                num_actions: self.mdp.num_actions,
            });
        }
        let branches = &self.mdp.transitions[self.state][action.0];
        let (next, reward) = if branches.len() == 1 {
            (branches[0].1, branches[0].2.clone())
        } else {
            let draw: f64 = self.rng.random();
            let mut acc = 0.0;
            let mut chosen = branches.last().expect("non-empty branches");
            for b in branches {
                acc += b.0;
                if draw < acc {
                    chosen = b;
                    break;
                }
            }
            (chosen.1, chosen.2.clone())
        };
        self.state = next;
        self.steps += 1;
        let terminal = self.mdp.terminal[next];
        let truncated = !terminal && self.steps >= self.max_steps;
        Ok(StepOutcome {
            observation: self.observe(),
            reward,
            terminal,
            truncated,
        })
    }
}
