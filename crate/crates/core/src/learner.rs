//! Tabular multi-head Q-learner.
//!
//! One Q-table per reward component, updated with double-Q-style targets: the
//! bootstrap action is the argmax of the summed online tables at the next
//! state, while the bootstrap values come from a target table that is copied
//! from the online table every `tau` update steps and frozen in between.
//! Behavior is epsilon-greedy over the summed online Q.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::types::{greedy_over_sums, ActionId, HyperParams, Observation, RewardVector};

/// One observed transition.
#[derive(Debug, Clone)]
pub struct Transition<'a> {
    pub obs_id: &'a str,
    pub action: ActionId,
    pub reward: &'a RewardVector,
    pub next_obs_id: &'a str,
    /// Actions legal at the next state; the bootstrap argmax ranges over these.
    pub next_legal: &'a [ActionId],
    pub terminal: bool,
}

/// Online and target per-component Q-tables. Missing entries read as zero
/// vectors.
#[derive(Debug, Clone)]
pub struct DecomposedQ {
    num_components: usize,
    num_actions: usize,
    online: HashMap<String, Vec<RewardVector>>,
    target: HashMap<String, Vec<RewardVector>>,
    steps_since_copy: usize,
}

impl DecomposedQ {
    pub fn new(num_components: usize, num_actions: usize) -> Self {
        Self {
            num_components,
            num_actions,
            online: HashMap::new(),
            target: HashMap::new(),
            steps_since_copy: 0,
        }
    }

    pub fn num_components(&self) -> usize {
        self.num_components
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn steps_since_copy(&self) -> usize {
        self.steps_since_copy
    }

    pub fn num_states(&self) -> usize {
        self.online.len()
    }

    fn row<'t>(
        table: &'t HashMap<String, Vec<RewardVector>>,
        obs_id: &str,
    ) -> Option<&'t Vec<RewardVector>> {
        table.get(obs_id)
    }

    /// Online per-head Q-vector for one (state, action); zeros when unseen.
    pub fn online_q(&self, obs_id: &str, action: ActionId) -> RewardVector {
        Self::row(&self.online, obs_id)
            .map(|row| row[action.0].clone())
            .unwrap_or_else(|| RewardVector::zeros(self.num_components))
    }

    /// Target per-head Q-vector for one (state, action); zeros when unseen.
    pub fn target_q(&self, obs_id: &str, action: ActionId) -> RewardVector {
        Self::row(&self.target, obs_id)
            .map(|row| row[action.0].clone())
            .unwrap_or_else(|| RewardVector::zeros(self.num_components))
    }

    /// Online Q-vectors for a set of legal actions, as recorded in traces.
    pub fn q_values_for(
        &self,
        obs_id: &str,
        legal: &[ActionId],
    ) -> BTreeMap<ActionId, RewardVector> {
        legal
            .iter()
            .map(|&a| (a, self.online_q(obs_id, a)))
            .collect()
    }

    /// Summed online Q per legal action.
    pub fn summed_online(&self, obs_id: &str, legal: &[ActionId]) -> BTreeMap<ActionId, f64> {
        let row = Self::row(&self.online, obs_id);
        legal
            .iter()
            .map(|&a| (a, row.map_or(0.0, |r| r[a.0].sum())))
            .collect()
    }

    /// Greedy action over the summed online Q, lowest index on ties.
    pub fn greedy(&self, obs_id: &str, legal: &[ActionId]) -> Result<ActionId> {
        greedy_over_sums(&self.summed_online(obs_id, legal))
    }

    /// Epsilon-greedy action selection: with probability epsilon a
    /// seeded-uniform legal action, otherwise the greedy action.
    pub fn select_action(
        &self,
        obs: &Observation,
        legal: &[ActionId],
        epsilon: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<ActionId> {
        if legal.is_empty() {
            return Err(Error::EmptyActionSet);
        }
        if epsilon > 0.0 && rng.random::<f64>() < epsilon {
            return Ok(legal[rng.random_range(0..legal.len())]);
        }
        self.greedy(&obs.id, legal)
    }

    fn ensure_row<'t>(
        table: &'t mut HashMap<String, Vec<RewardVector>>,
        obs_id: &str,
        num_actions: usize,
        num_components: usize,
    ) -> &'t mut Vec<RewardVector> {
        if !table.contains_key(obs_id) {
            table.insert(
                obs_id.to_string(),
                vec![RewardVector::zeros(num_components); num_actions],
            );
        }
        table.get_mut(obs_id).expect("row just inserted")
    }

    /// Applies one per-head TD update.
    ///
    /// The bootstrap action `a*` is the greedy action over the summed ONLINE
    /// tables at the next state (or each head's own online argmax when
    /// `head_local_bootstrap` is set); bootstrap values are read from the
    /// TARGET tables. After `tau` updates the target tables become a copy of
    /// the online tables and the counter resets.
    pub fn hra_update(&mut self, transition: &Transition<'_>, hp: &HyperParams) -> Result<()> {
        let Transition {
            obs_id,
            action,
            reward,
            next_obs_id,
            next_legal,
            terminal,
        } = *transition;
        if reward.len() != self.num_components {
            return Err(Error::MismatchedComponents {
                expected: self.num_components,
                found: reward.len(),
            });
        }

        let mut targets = Vec::with_capacity(self.num_components);
        if terminal {
            for c in 0..self.num_components {
                targets.push(reward[c]);
            }
        } else if hp.head_local_bootstrap {
            for c in 0..self.num_components {
                let sums: BTreeMap<ActionId, f64> = next_legal
                    .iter()
                    .map(|&a| {
                        let v = Self::row(&self.online, next_obs_id).map_or(0.0, |r| r[a.0][c]);
                        (a, v)
                    })
                    .collect();
                let a_star = greedy_over_sums(&sums)?;
                targets.push(reward[c] + hp.gamma * self.target_q(next_obs_id, a_star)[c]);
            }
        } else {
            let a_star = greedy_over_sums(&self.summed_online(next_obs_id, next_legal))?;
            let boot = self.target_q(next_obs_id, a_star);
            for c in 0..self.num_components {
                targets.push(reward[c] + hp.gamma * boot[c]);
            }
        }

        let row = Self::ensure_row(
            &mut self.online,
            obs_id,
            self.num_actions,
            self.num_components,
        );
        let cell = &mut row[action.0];
        for c in 0..targets.len() {
            cell[c] += hp.alpha * (targets[c] - cell[c]);
        }

        self.steps_since_copy += 1;
        if self.steps_since_copy >= hp.tau {
            self.target = self.online.clone();
            self.steps_since_copy = 0;
        }
        Ok(())
    }

    /// Serializes the online tables to the sorted diffable text form: a
    /// component-name header, then one line per (observation id, action)
    /// with tab-separated per-head values.
    pub fn serialize_tables(&self, components: &[String]) -> String {
        let mut out = format!("components\t{}\n", components.join(","));
        let mut ids: Vec<&String> = self.online.keys().collect();
        ids.sort();
        for id in ids {
            let row = &self.online[id];
            for (a, vector) in row.iter().enumerate() {
                if vector.values().iter().all(|&v| v == 0.0) {
                    continue;
                }
                let values: Vec<String> = vector.values().iter().map(|v| v.to_string()).collect();
                out.push_str(&format!("{id}\t{a}\t{}\n", values.join("\t")));
            }
        }
        out
    }

    /// Parses the sorted text form back into tables (target = online copy).
    pub fn parse_tables(
        text: &str,
        num_actions: usize,
        origin: &Path,
    ) -> Result<(Self, Vec<String>)> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            path: origin.to_path_buf(),
            line: 1,
            message: "empty q-table file".into(),
        })?;
        let components: Vec<String> = header
            .strip_prefix("components\t")
            .ok_or_else(|| Error::Parse {
                path: origin.to_path_buf(),
                line: 1,
                message: "missing components header".into(),
            })?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut q = DecomposedQ::new(components.len(), num_actions);
        for (lineno, line) in lines {
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            let parse_err = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: lineno + 1,
                message,
            };
            if parts.len() != 2 + components.len() {
                return Err(parse_err(format!(
                    "expected {} fields, found {}",
                    2 + components.len(),
                    parts.len()
                )));
            }
            let action: usize = parts[1]
                .parse()
                .map_err(|e| parse_err(format!("bad action index: {e}")))?;
            if action >= num_actions {
                return Err(parse_err(format!("action {action} out of range")));
            }
            let mut values = Vec::with_capacity(components.len());
            for raw in &parts[2..] {
                values.push(
                    raw.parse::<f64>()
                        .map_err(|e| parse_err(format!("bad q value: {e}")))?,
                );
            }
            let row = Self::ensure_row(&mut q.online, parts[0], num_actions, components.len());
            row[action] = RewardVector::from_vec(values);
        }
        q.target = q.online.clone();
        Ok((q, components))
    }

    pub fn save(&self, components: &[String], path: &Path) -> Result<()> {
        let body = self.serialize_tables(components);
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path, num_actions: usize) -> Result<(Self, Vec<String>)> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tables(&text, num_actions, path)
    }
}

/// Outcome of a training run.
pub struct TrainResult {
    pub q: DecomposedQ,
    /// Total (summed-component) reward per episode.
    pub learning_curve: Vec<f64>,
}

/// Trains for `hp.episodes` episodes with linearly decayed epsilon.
///
/// Episode seeds come from the `env.train` stream and exploration draws from
/// the `explore` stream, both derived from `hp.seed`, so runs are fully
/// reproducible.
pub fn train<E: Environment>(env: &mut E, hp: &HyperParams) -> Result<TrainResult> {
    hp.validate()?;
    let mut q = DecomposedQ::new(env.num_components(), env.num_actions());
    let mut curve = Vec::with_capacity(hp.episodes);

    for episode in 0..hp.episodes {
        let epsilon = hp.epsilon_at(episode);
        let mut explore_rng = stream_rng(hp.seed, "explore", episode as u64);
        let mut obs = env.reset(crate::rng::derive_seed(
            hp.seed,
            "env.train",
            episode as u64,
        ))?;
        let mut total = 0.0;
        loop {
            let legal = env.legal_actions();
            let action = q.select_action(&obs, &legal, epsilon, &mut explore_rng)?;
            let outcome = env.step(action)?;
            let next_legal = env.legal_actions();
            total += outcome.reward.sum();
            q.hra_update(
                &Transition {
                    obs_id: &obs.id,
                    action,
                    reward: &outcome.reward,
                    next_obs_id: &outcome.observation.id,
                    next_legal: &next_legal,
                    terminal: outcome.terminal,
                },
                hp,
            )?;
            let done = outcome.ends_episode();
            obs = outcome.observation;
            if done {
                break;
            }
        }
        curve.push(total);
    }
    Ok(TrainResult {
        q,
        learning_curve: curve,
    })
}

/// Greedy evaluation: mean total episode reward over `episodes` rollouts
/// with epsilon = 0, using the `env.eval` seed stream.
pub fn evaluate<E: Environment>(
    env: &mut E,
    q: &DecomposedQ,
    episodes: usize,
    seed: u64,
) -> Result<f64> {
    let mut sum = 0.0;
    for episode in 0..episodes {
        let mut obs = env.reset(crate::rng::derive_seed(seed, "env.eval", episode as u64))?;
        loop {
            let legal = env.legal_actions();
            let action = q.greedy(&obs.id, &legal)?;
            let outcome = env.step(action)?;
            sum += outcome.reward.sum();
            let done = outcome.ends_episode();
            obs = outcome.observation;
            if done {
                break;
            }
        }
    }
    Ok(sum / episodes.max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Observation;

    fn hp(alpha: f64, gamma: f64) -> HyperParams {
        HyperParams {
            alpha,
            gamma,
            tau: 1000,
            ..HyperParams::default()
        }
    }

    #[test]
    fn terminal_update_with_full_alpha_writes_reward() {
        let mut q = DecomposedQ::new(2, 2);
        let r = RewardVector::from_vec(vec![1.0, 2.0]);
        q.hra_update(
            &Transition {
                obs_id: "s0",
                action: ActionId(0),
                reward: &r,
                next_obs_id: "s1",
                next_legal: &[ActionId(0), ActionId(1)],
                terminal: true,
            },
            &hp(1.0, 0.9),
        )
        .unwrap();
        assert_eq!(q.online_q("s0", ActionId(0)).values(), &[1.0, 2.0]);
    }

    #[test]
    fn two_state_chain_fixed_point() {
        // s0 -a0-> s1 (terminal) with reward (1, 2): converged Q(s0, a0) must
        // be (1, 2) regardless of gamma, summed 3.
        let mut q = DecomposedQ::new(2, 1);
        let params = HyperParams {
            alpha: 0.5,
            gamma: 0.9,
            tau: 3,
            ..HyperParams::default()
        };
        let r = RewardVector::from_vec(vec![1.0, 2.0]);
        for _ in 0..200 {
            q.hra_update(
                &Transition {
                    obs_id: "s0",
                    action: ActionId(0),
                    reward: &r,
                    next_obs_id: "s1",
                    next_legal: &[ActionId(0)],
                    terminal: true,
                },
                &params,
            )
            .unwrap();
        }
        let got = q.online_q("s0", ActionId(0));
        assert!((got[0] - 1.0).abs() < 1e-9);
        assert!((got[1] - 2.0).abs() < 1e-9);
        assert!((got.sum() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn unseen_state_reads_zero_and_greedy_tie_breaks_low() {
        let q = DecomposedQ::new(3, 4);
        let legal = vec![ActionId(1), ActionId(2)];
        assert_eq!(q.greedy("nowhere", &legal).unwrap(), ActionId(1));
        assert_eq!(q.online_q("nowhere", ActionId(3)).values(), &[0.0; 3]);
    }

    #[test]
    fn select_action_pure_greedy_at_zero_epsilon() {
        let mut q = DecomposedQ::new(1, 3);
        let r = RewardVector::from_vec(vec![5.0]);
        q.hra_update(
            &Transition {
                obs_id: "s",
                action: ActionId(2),
                reward: &r,
                next_obs_id: "t",
                next_legal: &[ActionId(0)],
                terminal: true,
            },
            &hp(1.0, 0.9),
        )
        .unwrap();
        let legal: Vec<ActionId> = (0..3).map(ActionId).collect();
        let obs = Observation::new("s", vec![]);
        let mut rng = stream_rng(0, "test", 0);
        for _ in 0..20 {
            assert_eq!(
                q.select_action(&obs, &legal, 0.0, &mut rng).unwrap(),
                ActionId(2)
            );
        }
    }

    #[test]
    fn select_action_uniform_at_full_epsilon() {
        // 10,000 draws over 4 legal actions: each count within 3 sigma of
        // 2,500 (sigma = sqrt(n p (1-p)) ~ 43.3).
        let q = DecomposedQ::new(1, 4);
        let legal: Vec<ActionId> = (0..4).map(ActionId).collect();
        let obs = Observation::new("s", vec![]);
        let mut rng = stream_rng(123, "uniformity", 0);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            counts[q.select_action(&obs, &legal, 1.0, &mut rng).unwrap().0] += 1;
        }
        let sigma = (10_000.0_f64 * 0.25 * 0.75).sqrt();
        for &c in &counts {
            assert!(
                (c as f64 - 2500.0).abs() <= 3.0 * sigma,
                "count {c} outside 3 sigma of 2500"
            );
        }
    }

    #[test]
    fn select_action_rejects_empty_legal() {
        let q = DecomposedQ::new(1, 1);
        let obs = Observation::new("s", vec![]);
        let mut rng = stream_rng(0, "test", 0);
        assert!(matches!(
            q.select_action(&obs, &[], 0.5, &mut rng),
            Err(Error::EmptyActionSet)
        ));
    }

    #[test]
    fn target_table_changes_only_at_copy_boundaries() {
        let mut q = DecomposedQ::new(1, 1);
        let params = HyperParams {
            alpha: 0.5,
            gamma: 0.9,
            tau: 5,
            ..HyperParams::default()
        };
        let r = RewardVector::from_vec(vec![1.0]);
        let mut target_snapshots = vec![];
        for i in 0..15 {
            q.hra_update(
                &Transition {
                    obs_id: "s",
                    action: ActionId(0),
                    reward: &r,
                    next_obs_id: "s",
                    next_legal: &[ActionId(0)],
                    terminal: false,
                },
                &params,
            )
            .unwrap();
            target_snapshots.push((i, q.target_q("s", ActionId(0))[0]));
        }
        // Updates 0..3 leave the target at zero; update 4 (the 5th) copies.
        for (i, t) in &target_snapshots {
            let copies_done = (i + 1) / 5;
            if copies_done == 0 {
                assert_eq!(*t, 0.0);
            }
        }
        let t4 = target_snapshots[4].1;
        assert!(t4 > 0.0);
        assert_eq!(target_snapshots[5].1, t4);
        assert_eq!(target_snapshots[8].1, t4);
        assert!(target_snapshots[9].1 > t4);
    }

    #[test]
    fn mismatched_reward_length_is_rejected() {
        let mut q = DecomposedQ::new(3, 2);
        let r = RewardVector::from_vec(vec![1.0]);
        assert!(matches!(
            q.hra_update(
                &Transition {
                    obs_id: "s",
                    action: ActionId(0),
                    reward: &r,
                    next_obs_id: "t",
                    next_legal: &[ActionId(0)],
                    terminal: true,
                },
                &hp(1.0, 0.9),
            ),
            Err(Error::MismatchedComponents {
                expected: 3,
                found: 1
            })
        ));
    }

    #[test]
    fn table_round_trip() {
        let mut q = DecomposedQ::new(2, 3);
        let params = hp(1.0, 0.9);
        for (id, a, r) in [("s0", 1, vec![0.5, -1.25]), ("s1", 0, vec![2.0, 0.0])] {
            let r = RewardVector::from_vec(r);
            q.hra_update(
                &Transition {
                    obs_id: id,
                    action: ActionId(a),
                    reward: &r,
                    next_obs_id: "end",
                    next_legal: &[ActionId(0)],
                    terminal: true,
                },
                &params,
            )
            .unwrap();
        }
        let components = vec!["A".to_string(), "B".to_string()];
        let text = q.serialize_tables(&components);
        let (parsed, parsed_components) =
            DecomposedQ::parse_tables(&text, 3, Path::new("mem")).unwrap();
        assert_eq!(parsed_components, components);
        assert_eq!(parsed.online_q("s0", ActionId(1)).values(), &[0.5, -1.25]);
        assert_eq!(parsed.online_q("s1", ActionId(0)).values(), &[2.0, 0.0]);
        assert_eq!(text, parsed.serialize_tables(&components));
    }

    #[test]
    fn training_zero_episodes_is_empty() {
        let mut env = crate::env::highway::HighwayEnv::new(Default::default()).unwrap();
        let params = HyperParams {
            episodes: 0,
            ..HyperParams::default()
        };
        let result = train(&mut env, &params).unwrap();
        assert!(result.learning_curve.is_empty());
        assert_eq!(result.q.num_states(), 0);
    }

    #[test]
    fn training_is_deterministic() {
        let mk = || {
            let mut env = crate::env::highway::HighwayEnv::new(Default::default()).unwrap();
            let params = HyperParams {
                episodes: 30,
                seed: 99,
                ..HyperParams::default()
            };
            let result = train(&mut env, &params).unwrap();
            (
                result.learning_curve,
                result
                    .q
                    .serialize_tables(&["CL".into(), "SU".into(), "RML".into()]),
            )
        };
        assert_eq!(mk(), mk());
    }
}
