//! Desk-scale multi-lane highway with discrete circular-road kinematics.
//!
//! The ego vehicle earns three positive reward components: changing lanes
//! (CL), speed (SU, proportional to the post-action speed each step), and
//! occupying the right-most lane (RML). Sharing a cell with traffic after
//! simultaneous movement is a crash: the episode ends and the crash penalty
//! is split equally across components, with no positive rewards that step.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Environment, StepOutcome};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::types::{ActionId, ComponentId, Observation, RewardVector};

pub const LANE_LEFT: ActionId = ActionId(0);
pub const IDLE: ActionId = ActionId(1);
pub const LANE_RIGHT: ActionId = ActionId(2);
pub const FASTER: ActionId = ActionId(3);
pub const SLOWER: ActionId = ActionId(4);

pub const ACTION_NAMES: [&str; 5] = ["lane_left", "idle", "lane_right", "faster", "slower"];
pub const COMPONENT_NAMES: [&str; 3] = ["CL", "SU", "RML"];

pub const CL: usize = 0;
pub const SU: usize = 1;
pub const RML: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighwayConfig {
    pub num_lanes: usize,
    pub num_vehicles: usize,
    /// Road length in cells; positions wrap modulo this length.
    pub road_length: usize,
    pub episode_length: usize,
    /// Ego speed takes integer values in `0..speed_levels`.
    pub speed_levels: usize,
    /// Weights over (CL, SU, RML).
    pub weights: RewardVector,
    pub crash_penalty_total: f64,
    pub seed: u64,
}

impl Default for HighwayConfig {
    fn default() -> Self {
        Self {
            num_lanes: 4,
            num_vehicles: 8,
            road_length: 60,
            episode_length: 40,
            speed_levels: 5,
            weights: RewardVector::from_vec(vec![3.0, 1.0, 8.0]),
            crash_penalty_total: -3.0,
            seed: 0,
        }
    }
}

impl HighwayConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_lanes < 2 {
            return Err(Error::Config("num_lanes must be at least 2".into()));
        }
        if self.speed_levels < 2 {
            return Err(Error::Config("speed_levels must be at least 2".into()));
        }
        if self.road_length == 0 {
            return Err(Error::Config("road_length must be positive".into()));
        }
        if self.weights.len() != COMPONENT_NAMES.len() {
            return Err(Error::Config(format!(
                "highway weights must have {} entries (CL, SU, RML)",
                COMPONENT_NAMES.len()
            )));
        }
        if !self.weights.is_finite() {
            return Err(Error::Config("highway weights must be finite".into()));
        }
        if self.num_vehicles >= self.num_lanes * self.road_length {
            return Err(Error::Config(format!(
                "{} vehicles cannot be placed on {} cells",
                self.num_vehicles,
                self.num_lanes * self.road_length
            )));
        }
        Ok(())
    }

    pub fn components() -> Vec<ComponentId> {
        COMPONENT_NAMES
            .iter()
            .enumerate()
            .map(|(i, n)| ComponentId::new(i, *n))
            .collect()
    }
}

/// A traffic vehicle: (lane, position, fixed speed).
pub type Vehicle = (usize, usize, usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighwayState {
    pub ego_lane: usize,
    pub ego_speed: usize,
    pub ego_pos: usize,
    pub others: Vec<Vehicle>,
    pub step: usize,
}

/// Places the ego and seeded-uniform traffic for a new episode.
///
/// The ego starts at the middle lane (floor), speed 1, position 0. Traffic
/// occupies distinct (lane, pos) cells excluding the ego cell; each vehicle's
/// fixed speed is drawn from {1, 2}. Positions are drawn before speeds.
pub fn reset(config: &HighwayConfig, episode_seed: u64) -> Result<HighwayState> {
    config.validate()?;
    let ego_lane = config.num_lanes / 2;
    let total_cells = config.num_lanes * config.road_length;
    let ego_cell = ego_lane * config.road_length;

    let mut rng = stream_rng(config.seed, "highway.reset", episode_seed);
    // Sample from total_cells - 1 slots, then shift indices past the ego cell.
    let picks = sample(&mut rng, total_cells - 1, config.num_vehicles);
    let mut others: Vec<Vehicle> = picks
        .iter()
        .map(|raw| {
            let cell = if raw >= ego_cell { raw + 1 } else { raw };
            (cell / config.road_length, cell % config.road_length, 0)
        })
        .collect();
    for v in &mut others {
        v.2 = rng.random_range(1..=2);
    }

    Ok(HighwayState {
        ego_lane,
        ego_speed: 1,
        ego_pos: 0,
        others,
        step: 0,
    })
}

/// Advances the world one step.
///
/// Lane and speed changes clamp at the bounds and a clamped lane change
/// counts as no change. The ego then advances by its updated speed and every
/// traffic vehicle by its own fixed speed; a crash is any shared cell after
/// this simultaneous movement.
pub fn step(
    state: &HighwayState,
    action: ActionId,
    config: &HighwayConfig,
) -> Result<(HighwayState, RewardVector, bool)> {
    if action.0 >= ACTION_NAMES.len() {
        return Err(Error::UnknownAction {
            action: action.0,
            num_actions: ACTION_NAMES.len(),
        });
    }

    let mut lane = state.ego_lane;
    let mut speed = state.ego_speed;
    match action {
        LANE_LEFT => lane = lane.saturating_sub(1),
        LANE_RIGHT => lane = (lane + 1).min(config.num_lanes - 1),
        FASTER => speed = (speed + 1).min(config.speed_levels - 1),
        SLOWER => speed = speed.saturating_sub(1),
        _ => {}
    }
    let lane_changed = lane != state.ego_lane;
    let pos = (state.ego_pos + speed) % config.road_length;

    let others: Vec<Vehicle> = state
        .others
        .iter()
        .map(|&(l, p, v)| (l, (p + v) % config.road_length, v))
        .collect();

    let crashed = others.iter().any(|&(l, p, _)| l == lane && p == pos);
    let step_count = state.step + 1;
    let terminal = crashed || step_count >= config.episode_length;

    let num_components = COMPONENT_NAMES.len();
    let reward = if crashed {
        RewardVector::from_vec(vec![
            config.crash_penalty_total / num_components as f64;
            num_components
        ])
    } else {
        let mut r = RewardVector::zeros(num_components);
        if lane_changed {
            r[CL] = config.weights[CL];
        }
        r[SU] = config.weights[SU] * speed as f64 / (config.speed_levels - 1) as f64;
        if lane == config.num_lanes - 1 {
            r[RML] = config.weights[RML];
        }
        r
    };

    let next = HighwayState {
        ego_lane: lane,
        ego_speed: speed,
        ego_pos: pos,
        others,
        step: step_count,
    };
    Ok((next, reward, terminal))
}

/// Tabular abstraction of a state: ego lane, ego speed, and occupancy of the
/// 3x3 cell window anchored at the ego (lanes ego-1..ego+1, positions
/// ego..ego+2). Bit 3*(lane_offset+1) + pos_offset; a vehicle directly ahead
/// sets the window's center bit.
pub fn observe(state: &HighwayState, config: &HighwayConfig) -> Observation {
    let mut bits = [0u8; 9];
    for (i, bit) in bits.iter_mut().enumerate() {
        let lane_off = (i / 3) as isize - 1;
        let pos_off = i % 3;
        let lane = state.ego_lane as isize + lane_off;
        if lane < 0 || lane >= config.num_lanes as isize {
            continue;
        }
        let pos = (state.ego_pos + pos_off) % config.road_length;
        if state
            .others
            .iter()
            .any(|&(l, p, _)| l == lane as usize && p == pos)
        {
            *bit = 1;
        }
    }
    let bit_str: String = bits.iter().map(|b| char::from(b'0' + b)).collect();
    let id = format!("l{}s{}o{}", state.ego_lane, state.ego_speed, bit_str);
    let mut features = Vec::with_capacity(11);
    features.push(state.ego_lane as f64);
    features.push(state.ego_speed as f64);
    features.extend(bits.iter().map(|&b| b as f64));
    Observation::new(id, features)
}

/// Debug view: lanes as rows, ego 'E', traffic 'x', empty '.'.
pub fn render_ascii(state: &HighwayState, config: &HighwayConfig) -> String {
    let mut grid = vec![vec!['.'; config.road_length]; config.num_lanes];
    for &(l, p, _) in &state.others {
        grid[l][p] = 'x';
    }
    grid[state.ego_lane][state.ego_pos] = 'E';
    grid.into_iter()
        .map(|row| row.into_iter().collect::<String>())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Stateful adapter over the pure transition functions.
pub struct HighwayEnv {
    config: HighwayConfig,
    components: Vec<ComponentId>,
    state: Option<HighwayState>,
}

impl HighwayEnv {
    pub fn new(config: HighwayConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            components: HighwayConfig::components(),
            state: None,
        })
    }

    pub fn config(&self) -> &HighwayConfig {
        &self.config
    }

    pub fn state(&self) -> Option<&HighwayState> {
        self.state.as_ref()
    }
}

impl Environment for HighwayEnv {
    fn components(&self) -> &[ComponentId] {
        &self.components
    }

    fn num_actions(&self) -> usize {
        ACTION_NAMES.len()
    }

    fn action_names(&self) -> &[&'static str] {
        &ACTION_NAMES
    }

    fn reset(&mut self, episode_seed: u64) -> Result<Observation> {
        let state = reset(&self.config, episode_seed)?;
        let obs = observe(&state, &self.config);
        self.state = Some(state);
        Ok(obs)
    }

    fn legal_actions(&self) -> Vec<ActionId> {
        (0..ACTION_NAMES.len()).map(ActionId).collect()
    }

    fn step(&mut self, action: ActionId) -> Result<StepOutcome> {
        let state = self
            .state
            .as_ref()
            .ok_or_else(|| Error::Config("step called before reset".into()))?;
        let (next, reward, terminal) = step(state, action, &self.config)?;
        let observation = observe(&next, &self.config);
        self.state = Some(next);
        Ok(StepOutcome {
            observation,
            reward,
            terminal,
            truncated: false,
        })
    }
}
