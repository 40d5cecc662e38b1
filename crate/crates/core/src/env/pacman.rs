//! Grid Pac-Man analog with four reward components: eating normal pills
//! (NP), power pills (PP), blue ghosts (BG), and dying (DIE).
//!
//! Eating a power pill frightens all ghosts for a fixed number of steps and
//! resets the successive blue-ghost counter; successive blue-ghost rewards
//! follow the doubling 20/40/80/160 schedule. Emitted rewards are the base
//! values multiplied element-wise by the configured component weights.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::env::{Environment, StepOutcome};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::types::{ActionId, ComponentId, Observation, RewardVector};

pub const UP: ActionId = ActionId(0);
pub const DOWN: ActionId = ActionId(1);
pub const LEFT: ActionId = ActionId(2);
pub const RIGHT: ActionId = ActionId(3);
pub const IDLE: ActionId = ActionId(4);

pub const ACTION_NAMES: [&str; 5] = ["up", "down", "left", "right", "idle"];
pub const COMPONENT_NAMES: [&str; 4] = ["NP", "PP", "BG", "DIE"];

pub const NP: usize = 0;
pub const PP: usize = 1;
pub const BG: usize = 2;
pub const DIE: usize = 3;

const DIRECTION_DELTAS: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

/// Base reward values before weighting.
const NP_BASE: f64 = 1.0;
const PP_BASE: f64 = 5.0;
const DIE_BASE: f64 = -10.0;
const BG_SCHEDULE_BASE: f64 = 20.0;
/// Successive blue-ghost eats past the fourth stay at the last schedule value.
const BG_SCHEDULE_CAP: u8 = 4;

pub type Cell = (usize, usize);

/// Parsed maze: wall layout plus initial pill placement and spawn cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Maze {
    pub rows: usize,
    pub cols: usize,
    pub walls: Vec<Vec<bool>>,
    pub pills: BTreeSet<Cell>,
    pub power_pills: BTreeSet<Cell>,
    pub pacman_spawn: Cell,
    pub ghost_spawns: Vec<Cell>,
}

impl Maze {
    /// Parses the plain-text grid format: '#' wall, '.' normal pill,
    /// 'o' power pill, ' ' empty, 'P' pacman spawn, 'G' ghost spawn.
    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().filter(|l| !l.is_empty()).collect();
        if lines.is_empty() {
            return Err(Error::MazeParse("maze is empty".into()));
        }
        let cols = lines[0].chars().count();
        let rows = lines.len();
        let mut walls = vec![vec![false; cols]; rows];
        let mut pills = BTreeSet::new();
        let mut power_pills = BTreeSet::new();
        let mut pacman_spawn = None;
        let mut ghost_spawns = Vec::new();

        for (r, line) in lines.iter().enumerate() {
            if line.chars().count() != cols {
                return Err(Error::MazeParse(format!(
                    "row {r} has {} columns, expected {cols}",
                    line.chars().count()
                )));
            }
            for (c, ch) in line.chars().enumerate() {
                match ch {
                    '#' => walls[r][c] = true,
                    '.' => {
                        pills.insert((r, c));
                    }
                    'o' => {
                        power_pills.insert((r, c));
                    }
                    ' ' => {}
                    'P' => {
                        if pacman_spawn.replace((r, c)).is_some() {
                            return Err(Error::MazeParse("multiple pacman spawns".into()));
                        }
                    }
                    'G' => ghost_spawns.push((r, c)),
                    other => {
                        return Err(Error::MazeParse(format!(
                            "unexpected character {other:?} at row {r}, column {c}"
                        )))
                    }
                }
            }
        }

        let pacman_spawn =
            pacman_spawn.ok_or_else(|| Error::MazeParse("missing pacman spawn 'P'".into()))?;
        if pills.is_empty() && power_pills.is_empty() {
            return Err(Error::MazeParse(
                "maze must contain at least one pill".into(),
            ));
        }
        Ok(Self {
            rows,
            cols,
            walls,
            pills,
            power_pills,
            pacman_spawn,
            ghost_spawns,
        })
    }

    pub fn is_wall(&self, cell: Cell) -> bool {
        self.walls[cell.0][cell.1]
    }

    fn neighbor(&self, cell: Cell, direction: usize) -> Option<Cell> {
        let (dr, dc) = DIRECTION_DELTAS[direction];
        let r = cell.0 as isize + dr;
        let c = cell.1 as isize + dc;
        if r < 0 || c < 0 || r >= self.rows as isize || c >= self.cols as isize {
            return None;
        }
        let next = (r as usize, c as usize);
        (!self.is_wall(next)).then_some(next)
    }
}

/// Bundled 7x7 maze with two power pills in opposite corners.
pub const DEFAULT_MAZE: &str = "\
#######
#P...o#
#.#.#.#
#.....#
#.#.#.#
#o...G#
#######
";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacmanConfig {
    pub maze: Maze,
    pub num_ghosts: usize,
    /// Ghost-move phases during which ghosts stay frightened after a power
    /// pill, counting the step the pill was eaten.
    pub frightened_duration: usize,
    pub episode_length: usize,
    /// Weights over (NP, PP, BG, DIE).
    pub weights: RewardVector,
    pub seed: u64,
}

impl Default for PacmanConfig {
    fn default() -> Self {
        Self {
            maze: Maze::parse(DEFAULT_MAZE).expect("bundled maze parses"),
            num_ghosts: 1,
            frightened_duration: 10,
            episode_length: 200,
            weights: RewardVector::from_vec(vec![1.0, 1.0, 1.0, 1.0]),
            seed: 0,
        }
    }
}

impl PacmanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != COMPONENT_NAMES.len() {
            return Err(Error::Config(format!(
                "pacman weights must have {} entries (NP, PP, BG, DIE)",
                COMPONENT_NAMES.len()
            )));
        }
        if !self.weights.is_finite() {
            return Err(Error::Config("pacman weights must be finite".into()));
        }
        if self.maze.ghost_spawns.len() != self.num_ghosts {
            return Err(Error::Config(format!(
                "maze has {} ghost spawns but num_ghosts is {}",
                self.maze.ghost_spawns.len(),
                self.num_ghosts
            )));
        }
        if self.maze.is_wall(self.maze.pacman_spawn)
            || self.maze.ghost_spawns.iter().any(|&g| self.maze.is_wall(g))
        {
            return Err(Error::Config("spawn cells must not be walls".into()));
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacmanState {
    pub pacman_pos: Cell,
    pub ghost_pos: Vec<Cell>,
    /// Shared frightened timer; ghosts are frightened while it is positive.
    pub ghost_frightened_timer: usize,
    pub pills_remaining: BTreeSet<Cell>,
    pub power_pills_remaining: BTreeSet<Cell>,
    pub successive_bg_count: u8,
    pub step: usize,
}

pub fn reset(config: &PacmanConfig) -> Result<PacmanState> {
    config.validate()?;
    Ok(PacmanState {
        pacman_pos: config.maze.pacman_spawn,
        ghost_pos: config.maze.ghost_spawns.clone(),
        ghost_frightened_timer: 0,
        pills_remaining: config.maze.pills.clone(),
        power_pills_remaining: config.maze.power_pills.clone(),
        successive_bg_count: 0,
        step: 0,
    })
}

fn manhattan(a: Cell, b: Cell) -> usize {
    a.0.abs_diff(b.0) + a.1.abs_diff(b.1)
}

/// Chase move: the direction minimizing Manhattan distance to pacman, ties
/// broken by the lowest direction index. Stays put if walled in.
fn chase_move(maze: &Maze, ghost: Cell, pacman: Cell) -> Cell {
    let mut best: Option<(usize, Cell)> = None;
    for dir in 0..4 {
        if let Some(next) = maze.neighbor(ghost, dir) {
            let d = manhattan(next, pacman);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, next));
            }
        }
    }
    best.map_or(ghost, |(_, c)| c)
}

/// Frightened move: seeded-uniform choice among legal directions.
fn frightened_move(maze: &Maze, ghost: Cell, rng: &mut ChaCha8Rng) -> Cell {
    let legal: Vec<Cell> = (0..4).filter_map(|dir| maze.neighbor(ghost, dir)).collect();
    if legal.is_empty() {
        ghost
    } else {
        legal[rng.random_range(0..legal.len())]
    }
}

struct StepEffects {
    base: RewardVector,
    dying: bool,
    /// Ghosts eaten this step; they respawn and sit out the rest of the step.
    eaten: Vec<bool>,
}

/// Resolves pacman/ghost collisions at the pacman cell. Frightened ghosts are
/// eaten (BG schedule reward, respawn at their start cell); a non-frightened
/// ghost kills pacman.
fn resolve_collisions(state: &mut PacmanState, config: &PacmanConfig, effects: &mut StepEffects) {
    for g in 0..state.ghost_pos.len() {
        if effects.eaten[g] || state.ghost_pos[g] != state.pacman_pos {
            continue;
        }
        if state.ghost_frightened_timer > 0 {
            let exponent = state.successive_bg_count.min(BG_SCHEDULE_CAP - 1);
            effects.base[BG] += BG_SCHEDULE_BASE * f64::from(1u32 << exponent);
            state.successive_bg_count = (state.successive_bg_count + 1).min(BG_SCHEDULE_CAP);
            state.ghost_pos[g] = config.maze.ghost_spawns[g];
            effects.eaten[g] = true;
        } else {
            effects.base[DIE] += DIE_BASE;
            effects.dying = true;
        }
    }
}

/// Advances the world one step: pacman moves (wall moves are no-ops) and
/// eats, collisions resolve, ghosts move, collisions resolve again, the
/// frightened timer ticks down at the end of the step.
pub fn step(
    state: &PacmanState,
    action: ActionId,
    config: &PacmanConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(PacmanState, RewardVector, bool)> {
    if action.0 >= ACTION_NAMES.len() {
        return Err(Error::UnknownAction {
            action: action.0,
            num_actions: ACTION_NAMES.len(),
        });
    }

    let mut next = state.clone();
    let mut effects = StepEffects {
        base: RewardVector::zeros(COMPONENT_NAMES.len()),
        dying: false,
        eaten: vec![false; state.ghost_pos.len()],
    };

    if action != IDLE {
        if let Some(cell) = config.maze.neighbor(state.pacman_pos, action.0) {
            next.pacman_pos = cell;
        }
    }

    if next.pills_remaining.remove(&next.pacman_pos) {
        effects.base[NP] += NP_BASE;
    }
    if next.power_pills_remaining.remove(&next.pacman_pos) {
        effects.base[PP] += PP_BASE;
        next.ghost_frightened_timer = config.frightened_duration;
        next.successive_bg_count = 0;
    }

    resolve_collisions(&mut next, config, &mut effects);

    if !effects.dying {
        for g in 0..next.ghost_pos.len() {
            if effects.eaten[g] {
                continue;
            }
            next.ghost_pos[g] = if next.ghost_frightened_timer > 0 {
                frightened_move(&config.maze, next.ghost_pos[g], rng)
            } else {
                chase_move(&config.maze, next.ghost_pos[g], next.pacman_pos)
            };
        }
        resolve_collisions(&mut next, config, &mut effects);
    }

    if next.ghost_frightened_timer > 0 {
        next.ghost_frightened_timer -= 1;
    }
    next.step += 1;

    let cleared = next.pills_remaining.is_empty() && next.power_pills_remaining.is_empty();
    let terminal = effects.dying || cleared || next.step >= config.episode_length;

    let reward = RewardVector::from_vec(
        effects
            .base
            .values()
            .iter()
            .zip(config.weights.values())
            .map(|(b, w)| b * w)
            .collect(),
    );
    Ok((next, reward, terminal))
}

/// Direction from pacman toward the nearest remaining pill (normal or power):
/// 0..4 = up/down/left/right, 4 = none. Nearest is by Manhattan distance with
/// (distance, row, column) tie-breaking; the dominant axis decides the
/// direction, vertical first on equal magnitudes.
fn nearest_pill_direction(state: &PacmanState) -> usize {
    let target = state
        .pills_remaining
        .iter()
        .chain(state.power_pills_remaining.iter())
        .map(|&cell| (manhattan(cell, state.pacman_pos), cell))
        .min();
    let Some((_, cell)) = target else {
        return 4;
    };
    let dr = cell.0 as isize - state.pacman_pos.0 as isize;
    let dc = cell.1 as isize - state.pacman_pos.1 as isize;
    if dr.abs() >= dc.abs() && dr != 0 {
        if dr < 0 {
            0
        } else {
            1
        }
    } else if dc < 0 {
        2
    } else {
        3
    }
}

/// Tabular abstraction: pacman cell, ghost cells, frightened timer bucketed
/// into {0, low, high}, remaining power-pill count, and the direction to the
/// nearest pill. The pill bitmap itself is deliberately excluded to bound the
/// state count.
pub fn observe(state: &PacmanState, config: &PacmanConfig) -> Observation {
    let half = config.frightened_duration / 2;
    let bucket = if state.ghost_frightened_timer == 0 {
        0
    } else if state.ghost_frightened_timer <= half {
        1
    } else {
        2
    };
    let pp_count = state.power_pills_remaining.len();
    let dir = nearest_pill_direction(state);

    let ghosts = state
        .ghost_pos
        .iter()
        .map(|&(r, c)| format!("{r},{c}"))
        .collect::<Vec<_>>()
        .join(";");
    let id = format!(
        "p{},{}|g{}|f{}|pp{}|d{}",
        state.pacman_pos.0, state.pacman_pos.1, ghosts, bucket, pp_count, dir
    );

    let mut features = Vec::with_capacity(2 + 2 * state.ghost_pos.len() + 3);
    features.push(state.pacman_pos.0 as f64);
    features.push(state.pacman_pos.1 as f64);
    for &(r, c) in &state.ghost_pos {
        features.push(r as f64);
        features.push(c as f64);
    }
    features.push(bucket as f64);
    features.push(pp_count as f64);
    features.push(dir as f64);
    Observation::new(id, features)
}

/// Stateful adapter over the pure transition functions. Ghost randomness is
/// drawn from a stream seeded by (config.seed, episode seed).
pub struct PacmanEnv {
    config: PacmanConfig,
    components: Vec<ComponentId>,
    state: Option<PacmanState>,
    rng: ChaCha8Rng,
}

impl PacmanEnv {
    pub fn new(config: PacmanConfig) -> Result<Self> {
        config.validate()?;
        let rng = stream_rng(config.seed, "pacman.episode", 0);
        Ok(Self {
            config,
            components: PacmanConfig::components(),
            state: None,
            rng,
        })
    }

    pub fn config(&self) -> &PacmanConfig {
        &self.config
    }

    pub fn state(&self) -> Option<&PacmanState> {
        self.state.as_ref()
    }
}

impl Environment for PacmanEnv {
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
        let state = reset(&self.config)?;
        self.rng = stream_rng(self.config.seed, "pacman.episode", episode_seed);
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
        let (next, reward, terminal) = step(state, action, &self.config, &mut self.rng)?;
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
