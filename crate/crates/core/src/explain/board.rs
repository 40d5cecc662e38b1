//! Scenario board renders, drawn from recorded observation features.
//!
//! Traces store the tabular abstraction, not the raw simulator state, so the
//! boards show exactly what the agent saw: for the highway, the ego plus the
//! observed 3x3 occupancy window; for pacman, the maze walls with actor
//! positions and the aggregate pill information.

use crate::env::pacman::Maze;
use crate::error::{Error, Result};
use crate::types::Observation;

const CELL: f64 = 26.0;
const PAD: f64 = 10.0;
const CAPTION_H: f64 = 26.0;

/// Environment-shape metadata needed to decode observation features into a
/// drawing.
#[derive(Debug, Clone)]
pub enum BoardView {
    Highway {
        num_lanes: usize,
        speed_levels: usize,
    },
    Pacman {
        maze: Maze,
        num_ghosts: usize,
    },
}

impl BoardView {
    pub fn action_names(&self) -> &'static [&'static str] {
        match self {
            BoardView::Highway { .. } => &crate::env::highway::ACTION_NAMES,
            BoardView::Pacman { .. } => &crate::env::pacman::ACTION_NAMES,
        }
    }

    pub fn render_board_svg(&self, obs: &Observation) -> Result<String> {
        match self {
            BoardView::Highway {
                num_lanes,
                speed_levels,
            } => render_highway(obs, *num_lanes, *speed_levels),
            BoardView::Pacman { maze, num_ghosts } => render_pacman(obs, maze, *num_ghosts),
        }
    }
}

fn svg_open(width: f64, height: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.2}\" height=\"{height:.2}\" viewBox=\"0 0 {width:.2} {height:.2}\">\n  <rect x=\"0\" y=\"0\" width=\"{width:.2}\" height=\"{height:.2}\" fill=\"#ffffff\"/>\n"
    )
}

fn cell_rect(x: f64, y: f64, fill: &str) -> String {
    format!(
        "  <rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{CELL:.2}\" height=\"{CELL:.2}\" fill=\"{fill}\" stroke=\"#d0d0d0\"/>\n"
    )
}

/// Highway: all lanes as rows, three observed columns (the ego cell and the
/// two cells ahead). Lanes outside the observed window are shaded.
fn render_highway(obs: &Observation, num_lanes: usize, speed_levels: usize) -> Result<String> {
    if obs.features.len() != 11 {
        return Err(Error::Config(format!(
            "highway observation must have 11 features, found {}",
            obs.features.len()
        )));
    }
    let ego_lane = obs.features[0] as usize;
    let ego_speed = obs.features[1] as usize;
    let bits = &obs.features[2..11];

    let cols = 3;
    let width = PAD * 2.0 + cols as f64 * CELL;
    let height = PAD * 2.0 + num_lanes as f64 * CELL + CAPTION_H;
    let mut svg = svg_open(width, height);

    for lane in 0..num_lanes {
        for col in 0..cols {
            let x = PAD + col as f64 * CELL;
            let y = PAD + lane as f64 * CELL;
            let observed = lane + 1 >= ego_lane && lane <= ego_lane + 1;
            let fill = if !observed {
                "#e8e8e8"
            } else {
                let lane_off = lane as isize - ego_lane as isize;
                let bit = bits[(3 * (lane_off + 1) + col as isize) as usize];
                if bit > 0.5 {
                    "#5b8dd9"
                } else {
                    "#fafafa"
                }
            };
            svg.push_str(&cell_rect(x, y, fill));
        }
    }
    // Ego marker in its lane at the window's left column.
    let ego_x = PAD + CELL * 0.5;
    let ego_y = PAD + ego_lane as f64 * CELL + CELL * 0.5;
    svg.push_str(&format!(
        "  <circle cx=\"{ego_x:.2}\" cy=\"{ego_y:.2}\" r=\"{:.2}\" fill=\"#3fa34d\"/>\n",
        CELL * 0.36
    ));
    svg.push_str(&format!(
        "  <text x=\"{PAD:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"12\" fill=\"#333333\">lane {}/{} speed {}/{}</text>\n",
        height - 8.0,
        ego_lane,
        num_lanes - 1,
        ego_speed,
        speed_levels - 1
    ));
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Pacman: maze walls with pacman, ghosts (blue while frightened), and the
/// aggregate pill readout from the observation.
fn render_pacman(obs: &Observation, maze: &Maze, num_ghosts: usize) -> Result<String> {
    let expected = 2 + 2 * num_ghosts + 3;
    if obs.features.len() != expected {
        return Err(Error::Config(format!(
            "pacman observation must have {expected} features, found {}",
            obs.features.len()
        )));
    }
    let pac = (obs.features[0] as usize, obs.features[1] as usize);
    let ghosts: Vec<(usize, usize)> = (0..num_ghosts)
        .map(|g| {
            (
                obs.features[2 + 2 * g] as usize,
                obs.features[3 + 2 * g] as usize,
            )
        })
        .collect();
    let frightened = obs.features[2 + 2 * num_ghosts] > 0.0;
    let pp_count = obs.features[3 + 2 * num_ghosts] as usize;
    let dir = obs.features[4 + 2 * num_ghosts] as usize;

    let width = PAD * 2.0 + maze.cols as f64 * CELL;
    let height = PAD * 2.0 + maze.rows as f64 * CELL + CAPTION_H;
    let mut svg = svg_open(width, height);

    for r in 0..maze.rows {
        for c in 0..maze.cols {
            let x = PAD + c as f64 * CELL;
            let y = PAD + r as f64 * CELL;
            let fill = if maze.is_wall((r, c)) {
                "#2b3a67"
            } else {
                "#fafafa"
            };
            svg.push_str(&cell_rect(x, y, fill));
        }
    }
    let center = |cell: (usize, usize)| {
        (
            PAD + cell.1 as f64 * CELL + CELL * 0.5,
            PAD + cell.0 as f64 * CELL + CELL * 0.5,
        )
    };
    let (px, py) = center(pac);
    svg.push_str(&format!(
        "  <circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"{:.2}\" fill=\"#f2c14e\"/>\n",
        CELL * 0.38
    ));
    for ghost in &ghosts {
        let (gx, gy) = center(*ghost);
        let fill = if frightened { "#5b8dd9" } else { "#d65f5f" };
        svg.push_str(&format!(
            "  <circle cx=\"{gx:.2}\" cy=\"{gy:.2}\" r=\"{:.2}\" fill=\"{fill}\"/>\n",
            CELL * 0.32
        ));
    }
    let dir_name = ["up", "down", "left", "right", "none"][dir.min(4)];
    svg.push_str(&format!(
        "  <text x=\"{PAD:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"12\" fill=\"#333333\">power pills {pp_count} nearest pill {dir_name}</text>\n",
        height - 8.0
    ));
    svg.push_str("</svg>\n");
    Ok(svg)
}
