//! Pipeline library behind the `rdx` binary: experiment configuration,
//! per-stage commands, and the bundled end-to-end demo.

pub mod config;
pub mod pipeline;

/// Bundled experiment configurations (the four highway agents and three
/// pacman agents with their published weight tables).
pub const HIGHWAY_CONFIG_TOML: &str = include_str!("../configs/highway.toml");
pub const PACMAN_CONFIG_TOML: &str = include_str!("../configs/pacman.toml");
