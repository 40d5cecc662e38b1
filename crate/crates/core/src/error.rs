use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown action id {action} (environment has {num_actions} actions)")]
    UnknownAction { action: usize, num_actions: usize },

    #[error("action set is empty")]
    EmptyActionSet,

    #[error("reward vectors have mismatched lengths ({expected} vs {found})")]
    MismatchedComponents { expected: usize, found: usize },

    #[error("no traces were provided")]
    EmptyTraces,

    #[error("requested {requested} summary states but traces contain only {available} steps")]
    NotEnoughSteps { requested: usize, available: usize },

    #[error("summary contains no items")]
    EmptySummary,

    #[error("step {step} of episode {episode_id} carries no recorded q-values")]
    MissingQValues { episode_id: u64, step: usize },

    #[error("value iteration did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("episode {episode_id} did not terminate within {max_steps} steps")]
    RunawayEpisode { episode_id: u64, max_steps: usize },

    #[error("invalid trace data: {0}")]
    InvalidTrace(String),

    #[error("failed to parse maze: {0}")]
    MazeParse(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error at {}{}", path.display(), episode_id.map(|e| format!(" (episode {e})")).unwrap_or_default())]
    Io {
        path: PathBuf,
        episode_id: Option<u64>,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            episode_id: None,
            source,
        }
    }

    pub fn io_episode(path: impl Into<PathBuf>, episode_id: u64, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            episode_id: Some(episode_id),
            source,
        }
    }
}
