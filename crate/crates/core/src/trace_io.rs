//! Line-delimited trace files.
//!
//! Each episode starts with a header record carrying the episode id, agent
//! id, component names, and the episode's total reward; every following line
//! is one `TraceStep`. Serialization is canonical (sorted keys, shortest
//! round-trip floats), so identical traces produce identical bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Trace, TraceStep};

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Record {
    Episode {
        episode_id: u64,
        agent_id: String,
        components: Vec<String>,
        total_reward: f64,
    },
    Step(TraceStep),
}

/// Serializes one episode to the line-delimited text form.
pub fn serialize_trace(trace: &Trace, components: &[String]) -> String {
    let mut out = String::new();
    let header = Record::Episode {
        episode_id: trace.episode_id,
        agent_id: trace.agent_id.clone(),
        components: components.to_vec(),
        total_reward: trace.total_reward,
    };
    out.push_str(&serde_json::to_string(&header).expect("trace header serializes"));
    out.push('\n');
    for step in &trace.steps {
        out.push_str(&serde_json::to_string(&Record::Step(step.clone())).expect("step serializes"));
        out.push('\n');
    }
    out
}

/// Parses one or more episodes from the line-delimited text form.
///
/// `origin` is used only for error messages. Every parsed trace is validated
/// against the structural invariants.
pub fn parse_traces(text: &str, origin: &Path) -> Result<Vec<Trace>> {
    let mut traces: Vec<Trace> = Vec::new();
    let mut current: Option<(Trace, Vec<String>)> = None;

    let finish = |t: Option<(Trace, Vec<String>)>| -> Result<Option<Trace>> {
        match t {
            None => Ok(None),
            Some((trace, _components)) => {
                trace.validate()?;
                Ok(Some(trace))
            }
        }
    };

    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: lineno + 1,
            message: e.to_string(),
        })?;
        match record {
            Record::Episode {
                episode_id,
                agent_id,
                components,
                total_reward,
            } => {
                if let Some(done) = finish(current.take())? {
                    traces.push(done);
                }
                current = Some((
                    Trace {
                        episode_id,
                        agent_id,
                        steps: Vec::new(),
                        total_reward,
                    },
                    components,
                ));
            }
            Record::Step(step) => match current.as_mut() {
                None => {
                    return Err(Error::Parse {
                        path: origin.to_path_buf(),
                        line: lineno + 1,
                        message: "step record before episode header".into(),
                    })
                }
                Some((trace, components)) => {
                    if step.reward.len() != components.len() {
                        return Err(Error::Parse {
                            path: origin.to_path_buf(),
                            line: lineno + 1,
                            message: format!(
                                "reward has {} components, header declares {}",
                                step.reward.len(),
                                components.len()
                            ),
                        });
                    }
                    trace.steps.push(step);
                }
            },
        }
    }
    if let Some(done) = finish(current.take())? {
        traces.push(done);
    }
    Ok(traces)
}

/// Writes one episode to `dir/<agent_id>/<episode_id>.jsonl` atomically
/// (temp file + rename). Returns the final path.
pub fn write_trace_file(trace: &Trace, components: &[String], dir: &Path) -> Result<PathBuf> {
    let agent_dir = dir.join(&trace.agent_id);
    fs::create_dir_all(&agent_dir)
        .map_err(|e| Error::io_episode(&agent_dir, trace.episode_id, e))?;
    let path = agent_dir.join(format!("{:06}.jsonl", trace.episode_id));
    let tmp = agent_dir.join(format!(".{:06}.jsonl.tmp", trace.episode_id));
    let body = serialize_trace(trace, components);
    {
        let mut f =
            fs::File::create(&tmp).map_err(|e| Error::io_episode(&tmp, trace.episode_id, e))?;
        f.write_all(body.as_bytes())
            .map_err(|e| Error::io_episode(&tmp, trace.episode_id, e))?;
    }
    fs::rename(&tmp, &path).map_err(|e| Error::io_episode(&path, trace.episode_id, e))?;
    Ok(path)
}

/// Loads every `.jsonl` trace file under `dir`, sorted by file name so the
/// result is independent of directory iteration order.
pub fn load_trace_dir(dir: &Path) -> Result<Vec<Trace>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "jsonl"))
        .collect();
    paths.sort();
    let mut traces = Vec::new();
    for path in paths {
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        traces.extend(parse_traces(&text, &path)?);
    }
    traces.sort_by_key(|t| t.episode_id);
    Ok(traces)
}
