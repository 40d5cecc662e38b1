//! Pipeline stages behind the CLI subcommands. Every stage is a pure
//! function of (config, seed, files on disk); artifacts contain no
//! timestamps, so reruns are byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};

use rdx_core::env::Environment;
use rdx_core::explain::{render_report, ReportMode};
use rdx_core::harness::{
    correctness, correctness_high_contrast, judge_preferences_with, sanity_check, value_iteration,
    AgentReport, ConditionReport, EvaluationReport, ExplicitMdp, JudgeOutcome, JudgeSignal, MdpEnv,
    OracleReport,
};
use rdx_core::learner::{train, DecomposedQ};
use rdx_core::recorder::{persist_traces, record};
use rdx_core::rng::derive_seed;
use rdx_core::summarizer::{summarize, SelectionMethod, Summary};
use rdx_core::trace_io::load_trace_dir;
use rdx_core::types::{ComponentId, HyperParams, Trace};

use crate::config::{AgentSection, Experiment};

/// Weight-ratio threshold above which a pair counts as high-contrast.
pub const HIGH_CONTRAST_RATIO: f64 = 2.0;

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

fn components_of(env: &dyn Environment) -> Vec<ComponentId> {
    env.components().to_vec()
}

/// Trains every agent in the config; writes Q-tables and learning curves.
pub fn cmd_train(experiment: &Experiment) -> Result<Vec<PathBuf>> {
    let mut outputs = Vec::new();
    for (index, agent) in experiment.config.agents.iter().enumerate() {
        let mut env = experiment.build_env(agent)?;
        let hp = experiment.hyper_params(index);
        let result = train(&mut env, &hp)?;

        let dir = experiment.agent_dir(&agent.id);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

        let qtable_path = dir.join("qtable.tsv");
        write_atomic(
            &qtable_path,
            result.q.serialize_tables(&env.component_names()).as_bytes(),
        )?;

        let mut curve = String::from("episode,total_reward\n");
        for (episode, total) in result.learning_curve.iter().enumerate() {
            let _ = writeln!(curve, "{episode},{total}");
        }
        let curve_path = dir.join("learning_curve.csv");
        write_atomic(&curve_path, curve.as_bytes())?;
        outputs.push(qtable_path);
        outputs.push(curve_path);
    }
    Ok(outputs)
}

fn load_qtable(experiment: &Experiment, agent: &AgentSection) -> Result<DecomposedQ> {
    let path = experiment.agent_dir(&agent.id).join("qtable.tsv");
    let env = experiment.build_env(agent)?;
    let (q, _components) = DecomposedQ::load(&path, env.num_actions())
        .with_context(|| format!("loading q-table {} (run `train` first)", path.display()))?;
    Ok(q)
}

/// Rolls out greedy episodes for every agent and persists the traces.
pub fn cmd_record(experiment: &Experiment) -> Result<Vec<PathBuf>> {
    let mut outputs = Vec::new();
    for (index, agent) in experiment.config.agents.iter().enumerate() {
        let q = load_qtable(experiment, agent)?;
        let mut env = experiment.build_env(agent)?;
        let traces = record(
            &mut env,
            &q,
            experiment.config.record.episodes,
            experiment.record_seed(index),
            &agent.id,
        )?;
        let dir = experiment.agent_dir(&agent.id).join("traces");
        let components = env.component_names();
        let paths = persist_traces(&traces, &components, &dir)?;
        outputs.push(dir.join(&agent.id));
        drop(paths);
    }
    Ok(outputs)
}

fn traces_dir(experiment: &Experiment, agent_id: &str) -> PathBuf {
    experiment.agent_dir(agent_id).join("traces").join(agent_id)
}

fn load_traces(experiment: &Experiment, agent_id: &str) -> Result<Vec<Trace>> {
    let dir = traces_dir(experiment, agent_id);
    let traces = load_trace_dir(&dir)
        .with_context(|| format!("loading traces from {} (run `record` first)", dir.display()))?;
    if traces.is_empty() {
        return Err(anyhow!("no traces found under {}", dir.display()));
    }
    Ok(traces)
}

/// Optional overrides for `summarize` flags.
#[derive(Debug, Default, Clone)]
pub struct SummarizeOverrides {
    pub method: Option<SelectionMethod>,
    pub k: Option<usize>,
    pub interval: Option<usize>,
    pub window: Option<usize>,
    pub metric: Option<rdx_core::summarizer::ImportanceMetric>,
    pub div_threshold: Option<f64>,
    pub replicates: Option<usize>,
}

fn summary_filename(selection: SelectionMethod, replicate: Option<usize>) -> String {
    match (selection, replicate) {
        (SelectionMethod::Highlights, _) => "highlights.json".into(),
        (SelectionMethod::HighlightsDiv, _) => "highlights_div.json".into(),
        (SelectionMethod::Frequency, Some(r)) => format!("frequency_r{r}.json"),
        (SelectionMethod::Frequency, None) => "frequency_r0.json".into(),
    }
}

/// Builds summaries for every agent. With the frequency method (or by
/// default, alongside the configured importance-based method) one summary
/// document per replicate is written.
pub fn cmd_summarize(
    experiment: &Experiment,
    overrides: &SummarizeOverrides,
) -> Result<Vec<PathBuf>> {
    let mut outputs = Vec::new();
    for agent in &experiment.config.agents {
        let traces = load_traces(experiment, &agent.id)?;
        let dir = experiment.agent_dir(&agent.id).join("summaries");
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

        let selection = overrides
            .method
            .unwrap_or(experiment.config.summary.selection);
        let replicates = overrides
            .replicates
            .unwrap_or(experiment.config.summary.fs_replicates);

        let apply = |mut spec: rdx_core::summarizer::SummarySpec| {
            if let Some(k) = overrides.k {
                spec.k = k;
            }
            if let Some(interval) = overrides.interval {
                spec.interval = interval;
            }
            if let Some(window) = overrides.window {
                spec.context_window = window;
            }
            if let Some(metric) = overrides.metric {
                spec.metric = metric;
            }
            if overrides.div_threshold.is_some() {
                spec.div_threshold = overrides.div_threshold;
            }
            spec
        };

        if selection == SelectionMethod::Frequency {
            for replicate in 0..replicates.max(1) {
                let spec = apply(experiment.frequency_spec(&agent.id, replicate));
                let summary = summarize(&traces, &spec)?;
                let path = dir.join(summary_filename(
                    SelectionMethod::Frequency,
                    Some(replicate),
                ));
                write_atomic(&path, summary.to_document().as_bytes())?;
                outputs.push(path);
            }
        } else {
            let mut spec = apply(experiment.summary_spec(experiment.master_seed)?);
            spec.selection = selection;
            if selection == SelectionMethod::Highlights {
                spec.div_threshold = None;
            }
            let summary = summarize(&traces, &spec)?;
            let path = dir.join(summary_filename(selection, None));
            write_atomic(&path, summary.to_document().as_bytes())?;
            outputs.push(path);
            // Frequency replicates ride along so the four study conditions are
            // renderable without a second invocation.
            for replicate in 0..replicates {
                let spec = apply(experiment.frequency_spec(&agent.id, replicate));
                let summary = summarize(&traces, &spec)?;
                let path = dir.join(summary_filename(
                    SelectionMethod::Frequency,
                    Some(replicate),
                ));
                write_atomic(&path, summary.to_document().as_bytes())?;
                outputs.push(path);
            }
        }
    }
    Ok(outputs)
}

fn load_summary(path: &Path, traces: &[Trace]) -> Result<Summary> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading summary {} (run `summarize` first)", path.display()))?;
    let mut summary = Summary::from_document(&text, path)?;
    summary.hydrate(traces)?;
    Ok(summary)
}

fn importance_summary_path(experiment: &Experiment, agent_id: &str) -> PathBuf {
    experiment
        .agent_dir(agent_id)
        .join("summaries")
        .join(summary_filename(experiment.config.summary.selection, None))
}

fn frequency_summary_paths(experiment: &Experiment, agent_id: &str) -> Vec<PathBuf> {
    let dir = experiment.agent_dir(agent_id).join("summaries");
    (0..experiment.config.summary.fs_replicates.max(1))
        .map(|r| dir.join(summary_filename(SelectionMethod::Frequency, Some(r))))
        .collect()
}

/// Renders the report for one condition for every agent.
pub fn cmd_render(experiment: &Experiment, mode: ReportMode) -> Result<Vec<PathBuf>> {
    let view = experiment.board_view()?;
    let bar_mode = experiment.bar_mode();
    let mut outputs = Vec::new();
    for agent in &experiment.config.agents {
        let traces = load_traces(experiment, &agent.id)?;
        let summaries: Vec<Summary> = match mode {
            ReportMode::Highlights | ReportMode::HighlightsRd => {
                vec![load_summary(
                    &importance_summary_path(experiment, &agent.id),
                    &traces,
                )?]
            }
            ReportMode::Frequency | ReportMode::FrequencyRd => {
                frequency_summary_paths(experiment, &agent.id)
                    .iter()
                    .map(|p| load_summary(p, &traces))
                    .collect::<Result<_>>()?
            }
        };
        let env = experiment.build_env(agent)?;
        let components = components_of(env.as_ref());
        let out_dir = experiment
            .agent_dir(&agent.id)
            .join("reports")
            .join(mode.slug());
        fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
        let path = render_report(&summaries, mode, bar_mode, &view, &components, &out_dir)?;
        outputs.push(path);
    }
    Ok(outputs)
}

fn judge_condition(
    summaries: &[Summary],
    components: &[ComponentId],
    weights: &rdx_core::types::RewardVector,
    signal: JudgeSignal,
) -> Result<ConditionReport> {
    let mut outcomes: Vec<JudgeOutcome> = Vec::new();
    for summary in summaries {
        outcomes.push(judge_preferences_with(summary, components, signal)?);
    }
    let n = outcomes.len() as f64;
    let mean_correct = outcomes
        .iter()
        .map(|o| correctness(o, weights))
        .sum::<f64>()
        / n;
    let high: Vec<f64> = outcomes
        .iter()
        .filter_map(|o| correctness_high_contrast(o, weights, HIGH_CONTRAST_RATIO))
        .collect();
    let high_mean = if high.is_empty() {
        None
    } else {
        Some(high.iter().sum::<f64>() / high.len() as f64)
    };
    Ok(ConditionReport {
        correctness: mean_correct,
        correctness_high_contrast: high_mean,
        replicates: outcomes.len(),
        pairs: outcomes[0].pairs.clone(),
    })
}

/// Judges all four conditions for every agent and writes `judge_report.json`.
/// `rd_signal` selects the decomposition signal for the RD conditions
/// (chosen-action Q by default; all-actions Q for the ablation flag).
pub fn cmd_judge_with(
    experiment: &Experiment,
    rd_signal: JudgeSignal,
) -> Result<(PathBuf, EvaluationReport)> {
    let mut report = EvaluationReport::default();
    for agent in &experiment.config.agents {
        let traces = load_traces(experiment, &agent.id)?;
        let env = experiment.build_env(agent)?;
        let components = components_of(env.as_ref());
        let weights = experiment.weights(agent);

        let importance = vec![load_summary(
            &importance_summary_path(experiment, &agent.id),
            &traces,
        )?];
        let frequency: Vec<Summary> = frequency_summary_paths(experiment, &agent.id)
            .iter()
            .map(|p| load_summary(p, &traces))
            .collect::<Result<_>>()?;

        let mut agent_report = AgentReport {
            weights: weights.values().to_vec(),
            conditions: BTreeMap::new(),
        };
        for (slug, summaries, signal) in [
            ("h", &importance, JudgeSignal::ObservedReward),
            ("fs", &frequency, JudgeSignal::ObservedReward),
            ("h_rd", &importance, rd_signal),
            ("fs_rd", &frequency, rd_signal),
        ] {
            agent_report.conditions.insert(
                slug.to_string(),
                judge_condition(summaries, &components, &weights, signal)?,
            );
        }
        report.agents.insert(agent.id.clone(), agent_report);
    }
    let path = experiment.out_dir.join("judge_report.json");
    fs::create_dir_all(&experiment.out_dir)
        .with_context(|| format!("creating {}", experiment.out_dir.display()))?;
    write_atomic(&path, report.to_json().as_bytes())?;
    Ok((path, report))
}

pub fn cmd_judge(experiment: &Experiment) -> Result<(PathBuf, EvaluationReport)> {
    cmd_judge_with(experiment, JudgeSignal::ChosenQ)
}

/// Runs the decomposed-vs-monolithic comparison and writes
/// `sanity_report.json`.
pub fn cmd_sanity(experiment: &Experiment) -> Result<(PathBuf, rdx_core::harness::SanityReport)> {
    let (config, normalization, eval_episodes) = experiment.build_sanity_env()?;
    let hp = HyperParams {
        seed: derive_seed(experiment.master_seed, "sanity", 0),
        ..experiment.hyper_params(0)
    };
    let report = sanity_check(
        || rdx_core::env::highway::HighwayEnv::new(config.clone()),
        normalization,
        &hp,
        eval_episodes,
    )?;
    fs::create_dir_all(&experiment.out_dir)
        .with_context(|| format!("creating {}", experiment.out_dir.display()))?;
    let path = experiment.out_dir.join("sanity_report.json");
    let mut body = serde_json::to_string_pretty(&report)?;
    body.push('\n');
    write_atomic(&path, body.as_bytes())?;
    Ok((path, report))
}

/// Quick oracle self-check for the demo report: per-head vs scalar value
/// iteration on seeded MDPs, plus a trained-to-convergence learner
/// comparison on a few of them.
pub fn oracle_residuals(seed: u64) -> Result<OracleReport> {
    let mut max_vi = 0.0f64;
    let mut max_learner = 0.0f64;
    let mdps = 10usize;
    for i in 0..mdps {
        let mdp = ExplicitMdp::random(derive_seed(seed, "oracle", i as u64), 8, 3, 3, true);
        let vi = value_iteration(&mdp, 0.9, 1e-12)?;
        for s in 0..mdp.num_states {
            if mdp.terminal[s] {
                continue;
            }
            for a in 0..mdp.num_actions {
                max_vi = max_vi.max((vi.q_components[s][a].sum() - vi.q_scalar[s][a]).abs());
            }
        }
        if i < 3 {
            let hp = HyperParams {
                alpha: 1.0,
                gamma: 0.9,
                epsilon_start: 1.0,
                epsilon_end: 1.0,
                epsilon_decay_episodes: 0,
                tau: 1,
                episodes: 2000,
                seed: derive_seed(seed, "oracle.train", i as u64),
                head_local_bootstrap: false,
            };
            let mut env = MdpEnv::new(mdp.clone(), 40)?;
            let result = train(&mut env, &hp)?;
            for (s, a) in mdp.reachable_pairs() {
                let sum = result
                    .q
                    .online_q(&ExplicitMdp::obs_id(s), rdx_core::types::ActionId(a))
                    .sum();
                max_learner = max_learner.max((sum - vi.q_scalar[s][a]).abs());
            }
        }
    }
    Ok(OracleReport {
        mdps_checked: mdps,
        max_vi_residual: max_vi,
        max_learner_residual: max_learner,
    })
}

const REPORT_MODES: [ReportMode; 4] = [
    ReportMode::Highlights,
    ReportMode::Frequency,
    ReportMode::HighlightsRd,
    ReportMode::FrequencyRd,
];

/// Full pipeline for one experiment config: train, record, summarize, render
/// all four conditions, judge.
pub fn run_experiment(experiment: &Experiment) -> Result<EvaluationReport> {
    cmd_train(experiment)?;
    cmd_record(experiment)?;
    cmd_summarize(experiment, &SummarizeOverrides::default())?;
    for mode in REPORT_MODES {
        cmd_render(experiment, mode)?;
    }
    let (_, report) = cmd_judge(experiment)?;
    Ok(report)
}

/// End-to-end demo over the bundled configs. Returns the combined report
/// path and report.
pub fn cmd_demo(
    out_root: &Path,
    seed_override: Option<u64>,
) -> Result<(PathBuf, EvaluationReport)> {
    let mut combined = EvaluationReport::default();

    let highway = crate::config::Experiment::from_toml(
        crate::HIGHWAY_CONFIG_TOML,
        Path::new("."),
        seed_override,
    )?
    .with_out_dir(out_root.join("highway"));
    let highway_report = run_experiment(&highway)?;
    let (_, sanity) = cmd_sanity(&highway)?;
    combined.agents.extend(highway_report.agents);
    combined.sanity = Some(sanity);

    let pacman = crate::config::Experiment::from_toml(
        crate::PACMAN_CONFIG_TOML,
        Path::new("."),
        seed_override,
    )?
    .with_out_dir(out_root.join("pacman"));
    let pacman_report = run_experiment(&pacman)?;
    combined.agents.extend(pacman_report.agents);

    combined.oracle = Some(oracle_residuals(
        seed_override.unwrap_or(highway.master_seed),
    )?);

    let path = out_root.join("report.json");
    write_atomic(&path, combined.to_json().as_bytes())?;
    Ok((path, combined))
}
