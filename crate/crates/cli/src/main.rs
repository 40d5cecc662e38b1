//! `rdx` — train reward-decomposed agents, record traces, build summaries,
//! render explanation reports, and judge recoverability of agent priorities.
//!
//! Exit codes: 0 success, 1 usage/validation error, 2 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rdx_cli::config::Experiment;
use rdx_cli::pipeline::{
    cmd_demo, cmd_judge_with, cmd_record, cmd_render, cmd_sanity, cmd_summarize, cmd_train,
    SummarizeOverrides,
};
use rdx_core::explain::ReportMode;
use rdx_core::harness::JudgeSignal;
use rdx_core::summarizer::{ImportanceMetric, SelectionMethod};

#[derive(Parser)]
#[command(
    name = "rdx",
    about = "Reward-decomposed agents, policy summaries, and preference evaluation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config file (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train all configured agents; writes Q-tables and learning curves.
    Train(ConfigArgs),
    /// Roll out trained greedy policies and persist traces.
    Record(ConfigArgs),
    /// Build summary documents from recorded traces.
    Summarize {
        #[command(flatten)]
        config: ConfigArgs,
        /// highlights | highlights-div | frequency
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        interval: Option<usize>,
        /// Context window (states before and after the central state).
        #[arg(long)]
        window: Option<usize>,
        /// max-minus-min | max-minus-second
        #[arg(long)]
        metric: Option<String>,
        #[arg(long)]
        div_threshold: Option<f64>,
        /// Number of frequency-sampling summaries (distinct derived seeds).
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Render the static report for one condition.
    Render {
        #[command(flatten)]
        config: ConfigArgs,
        /// h | fs | h+rd | fs+rd
        #[arg(long)]
        mode: String,
    },
    /// Judge whether configured priorities are recoverable from summaries.
    Judge {
        #[command(flatten)]
        config: ConfigArgs,
        /// Score from Q-values of all legal actions instead of the chosen
        /// action only (ablation).
        #[arg(long)]
        all_actions: bool,
    },
    /// Compare decomposed vs monolithic learning on the highway.
    SanityCheck(ConfigArgs),
    /// End-to-end run of the bundled highway and pacman experiments.
    Demo {
        /// Output root directory.
        #[arg(long, default_value = "out/demo")]
        out: PathBuf,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn parse_method(text: &str) -> anyhow::Result<SelectionMethod> {
    match text.to_ascii_lowercase().replace('-', "_").as_str() {
        "highlights" => Ok(SelectionMethod::Highlights),
        "highlights_div" => Ok(SelectionMethod::HighlightsDiv),
        "frequency" => Ok(SelectionMethod::Frequency),
        other => {
            anyhow::bail!(
                "unknown method {other:?} (expected highlights, highlights-div, frequency)"
            )
        }
    }
}

fn parse_metric(text: &str) -> anyhow::Result<ImportanceMetric> {
    match text.to_ascii_lowercase().replace('-', "_").as_str() {
        "max_minus_min" => Ok(ImportanceMetric::MaxMinusMin),
        "max_minus_second" => Ok(ImportanceMetric::MaxMinusSecond),
        other => {
            anyhow::bail!("unknown metric {other:?} (expected max-minus-min, max-minus-second)")
        }
    }
}

fn usage_err(e: anyhow::Error) -> ExitCode {
    eprintln!("error: {e:#}");
    ExitCode::from(1)
}

fn load(config: &ConfigArgs) -> Result<Experiment, ExitCode> {
    Experiment::load(&config.config, config.seed).map_err(usage_err)
}

fn print_paths(paths: &[PathBuf]) {
    for path in paths {
        println!("{}", path.display());
    }
}

fn runtime<T>(result: anyhow::Result<T>) -> Result<T, ExitCode> {
    result.map_err(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })
}

fn run(cli: Cli) -> Result<(), ExitCode> {
    match cli.command {
        Command::Train(args) => {
            let experiment = load(&args)?;
            print_paths(&runtime(cmd_train(&experiment))?);
        }
        Command::Record(args) => {
            let experiment = load(&args)?;
            print_paths(&runtime(cmd_record(&experiment))?);
        }
        Command::Summarize {
            config,
            method,
            k,
            interval,
            window,
            metric,
            div_threshold,
            replicates,
        } => {
            let experiment = load(&config)?;
            let overrides = SummarizeOverrides {
                method: method
                    .as_deref()
                    .map(parse_method)
                    .transpose()
                    .map_err(usage_err)?,
                k,
                interval,
                window,
                metric: metric
                    .as_deref()
                    .map(parse_metric)
                    .transpose()
                    .map_err(usage_err)?,
                div_threshold,
                replicates,
            };
            print_paths(&runtime(cmd_summarize(&experiment, &overrides))?);
        }
        Command::Render { config, mode } => {
            let experiment = load(&config)?;
            let mode = ReportMode::parse(&mode).map_err(|e| usage_err(e.into()))?;
            print_paths(&runtime(cmd_render(&experiment, mode))?);
        }
        Command::Judge {
            config,
            all_actions,
        } => {
            let experiment = load(&config)?;
            let signal = if all_actions {
                JudgeSignal::AllActionsQ
            } else {
                JudgeSignal::ChosenQ
            };
            let (path, _) = runtime(cmd_judge_with(&experiment, signal))?;
            println!("{}", path.display());
        }
        Command::SanityCheck(args) => {
            let experiment = load(&args)?;
            let (path, report) = runtime(cmd_sanity(&experiment))?;
            println!("{}", path.display());
            println!(
                "monolithic {:.4} vs decomposed {:.4} (ratio {:.4}){}",
                report.monolithic_mean,
                report.hra_mean,
                report.ratio,
                if report.insufficient_training {
                    " [insufficient training]"
                } else {
                    ""
                }
            );
        }
        Command::Demo { out, seed } => {
            let out = match std::env::var_os("RDX_OUT") {
                Some(root) => PathBuf::from(root),
                None => out,
            };
            let (path, _) = runtime(cmd_demo(&out, seed))?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // Usage errors exit 1 (clap's default would be 2, which is reserved for
    // runtime failures here).
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if is_help {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
