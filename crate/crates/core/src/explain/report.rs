//! Static self-contained HTML reports of summary scenarios.
//!
//! Conditions mirror the four study cells: a plain HIGHLIGHTS or frequency
//! summary shows each scenario as a frame strip over its context window,
//! while the reward-decomposition variants show only the central state of
//! each trajectory alongside its per-component Q bar chart.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::{decompose, render_bars_svg, BarMode, BoardView, RenderStyle};
use crate::summarizer::Summary;
use crate::types::ComponentId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportMode {
    Highlights,
    Frequency,
    HighlightsRd,
    FrequencyRd,
}

impl ReportMode {
    pub fn includes_rd(&self) -> bool {
        matches!(self, ReportMode::HighlightsRd | ReportMode::FrequencyRd)
    }

    pub fn slug(&self) -> &'static str {
        match self {
            ReportMode::Highlights => "h",
            ReportMode::Frequency => "fs",
            ReportMode::HighlightsRd => "h_rd",
            ReportMode::FrequencyRd => "fs_rd",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ReportMode::Highlights => "H",
            ReportMode::Frequency => "FS",
            ReportMode::HighlightsRd => "H+RD",
            ReportMode::FrequencyRd => "FS+RD",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text.to_ascii_lowercase().as_str() {
            "h" => Ok(ReportMode::Highlights),
            "fs" => Ok(ReportMode::Frequency),
            "h+rd" | "h_rd" => Ok(ReportMode::HighlightsRd),
            "fs+rd" | "fs_rd" => Ok(ReportMode::FrequencyRd),
            other => Err(Error::Config(format!(
                "unknown report mode {other:?} (expected h, fs, h+rd, fs+rd)"
            ))),
        }
    }
}

const CSS: &str = "\
body { font-family: sans-serif; margin: 24px; color: #222; }
h1 { font-size: 22px; }
h2 { font-size: 17px; margin-top: 28px; }
h3 { font-size: 15px; }
.scenario { border: 1px solid #ddd; border-radius: 6px; padding: 12px; margin: 12px 0; }
.meta { color: #666; font-size: 13px; }
.strip { display: flex; overflow-x: auto; gap: 4px; padding: 6px 0; }
.strip img { border: 1px solid #eee; }
.strip img.central { border: 2px solid #3fa34d; }
.pair { display: flex; gap: 18px; align-items: flex-start; flex-wrap: wrap; }
";

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Renders `report.html` plus an `assets/` directory of SVG boards and bar
/// charts into `out_dir`. All summaries must belong to one agent and be
/// hydrated (window steps attached). Returns the report path.
pub fn render_report(
    summaries: &[Summary],
    mode: ReportMode,
    bar_mode: BarMode,
    view: &BoardView,
    components: &[ComponentId],
    out_dir: &Path,
) -> Result<PathBuf> {
    if summaries.is_empty() {
        return Err(Error::EmptySummary);
    }
    let agent_id = summaries[0].agent_id.clone();
    let assets = out_dir.join("assets");
    fs::create_dir_all(&assets).map_err(|e| Error::io(&assets, e))?;

    let style = RenderStyle::default().with_action_names(view.action_names());
    let mut html = String::new();
    let _ = write!(
        html,
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>{agent_id} [{label}]</title>\n<style>\n{CSS}</style>\n</head>\n<body>\n<h1>Agent {agent_id} &mdash; condition {label}</h1>\n",
        label = mode.label()
    );

    let mut scenario_no = 0usize;
    for (rep_idx, summary) in summaries.iter().enumerate() {
        if summary.agent_id != agent_id {
            return Err(Error::Config(
                "all summaries in a report must belong to one agent".into(),
            ));
        }
        if summaries.len() > 1 {
            let _ = writeln!(html, "<h2>Summary replicate {}</h2>", rep_idx + 1);
        }
        for item in &summary.items {
            scenario_no += 1;
            let _ = write!(
                html,
                "<div class=\"scenario\">\n<h3>Scenario {scenario_no}</h3>\n<p class=\"meta\">episode {}, step {}, importance {:.4}</p>\n",
                item.episode_id, item.central_step, item.importance
            );

            if mode.includes_rd() {
                // Static central state plus its decomposition bars.
                let board_name = format!(
                    "scenario_{scenario_no}_{}_{}.svg",
                    item.episode_id, item.central_step
                );
                let board = view.render_board_svg(&item.central.observation)?;
                write_atomic(&assets.join(&board_name), board.as_bytes())?;

                let bars = decompose(item, bar_mode, components)?;
                let bars_name = format!(
                    "scenario_{scenario_no}_{}_{}_bars.svg",
                    item.episode_id, item.central_step
                );
                write_atomic(
                    &assets.join(&bars_name),
                    render_bars_svg(&bars, &style).as_bytes(),
                )?;
                let _ = write!(
                    html,
                    "<div class=\"pair\">\n<img src=\"assets/{board_name}\" alt=\"scenario {scenario_no} state\">\n<img src=\"assets/{bars_name}\" alt=\"scenario {scenario_no} reward decomposition\">\n</div>\n"
                );
            } else {
                // Context window as a static frame strip.
                if item.window.is_empty() {
                    return Err(Error::Config(format!(
                        "summary item (episode {}, step {}) has no window; hydrate summaries before rendering",
                        item.episode_id, item.central_step
                    )));
                }
                html.push_str("<div class=\"strip\">\n");
                for step in &item.window {
                    let frame_name = format!(
                        "scenario_{scenario_no}_{}_{}.svg",
                        item.episode_id, step.step_index
                    );
                    let board = view.render_board_svg(&step.observation)?;
                    write_atomic(&assets.join(&frame_name), board.as_bytes())?;
                    let class = if step.step_index == item.central_step {
                        " class=\"central\""
                    } else {
                        ""
                    };
                    let _ = writeln!(
                        html,
                        "<img src=\"assets/{frame_name}\"{class} alt=\"step {}\">",
                        step.step_index
                    );
                }
                html.push_str("</div>\n");
            }
            html.push_str("</div>\n");
        }
    }
    html.push_str("</body>\n</html>\n");

    let report_path = out_dir.join("report.html");
    write_atomic(&report_path, html.as_bytes())?;
    Ok(report_path)
}
