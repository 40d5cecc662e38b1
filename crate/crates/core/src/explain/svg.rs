//! Hand-rolled SVG bar charts: one group of per-component bars per action.
//!
//! Output is deterministic text. Coordinates are formatted to two decimals;
//! the Q-value inside each bar's tooltip uses the full round-trip
//! representation so displayed values match the trace verbatim.

use std::collections::BTreeSet;

use crate::explain::DecompositionBars;
use crate::types::ActionId;

/// Fixed palette: component index -> fill color, stable across a run.
pub const DEFAULT_PALETTE: [&str; 8] = [
    "#4878d0", "#ee854a", "#6acc64", "#d65f5f", "#956cb4", "#8c613c", "#dc7ec0", "#797979",
];

#[derive(Debug, Clone)]
pub struct RenderStyle {
    pub width: f64,
    pub height: f64,
    pub palette: Vec<String>,
    /// Labels indexed by action id; missing entries fall back to "a<i>".
    pub action_names: Vec<String>,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            width: 560.0,
            height: 360.0,
            palette: DEFAULT_PALETTE.iter().map(|s| s.to_string()).collect(),
            action_names: Vec::new(),
        }
    }
}

impl RenderStyle {
    pub fn with_action_names<S: AsRef<str>>(mut self, names: &[S]) -> Self {
        self.action_names = names.iter().map(|s| s.as_ref().to_string()).collect();
        self
    }

    fn action_label(&self, a: ActionId) -> String {
        self.action_names
            .get(a.0)
            .cloned()
            .unwrap_or_else(|| format!("a{}", a.0))
    }

    fn color(&self, component_index: usize) -> &str {
        &self.palette[component_index % self.palette.len()]
    }
}

fn esc(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Renders grouped per-action bars. The y-axis spans [min(0, min q),
/// max(0, max q)]; negative values hang below the zero line.
pub fn render_bars_svg(bars: &DecompositionBars, style: &RenderStyle) -> String {
    let margin_left = 58.0;
    let margin_right = 16.0;
    let margin_top = 46.0;
    let margin_bottom = 54.0;
    let plot_w = style.width - margin_left - margin_right;
    let plot_h = style.height - margin_top - margin_bottom;
    let plot_bottom = margin_top + plot_h;

    let q_min = bars.bars.iter().map(|b| b.q).fold(0.0_f64, f64::min);
    let q_max = bars.bars.iter().map(|b| b.q).fold(0.0_f64, f64::max);
    let span = q_max - q_min;
    // Degenerate all-zero case: everything maps to the zero line.
    let y_of = |q: f64| -> f64 {
        if span <= 0.0 {
            plot_bottom
        } else {
            plot_bottom - (q - q_min) / span * plot_h
        }
    };
    let zero_y = y_of(0.0);

    let actions: Vec<ActionId> = bars
        .bars
        .iter()
        .map(|b| b.action)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let components: Vec<_> = {
        let mut seen = BTreeSet::new();
        bars.bars
            .iter()
            .filter(|b| seen.insert(b.component.index))
            .map(|b| b.component.clone())
            .collect()
    };
    let group_w = plot_w / actions.len().max(1) as f64;
    let bar_w = group_w * 0.8 / components.len().max(1) as f64;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.2}\" height=\"{h:.2}\" viewBox=\"0 0 {w:.2} {h:.2}\">\n",
        w = style.width,
        h = style.height
    ));
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#ffffff\"/>\n",
        style.width, style.height
    ));

    // Legend: one swatch per component.
    svg.push_str("  <g id=\"legend\" font-family=\"monospace\" font-size=\"12\">\n");
    let mut lx = margin_left;
    for component in &components {
        svg.push_str(&format!(
            "    <rect x=\"{lx:.2}\" y=\"14\" width=\"12\" height=\"12\" fill=\"{}\"/>\n",
            style.color(component.index)
        ));
        svg.push_str(&format!(
            "    <text x=\"{:.2}\" y=\"24\">{}</text>\n",
            lx + 16.0,
            esc(&component.name)
        ));
        lx += 26.0 + 9.0 * component.name.len() as f64;
    }
    svg.push_str("  </g>\n");

    // Y axis with min / zero / max ticks.
    svg.push_str("  <g id=\"axes\" font-family=\"monospace\" font-size=\"11\" fill=\"#333333\">\n");
    svg.push_str(&format!(
        "    <line x1=\"{x:.2}\" y1=\"{top:.2}\" x2=\"{x:.2}\" y2=\"{bot:.2}\" stroke=\"#333333\"/>\n",
        x = margin_left,
        top = margin_top,
        bot = plot_bottom
    ));
    let mut ticks = vec![q_min, 0.0, q_max];
    ticks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    for t in ticks {
        let y = y_of(t);
        svg.push_str(&format!(
            "    <line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#333333\"/>\n",
            margin_left - 4.0,
            margin_left
        ));
        svg.push_str(&format!(
            "    <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{t:.2}</text>\n",
            margin_left - 7.0,
            y + 4.0
        ));
    }
    // Zero line across the plot.
    svg.push_str(&format!(
        "    <line x1=\"{:.2}\" y1=\"{zero_y:.2}\" x2=\"{:.2}\" y2=\"{zero_y:.2}\" stroke=\"#888888\"/>\n",
        margin_left,
        margin_left + plot_w
    ));
    svg.push_str("  </g>\n");

    // Bars, grouped by action along the x axis.
    svg.push_str("  <g id=\"bars\">\n");
    for bar in &bars.bars {
        let group_idx = actions
            .iter()
            .position(|&a| a == bar.action)
            .expect("action present");
        let comp_idx = components
            .iter()
            .position(|c| c.index == bar.component.index)
            .expect("component present");
        let x = margin_left + group_idx as f64 * group_w + group_w * 0.1 + comp_idx as f64 * bar_w;
        let y_val = y_of(bar.q);
        let (y, h) = if bar.q >= 0.0 {
            (y_val, zero_y - y_val)
        } else {
            (zero_y, y_val - zero_y)
        };
        svg.push_str(&format!(
            "    <rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{bar_w:.2}\" height=\"{h:.2}\" fill=\"{fill}\"><title>{action} / {component}: {q}</title></rect>\n",
            fill = style.color(bar.component.index),
            action = esc(&style.action_label(bar.action)),
            component = esc(&bar.component.name),
            q = bar.q
        ));
    }
    svg.push_str("  </g>\n");

    // Action labels under the groups.
    svg.push_str(
        "  <g id=\"xlabels\" font-family=\"monospace\" font-size=\"12\" fill=\"#333333\">\n",
    );
    for (i, &action) in actions.iter().enumerate() {
        let cx = margin_left + (i as f64 + 0.5) * group_w;
        svg.push_str(&format!(
            "    <text x=\"{cx:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
            plot_bottom + 18.0,
            esc(&style.action_label(action))
        ));
    }
    svg.push_str("  </g>\n</svg>\n");
    svg
}
