//! Local reward-decomposition explanations and static report rendering.
//!
//! Bar values are read verbatim from the Q-values recorded in traces; nothing
//! is recomputed or normalized. Rendering is a pure function of its inputs,
//! so identical inputs produce byte-identical SVG and HTML artifacts.

mod board;
mod report;
mod svg;

pub use board::BoardView;
pub use report::{render_report, ReportMode};
pub use svg::{render_bars_svg, RenderStyle};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summarizer::SummaryItem;
use crate::types::{ActionId, ComponentId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarMode {
    /// One bar group per legal action (the Highway display).
    AllActions,
    /// Bars only for the chosen action (the Pacman display).
    ChosenActionOnly,
}

/// One bar: the Q-value of one component under one action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub action: ActionId,
    pub component: ComponentId,
    pub q: f64,
}

/// Per-state decomposition bars for a summary state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionBars {
    pub episode_id: u64,
    pub step: usize,
    pub mode: BarMode,
    pub bars: Vec<Bar>,
}

/// Reads decomposition bars straight from a summary item's recorded
/// Q-values.
pub fn decompose(
    item: &SummaryItem,
    mode: BarMode,
    components: &[ComponentId],
) -> Result<DecompositionBars> {
    let central = &item.central;
    if central.q_values.is_empty() {
        return Err(Error::MissingQValues {
            episode_id: item.episode_id,
            step: item.central_step,
        });
    }
    let actions: Vec<ActionId> = match mode {
        BarMode::AllActions => central.q_values.keys().copied().collect(),
        BarMode::ChosenActionOnly => vec![central.chosen_action],
    };
    let mut bars = Vec::with_capacity(actions.len() * components.len());
    for action in actions {
        let vector = central.q_values.get(&action).ok_or(Error::MissingQValues {
            episode_id: item.episode_id,
            step: item.central_step,
        })?;
        for component in components {
            bars.push(Bar {
                action,
                component: component.clone(),
                q: vector[component.index],
            });
        }
    }
    Ok(DecompositionBars {
        episode_id: item.episode_id,
        step: item.central_step,
        mode,
        bars,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Observation, RewardVector, TraceStep};
    use std::collections::BTreeMap;

    fn components(n: usize) -> Vec<ComponentId> {
        (0..n)
            .map(|i| ComponentId::new(i, format!("C{i}")))
            .collect()
    }

    fn item_with_actions(num_actions: usize, num_components: usize) -> SummaryItem {
        let q: BTreeMap<ActionId, RewardVector> = (0..num_actions)
            .map(|a| {
                let v: Vec<f64> = (0..num_components).map(|c| (a * 10 + c) as f64).collect();
                (ActionId(a), RewardVector::from_vec(v))
            })
            .collect();
        let central = TraceStep {
            step_index: 4,
            observation: Observation::new("s", vec![0.0]),
            legal_actions: (0..num_actions).map(ActionId).collect(),
            q_values: q,
            chosen_action: ActionId(1),
            reward: RewardVector::zeros(num_components),
            terminal: false,
        };
        SummaryItem {
            episode_id: 2,
            central_step: 4,
            importance: 1.0,
            window_start: 4,
            window_end: 4,
            window: vec![central.clone()],
            central,
        }
    }

    #[test]
    fn all_actions_covers_every_pair() {
        let item = item_with_actions(5, 3);
        let bars = decompose(&item, BarMode::AllActions, &components(3)).unwrap();
        assert_eq!(bars.bars.len(), 15);
    }

    #[test]
    fn chosen_action_covers_components_only() {
        let item = item_with_actions(5, 4);
        let bars = decompose(&item, BarMode::ChosenActionOnly, &components(4)).unwrap();
        assert_eq!(bars.bars.len(), 4);
        assert!(bars.bars.iter().all(|b| b.action == ActionId(1)));
    }

    #[test]
    fn bar_values_are_verbatim() {
        let item = item_with_actions(3, 2);
        let bars = decompose(&item, BarMode::AllActions, &components(2)).unwrap();
        for bar in &bars.bars {
            let recorded = &item.central.q_values[&bar.action];
            assert_eq!(bar.q, recorded[bar.component.index]);
        }
    }

    #[test]
    fn missing_q_values_name_the_step() {
        let mut item = item_with_actions(2, 2);
        item.central.q_values.clear();
        let err = decompose(&item, BarMode::AllActions, &components(2)).unwrap_err();
        assert!(matches!(
            err,
            Error::MissingQValues {
                episode_id: 2,
                step: 4
            }
        ));
    }
}
