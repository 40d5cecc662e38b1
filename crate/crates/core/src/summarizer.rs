//! State importance and k-trajectory summaries.
//!
//! HIGHLIGHTS ranks every recorded step by importance (the gap between the
//! best and worst, or best and second-best, summed Q-values) and greedily
//! selects the top states subject to a minimum step interval within an
//! episode. HIGHLIGHTS-DIV additionally rejects candidates whose feature
//! vector is too close to an already-selected state. Frequency sampling
//! draws states uniformly without replacement as a baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::types::{feature_distance, q_sum, Trace, TraceStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceMetric {
    /// Gap between the best and worst action: max_a Q - min_a Q.
    MaxMinusMin,
    /// Gap between the best and second-best action; 0 for single-action states.
    MaxMinusSecond,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    Highlights,
    HighlightsDiv,
    Frequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarySpec {
    /// Number of trajectories in the summary.
    pub k: usize,
    /// States shown before and after the central state.
    pub context_window: usize,
    /// Minimum step distance between selected states of the same episode;
    /// |i - j| < interval blocks a candidate, |i - j| = interval admits it.
    pub interval: usize,
    pub metric: ImportanceMetric,
    pub div_threshold: Option<f64>,
    pub selection: SelectionMethod,
    pub seed: u64,
}

impl SummarySpec {
    pub fn highlights(k: usize, metric: ImportanceMetric) -> Self {
        Self {
            k,
            context_window: 10,
            interval: 10,
            metric,
            div_threshold: None,
            selection: SelectionMethod::Highlights,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("summary size k must be at least 1".into()));
        }
        match (self.selection, self.div_threshold) {
            (SelectionMethod::HighlightsDiv, None) => Err(Error::Config(
                "div_threshold is required for highlights_div".into(),
            )),
            (SelectionMethod::Highlights | SelectionMethod::Frequency, Some(_)) => Err(
                Error::Config("div_threshold is only valid for highlights_div".into()),
            ),
            _ => Ok(()),
        }
    }
}

/// One selected trajectory: a central state plus its context window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryItem {
    pub episode_id: u64,
    pub central_step: usize,
    pub importance: f64,
    /// First and last step index of the context window (inclusive),
    /// truncated at episode boundaries.
    pub window_start: usize,
    pub window_end: usize,
    pub central: TraceStep,
    /// Window steps, reconstructed from traces; not part of the persisted
    /// document.
    #[serde(skip)]
    pub window: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub agent_id: String,
    pub spec: SummarySpec,
    pub items: Vec<SummaryItem>,
}

impl Summary {
    /// Serializes to the persistence document (window contents elided,
    /// bounds and central state embedded).
    pub fn to_document(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("summary serializes");
        text.push('\n');
        text
    }

    pub fn from_document(text: &str, origin: &std::path::Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    /// Re-attaches window steps from the originating traces.
    pub fn hydrate(&mut self, traces: &[Trace]) -> Result<()> {
        for item in &mut self.items {
            let trace = traces
                .iter()
                .find(|t| t.episode_id == item.episode_id)
                .ok_or_else(|| {
                    Error::InvalidTrace(format!(
                        "summary references missing episode {}",
                        item.episode_id
                    ))
                })?;
            if item.window_end >= trace.steps.len() {
                return Err(Error::InvalidTrace(format!(
                    "summary window [{}, {}] exceeds episode {} length {}",
                    item.window_start,
                    item.window_end,
                    item.episode_id,
                    trace.steps.len()
                )));
            }
            item.window = trace.steps[item.window_start..=item.window_end].to_vec();
        }
        Ok(())
    }
}

/// State importance: the gap over summed Q-values of the legal actions.
pub fn importance(step: &TraceStep, metric: ImportanceMetric) -> f64 {
    let sums = match q_sum(&step.q_values) {
        Ok(s) => s,
        Err(_) => return 0.0,
    };
    let mut values: Vec<f64> = sums.values().copied().collect();
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| b.total_cmp(a));
    match metric {
        ImportanceMetric::MaxMinusMin => values[0] - values[values.len() - 1],
        ImportanceMetric::MaxMinusSecond => {
            if values.len() < 2 {
                0.0
            } else {
                values[0] - values[1]
            }
        }
    }
}

/// A step addressed by (episode, step), with its importance.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    trace_idx: usize,
    episode_id: u64,
    step: usize,
    importance: f64,
}

fn sorted_candidates(traces: &[Trace], metric: ImportanceMetric) -> Vec<Candidate> {
    let mut order: Vec<usize> = (0..traces.len()).collect();
    order.sort_by_key(|&i| traces[i].episode_id);
    let mut candidates = Vec::new();
    for &trace_idx in &order {
        let trace = &traces[trace_idx];
        for step in &trace.steps {
            candidates.push(Candidate {
                trace_idx,
                episode_id: trace.episode_id,
                step: step.step_index,
                importance: importance(step, metric),
            });
        }
    }
    // Descending importance; ties by earlier episode, then earlier step.
    candidates.sort_by(|a, b| {
        b.importance
            .total_cmp(&a.importance)
            .then(a.episode_id.cmp(&b.episode_id))
            .then(a.step.cmp(&b.step))
    });
    candidates
}

fn build_item(traces: &[Trace], cand: &Candidate, spec: &SummarySpec) -> SummaryItem {
    let trace = &traces[cand.trace_idx];
    let window_start = cand.step.saturating_sub(spec.context_window);
    let window_end = (cand.step + spec.context_window).min(trace.steps.len() - 1);
    SummaryItem {
        episode_id: cand.episode_id,
        central_step: cand.step,
        importance: cand.importance,
        window_start,
        window_end,
        central: trace.steps[cand.step].clone(),
        window: trace.steps[window_start..=window_end].to_vec(),
    }
}

fn greedy_select(traces: &[Trace], spec: &SummarySpec, diversity: Option<f64>) -> Result<Summary> {
    spec.validate()?;
    if traces.is_empty() {
        return Err(Error::EmptyTraces);
    }
    let candidates = sorted_candidates(traces, spec.metric);
    let mut selected: Vec<Candidate> = Vec::new();
    for cand in &candidates {
        if selected.len() == spec.k {
            break;
        }
        let interval_ok = selected.iter().all(|s| {
            s.episode_id != cand.episode_id || s.step.abs_diff(cand.step) >= spec.interval
        });
        if !interval_ok {
            continue;
        }
        if let Some(threshold) = diversity {
            let features = &traces[cand.trace_idx].steps[cand.step].observation.features;
            let diverse = selected.iter().all(|s| {
                let chosen = &traces[s.trace_idx].steps[s.step].observation.features;
                feature_distance(features, chosen) >= threshold
            });
            if !diverse {
                continue;
            }
        }
        selected.push(*cand);
    }
    let items = selected
        .iter()
        .map(|c| build_item(traces, c, spec))
        .collect();
    Ok(Summary {
        agent_id: traces[0].agent_id.clone(),
        spec: spec.clone(),
        items,
    })
}

/// HIGHLIGHTS: greedy top-k by importance under the interval constraint,
/// items in descending importance order.
pub fn highlights(traces: &[Trace], spec: &SummarySpec) -> Result<Summary> {
    if spec.selection != SelectionMethod::Highlights {
        return Err(Error::Config("spec.selection must be highlights".into()));
    }
    greedy_select(traces, spec, None)
}

/// HIGHLIGHTS-DIV: as `highlights`, plus a minimum Euclidean feature distance
/// between any two selected central states.
pub fn highlights_div(traces: &[Trace], spec: &SummarySpec) -> Result<Summary> {
    if spec.selection != SelectionMethod::HighlightsDiv {
        return Err(Error::Config(
            "spec.selection must be highlights_div".into(),
        ));
    }
    let threshold = spec
        .div_threshold
        .ok_or_else(|| Error::Config("div_threshold is required for highlights_div".into()))?;
    greedy_select(traces, spec, Some(threshold))
}

/// Frequency sampling: k distinct steps drawn uniformly without replacement
/// from all steps, ordered by (episode, step).
pub fn frequency_sample(traces: &[Trace], spec: &SummarySpec) -> Result<Summary> {
    spec.validate()?;
    if spec.selection != SelectionMethod::Frequency {
        return Err(Error::Config("spec.selection must be frequency".into()));
    }
    if traces.is_empty() {
        return Err(Error::EmptyTraces);
    }
    // Global step index ordered by (episode_id, step) so the draw does not
    // depend on trace load order.
    let mut order: Vec<usize> = (0..traces.len()).collect();
    order.sort_by_key(|&i| traces[i].episode_id);
    let mut all: Vec<Candidate> = Vec::new();
    for &trace_idx in &order {
        let trace = &traces[trace_idx];
        for step in &trace.steps {
            all.push(Candidate {
                trace_idx,
                episode_id: trace.episode_id,
                step: step.step_index,
                importance: importance(step, spec.metric),
            });
        }
    }
    if all.len() < spec.k {
        return Err(Error::NotEnoughSteps {
            requested: spec.k,
            available: all.len(),
        });
    }
    let mut rng = stream_rng(spec.seed, "summary.frequency", 0);
    let mut picks = rand::seq::index::sample(&mut rng, all.len(), spec.k).into_vec();
    picks.sort_unstable();
    let items = picks
        .into_iter()
        .map(|i| build_item(traces, &all[i], spec))
        .collect();
    Ok(Summary {
        agent_id: traces[0].agent_id.clone(),
        spec: spec.clone(),
        items,
    })
}

/// Dispatches on `spec.selection`.
pub fn summarize(traces: &[Trace], spec: &SummarySpec) -> Result<Summary> {
    match spec.selection {
        SelectionMethod::Highlights => highlights(traces, spec),
        SelectionMethod::HighlightsDiv => highlights_div(traces, spec),
        SelectionMethod::Frequency => frequency_sample(traces, spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{ActionId, Observation, RewardVector};
    use std::collections::BTreeMap;

    /// Builds a single-episode trace whose step importances under
    /// MAX_MINUS_MIN equal `importances` (two actions, Q = (imp, 0) vs 0).
    pub(crate) fn trace_with_importances(episode_id: u64, importances: &[f64]) -> Trace {
        let steps: Vec<TraceStep> = importances
            .iter()
            .enumerate()
            .map(|(i, &imp)| {
                let mut q = BTreeMap::new();
                q.insert(ActionId(0), RewardVector::from_vec(vec![imp, 0.0]));
                q.insert(ActionId(1), RewardVector::from_vec(vec![0.0, 0.0]));
                TraceStep {
                    step_index: i,
                    observation: Observation::new(
                        format!("e{episode_id}s{i}"),
                        vec![episode_id as f64, i as f64],
                    ),
                    legal_actions: vec![ActionId(0), ActionId(1)],
                    q_values: q,
                    chosen_action: ActionId(0),
                    reward: RewardVector::zeros(2),
                    terminal: i + 1 == importances.len(),
                }
            })
            .collect();
        Trace {
            episode_id,
            agent_id: "synthetic".into(),
            steps,
            total_reward: 0.0,
        }
    }

    fn step_with_sums(sums: &[f64]) -> TraceStep {
        let q: BTreeMap<ActionId, RewardVector> = sums
            .iter()
            .enumerate()
            .map(|(a, &s)| (ActionId(a), RewardVector::from_vec(vec![s])))
            .collect();
        TraceStep {
            step_index: 0,
            observation: Observation::new("s", vec![0.0]),
            legal_actions: (0..sums.len()).map(ActionId).collect(),
            q_values: q,
            chosen_action: ActionId(0),
            reward: RewardVector::zeros(1),
            terminal: false,
        }
    }

    #[test]
    fn importance_uniform_q_is_zero() {
        let step = step_with_sums(&[5.0, 5.0, 5.0, 5.0]);
        assert_eq!(importance(&step, ImportanceMetric::MaxMinusMin), 0.0);
        assert_eq!(importance(&step, ImportanceMetric::MaxMinusSecond), 0.0);
    }

    #[test]
    fn importance_gaps() {
        let step = step_with_sums(&[2.0, 5.0, 1.0, 3.0]);
        assert_eq!(importance(&step, ImportanceMetric::MaxMinusMin), 4.0);
        assert_eq!(importance(&step, ImportanceMetric::MaxMinusSecond), 2.0);
    }

    #[test]
    fn importance_single_action_second_metric_is_zero() {
        let step = step_with_sums(&[7.0]);
        assert_eq!(importance(&step, ImportanceMetric::MaxMinusSecond), 0.0);
        assert_eq!(importance(&step, ImportanceMetric::MaxMinusMin), 0.0);
    }

    #[test]
    fn worked_example_selects_steps_one_and_three() {
        // Importances [1, 9, 2, 8, 3, 7], k = 2, interval = 2: step 1 first,
        // then step 3 (distance 2 is not < 2, so admissible).
        let trace = trace_with_importances(0, &[1.0, 9.0, 2.0, 8.0, 3.0, 7.0]);
        let spec = SummarySpec {
            k: 2,
            context_window: 1,
            interval: 2,
            metric: ImportanceMetric::MaxMinusMin,
            div_threshold: None,
            selection: SelectionMethod::Highlights,
            seed: 0,
        };
        let summary = highlights(&[trace], &spec).unwrap();
        let picked: Vec<usize> = summary.items.iter().map(|i| i.central_step).collect();
        assert_eq!(picked, vec![1, 3]);
    }

    #[test]
    fn exhaustion_selects_everything_eligible() {
        let trace = trace_with_importances(0, &[3.0, 1.0, 2.0]);
        let spec = SummarySpec {
            k: 10,
            interval: 0,
            ..SummarySpec::highlights(10, ImportanceMetric::MaxMinusMin)
        };
        let summary = highlights(&[trace], &spec).unwrap();
        assert_eq!(summary.items.len(), 3);
    }

    #[test]
    fn zero_interval_is_plain_top_k() {
        let imps = [4.0, 9.0, 1.0, 7.0, 3.0, 8.0];
        let trace = trace_with_importances(0, &imps);
        let spec = SummarySpec {
            interval: 0,
            ..SummarySpec::highlights(3, ImportanceMetric::MaxMinusMin)
        };
        let summary = highlights(&[trace], &spec).unwrap();
        let picked: Vec<usize> = summary.items.iter().map(|i| i.central_step).collect();
        // Sort-based oracle: indices of the top-3 importances.
        assert_eq!(picked, vec![1, 5, 3]);
        let imp: Vec<f64> = summary.items.iter().map(|i| i.importance).collect();
        assert_eq!(imp, vec![9.0, 8.0, 7.0]);
    }

    #[test]
    fn items_sorted_by_descending_importance() {
        let traces = vec![
            trace_with_importances(0, &[1.0, 5.0, 2.0]),
            trace_with_importances(1, &[4.0, 0.5, 3.0]),
        ];
        let spec = SummarySpec {
            interval: 0,
            ..SummarySpec::highlights(4, ImportanceMetric::MaxMinusMin)
        };
        let summary = highlights(&traces, &spec).unwrap();
        let imps: Vec<f64> = summary.items.iter().map(|i| i.importance).collect();
        let mut sorted = imps.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        assert_eq!(imps, sorted);
    }

    #[test]
    fn empty_traces_error() {
        let spec = SummarySpec::highlights(2, ImportanceMetric::MaxMinusMin);
        assert!(matches!(highlights(&[], &spec), Err(Error::EmptyTraces)));
    }

    #[test]
    fn window_truncates_at_episode_edges() {
        let trace = trace_with_importances(0, &[9.0, 1.0, 1.0, 1.0, 8.0]);
        let spec = SummarySpec {
            context_window: 2,
            interval: 1,
            ..SummarySpec::highlights(2, ImportanceMetric::MaxMinusMin)
        };
        let summary = highlights(&[trace], &spec).unwrap();
        let first = &summary.items[0];
        assert_eq!((first.window_start, first.window_end), (0, 2));
        assert_eq!(first.window.len(), 3);
        let second = &summary.items[1];
        assert_eq!((second.window_start, second.window_end), (2, 4));
        assert_eq!(second.central.step_index, 4);
    }

    fn div_trace(features: Vec<Vec<f64>>, importances: Vec<f64>) -> Trace {
        let mut trace = trace_with_importances(0, &importances);
        for (step, f) in trace.steps.iter_mut().zip(features) {
            step.observation.features = f;
        }
        trace
    }

    #[test]
    fn div_rejects_identical_states() {
        let trace = div_trace(
            vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![9.0, 9.0]],
            vec![9.0, 8.0, 1.0],
        );
        let spec = SummarySpec {
            k: 2,
            context_window: 0,
            interval: 0,
            metric: ImportanceMetric::MaxMinusMin,
            div_threshold: Some(0.5),
            selection: SelectionMethod::HighlightsDiv,
            seed: 0,
        };
        let summary = highlights_div(&[trace], &spec).unwrap();
        let picked: Vec<usize> = summary.items.iter().map(|i| i.central_step).collect();
        assert_eq!(picked, vec![0, 2]);
    }

    #[test]
    fn div_threshold_zero_matches_plain_highlights() {
        let trace = trace_with_importances(0, &[1.0, 9.0, 2.0, 8.0, 3.0, 7.0]);
        let div_spec = SummarySpec {
            k: 3,
            context_window: 1,
            interval: 2,
            metric: ImportanceMetric::MaxMinusMin,
            div_threshold: Some(0.0),
            selection: SelectionMethod::HighlightsDiv,
            seed: 0,
        };
        let plain_spec = SummarySpec {
            div_threshold: None,
            selection: SelectionMethod::Highlights,
            ..div_spec.clone()
        };
        let div = highlights_div(std::slice::from_ref(&trace), &div_spec).unwrap();
        let plain = highlights(&[trace], &plain_spec).unwrap();
        assert_eq!(div.items, plain.items);
        assert_eq!(
            serde_json::to_string(&div.items).unwrap(),
            serde_json::to_string(&plain.items).unwrap()
        );
    }

    #[test]
    fn div_admits_distance_exactly_at_threshold() {
        // Features [0,0] and [3,4]: distance exactly 5 >= threshold 5.
        let trace = div_trace(vec![vec![0.0, 0.0], vec![3.0, 4.0]], vec![2.0, 1.0]);
        let spec = SummarySpec {
            k: 2,
            context_window: 0,
            interval: 0,
            metric: ImportanceMetric::MaxMinusMin,
            div_threshold: Some(5.0),
            selection: SelectionMethod::HighlightsDiv,
            seed: 0,
        };
        let summary = highlights_div(&[trace], &spec).unwrap();
        assert_eq!(summary.items.len(), 2);
    }

    fn freq_spec(k: usize, seed: u64) -> SummarySpec {
        SummarySpec {
            k,
            context_window: 1,
            interval: 0,
            metric: ImportanceMetric::MaxMinusMin,
            div_threshold: None,
            selection: SelectionMethod::Frequency,
            seed,
        }
    }

    #[test]
    fn frequency_exhaustive_when_k_equals_steps() {
        let trace = trace_with_importances(0, &[1.0, 2.0, 3.0]);
        let summary = frequency_sample(&[trace], &freq_spec(3, 0)).unwrap();
        let picked: Vec<usize> = summary.items.iter().map(|i| i.central_step).collect();
        assert_eq!(picked, vec![0, 1, 2]);
    }

    #[test]
    fn frequency_is_deterministic_per_seed() {
        let traces = vec![
            trace_with_importances(0, &[1.0; 20]),
            trace_with_importances(1, &[1.0; 20]),
        ];
        let a = frequency_sample(&traces, &freq_spec(5, 42)).unwrap();
        let b = frequency_sample(&traces, &freq_spec(5, 42)).unwrap();
        assert_eq!(a, b);
        let c = frequency_sample(&traces, &freq_spec(5, 43)).unwrap();
        assert_ne!(a.items, c.items);
    }

    #[test]
    fn frequency_requires_enough_steps() {
        let trace = trace_with_importances(0, &[1.0, 2.0]);
        assert!(matches!(
            frequency_sample(&[trace], &freq_spec(3, 0)),
            Err(Error::NotEnoughSteps {
                requested: 3,
                available: 2
            })
        ));
    }

    #[test]
    fn frequency_invariant_to_trace_order() {
        let a = trace_with_importances(3, &[1.0; 10]);
        let b = trace_with_importances(1, &[1.0; 10]);
        let fwd = frequency_sample(&[a.clone(), b.clone()], &freq_spec(4, 7)).unwrap();
        let rev = frequency_sample(&[b, a], &freq_spec(4, 7)).unwrap();
        assert_eq!(fwd.items, rev.items);
    }

    #[test]
    fn frequency_items_ordered_by_episode_then_step() {
        let traces = vec![
            trace_with_importances(2, &[1.0; 15]),
            trace_with_importances(0, &[1.0; 15]),
        ];
        let summary = frequency_sample(&traces, &freq_spec(6, 11)).unwrap();
        let keys: Vec<(u64, usize)> = summary
            .items
            .iter()
            .map(|i| (i.episode_id, i.central_step))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn monotonicity_with_no_constraints() {
        // With interval = 0 and no diversity rule the minimum selected
        // importance dominates everything left out.
        let imps = [4.0, 9.0, 1.0, 7.0, 3.0, 8.0, 2.0];
        let trace = trace_with_importances(0, &imps);
        let spec = SummarySpec {
            interval: 0,
            ..SummarySpec::highlights(3, ImportanceMetric::MaxMinusMin)
        };
        let summary = highlights(&[trace], &spec).unwrap();
        let chosen: Vec<usize> = summary.items.iter().map(|i| i.central_step).collect();
        let min_in = summary
            .items
            .iter()
            .map(|i| i.importance)
            .fold(f64::INFINITY, f64::min);
        let max_out = imps
            .iter()
            .enumerate()
            .filter(|(i, _)| !chosen.contains(i))
            .map(|(_, &v)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(min_in >= max_out);
    }

    #[test]
    fn document_round_trip_and_hydration() {
        let trace = trace_with_importances(0, &[1.0, 9.0, 2.0, 8.0]);
        let spec = SummarySpec {
            context_window: 1,
            interval: 1,
            ..SummarySpec::highlights(2, ImportanceMetric::MaxMinusMin)
        };
        let summary = highlights(std::slice::from_ref(&trace), &spec).unwrap();
        let doc = summary.to_document();
        let mut parsed = Summary::from_document(&doc, std::path::Path::new("mem")).unwrap();
        assert!(parsed.items.iter().all(|i| i.window.is_empty()));
        parsed.hydrate(&[trace]).unwrap();
        assert_eq!(parsed, summary);
    }
}
