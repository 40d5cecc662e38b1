//! Automated preference judge.
//!
//! Mirrors the pairwise task given to study participants: from a summary
//! alone, rank each pair of reward components (or call them indifferent) and
//! score the ranking against the ordering induced by the agent's configured
//! weights. The primary signal is the chosen-action decomposed Q at each
//! central state; a no-decomposition variant reads only the reward events
//! visible in the summary windows, standing in for watching the videos.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summarizer::Summary;
use crate::types::{ComponentId, RewardVector};

/// Relative band within which two component scores count as indifferent.
pub const INDIFFERENCE_DELTA: f64 = 0.05;

/// Per-state normalization guard: states whose component magnitudes sum to
/// less than this are skipped.
const NEGLIGIBLE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgeSignal {
    /// Decomposed Q of the chosen action at each central state (the RD display).
    ChosenQ,
    /// Decomposed Q averaged over all legal actions (ablation variant).
    AllActionsQ,
    /// Per-component rewards observed across each item's context window
    /// (the no-RD analog: events visible in the summary, not Q-values).
    ObservedReward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    First,
    Second,
    Indifferent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub first: String,
    pub second: String,
    pub first_index: usize,
    pub second_index: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgeOutcome {
    pub signal: JudgeSignal,
    /// Mean normalized per-component score, index-aligned with components.
    pub scores: Vec<f64>,
    /// One verdict per unordered component pair (i < j).
    pub pairs: Vec<PairVerdict>,
}

fn normalized_contribution(vector: &RewardVector) -> Option<Vec<f64>> {
    let denom: f64 = vector.values().iter().map(|v| v.abs()).sum();
    if denom < NEGLIGIBLE {
        return None;
    }
    Some(vector.values().iter().map(|v| v / denom).collect())
}

fn score_components(
    summary: &Summary,
    num_components: usize,
    signal: JudgeSignal,
) -> Result<Vec<f64>> {
    if summary.items.is_empty() {
        return Err(Error::EmptySummary);
    }
    let mut acc = vec![0.0; num_components];
    let mut used = 0usize;
    for item in &summary.items {
        let raw: RewardVector = match signal {
            JudgeSignal::ChosenQ => {
                let central = &item.central;
                central
                    .q_values
                    .get(&central.chosen_action)
                    .cloned()
                    .ok_or(Error::MissingQValues {
                        episode_id: item.episode_id,
                        step: item.central_step,
                    })?
            }
            JudgeSignal::AllActionsQ => {
                let central = &item.central;
                if central.q_values.is_empty() {
                    return Err(Error::MissingQValues {
                        episode_id: item.episode_id,
                        step: item.central_step,
                    });
                }
                let mut mean = RewardVector::zeros(num_components);
                for vector in central.q_values.values() {
                    for c in 0..num_components {
                        mean[c] += vector[c];
                    }
                }
                let n = central.q_values.len() as f64;
                RewardVector::from_vec(mean.values().iter().map(|v| v / n).collect())
            }
            JudgeSignal::ObservedReward => {
                let steps: &[crate::types::TraceStep] = if item.window.is_empty() {
                    std::slice::from_ref(&item.central)
                } else {
                    &item.window
                };
                let mut total = RewardVector::zeros(num_components);
                for step in steps {
                    for c in 0..num_components {
                        total[c] += step.reward[c];
                    }
                }
                total
            }
        };
        if raw.len() != num_components {
            return Err(Error::MismatchedComponents {
                expected: num_components,
                found: raw.len(),
            });
        }
        if let Some(contribution) = normalized_contribution(&raw) {
            for c in 0..num_components {
                acc[c] += contribution[c];
            }
            used += 1;
        }
    }
    if used > 0 {
        for v in &mut acc {
            *v /= used as f64;
        }
    }
    Ok(acc)
}

/// Verdict between two scores: indifferent when they differ by less than
/// `INDIFFERENCE_DELTA` relative to the larger magnitude, otherwise the
/// higher score wins. Invariant under positive rescaling of all scores.
fn score_verdict(a: f64, b: f64) -> Verdict {
    let band = INDIFFERENCE_DELTA * a.abs().max(b.abs());
    if (a - b).abs() <= band {
        Verdict::Indifferent
    } else if a > b {
        Verdict::First
    } else {
        Verdict::Second
    }
}

/// Ground-truth verdict from configured weights (exact ties are indifferent).
pub fn weight_verdict(weight_a: f64, weight_b: f64) -> Verdict {
    if weight_a == weight_b {
        Verdict::Indifferent
    } else if weight_a > weight_b {
        Verdict::First
    } else {
        Verdict::Second
    }
}

/// max/min of the two weight magnitudes; infinite when exactly one is zero,
/// 1 when both are zero.
pub fn weight_ratio(weight_a: f64, weight_b: f64) -> f64 {
    let (lo, hi) = if weight_a.abs() <= weight_b.abs() {
        (weight_a.abs(), weight_b.abs())
    } else {
        (weight_b.abs(), weight_a.abs())
    };
    if hi == 0.0 {
        1.0
    } else if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Judges with the primary signal: chosen-action decomposed Q.
pub fn judge_preferences(summary: &Summary, components: &[ComponentId]) -> Result<JudgeOutcome> {
    judge_preferences_with(summary, components, JudgeSignal::ChosenQ)
}

pub fn judge_preferences_with(
    summary: &Summary,
    components: &[ComponentId],
    signal: JudgeSignal,
) -> Result<JudgeOutcome> {
    let scores = score_components(summary, components.len(), signal)?;
    let mut pairs = Vec::new();
    for i in 0..components.len() {
        for j in (i + 1)..components.len() {
            pairs.push(PairVerdict {
                first: components[i].name.clone(),
                second: components[j].name.clone(),
                first_index: i,
                second_index: j,
                verdict: score_verdict(scores[i], scores[j]),
            });
        }
    }
    Ok(JudgeOutcome {
        signal,
        scores,
        pairs,
    })
}

/// Fraction of pairs whose verdict matches the weight-induced ground truth.
pub fn correctness(outcome: &JudgeOutcome, weights: &RewardVector) -> f64 {
    let total = outcome.pairs.len();
    if total == 0 {
        return 1.0;
    }
    let hits = outcome
        .pairs
        .iter()
        .filter(|p| p.verdict == weight_verdict(weights[p.first_index], weights[p.second_index]))
        .count();
    hits as f64 / total as f64
}

/// Correctness restricted to pairs whose weight ratio is at least
/// `min_ratio`; `None` when no pair qualifies.
pub fn correctness_high_contrast(
    outcome: &JudgeOutcome,
    weights: &RewardVector,
    min_ratio: f64,
) -> Option<f64> {
    let qualifying: Vec<&PairVerdict> = outcome
        .pairs
        .iter()
        .filter(|p| weight_ratio(weights[p.first_index], weights[p.second_index]) >= min_ratio)
        .collect();
    if qualifying.is_empty() {
        return None;
    }
    let hits = qualifying
        .iter()
        .filter(|p| p.verdict == weight_verdict(weights[p.first_index], weights[p.second_index]))
        .count();
    Some(hits as f64 / qualifying.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::summarizer::{ImportanceMetric, SelectionMethod, SummaryItem, SummarySpec};
    use crate::types::{ActionId, Observation, TraceStep};
    use std::collections::BTreeMap;

    fn components(names: &[&str]) -> Vec<ComponentId> {
        names
            .iter()
            .enumerate()
            .map(|(i, n)| ComponentId::new(i, *n))
            .collect()
    }

    /// Summary with one central state per given chosen-action Q-vector.
    fn summary_with_chosen_q(vectors: &[Vec<f64>]) -> Summary {
        let items: Vec<SummaryItem> = vectors
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut q = BTreeMap::new();
                q.insert(ActionId(0), RewardVector::from_vec(v.clone()));
                q.insert(ActionId(1), RewardVector::zeros(v.len()));
                let central = TraceStep {
                    step_index: i,
                    observation: Observation::new(format!("s{i}"), vec![i as f64]),
                    legal_actions: vec![ActionId(0), ActionId(1)],
                    q_values: q,
                    chosen_action: ActionId(0),
                    reward: RewardVector::zeros(v.len()),
                    terminal: false,
                };
                SummaryItem {
                    episode_id: 0,
                    central_step: i,
                    importance: 1.0,
                    window_start: i,
                    window_end: i,
                    window: vec![central.clone()],
                    central,
                }
            })
            .collect();
        Summary {
            agent_id: "judged".into(),
            spec: SummarySpec {
                k: items.len().max(1),
                context_window: 0,
                interval: 0,
                metric: ImportanceMetric::MaxMinusMin,
                div_threshold: None,
                selection: SelectionMethod::Highlights,
                seed: 0,
            },
            items,
        }
    }

    #[test]
    fn good_citizen_ordering_recovered() {
        // Mean chosen-action contributions (CL 2.0, SU 0.5, RML 6.0) must
        // yield RML > CL, RML > SU, CL > SU, matching weights (3, 1, 8).
        let summary = summary_with_chosen_q(&[vec![2.0, 0.5, 6.0]]);
        let comps = components(&["CL", "SU", "RML"]);
        let outcome = judge_preferences(&summary, &comps).unwrap();
        let verdict = |a: &str, b: &str| {
            outcome
                .pairs
                .iter()
                .find(|p| p.first == a && p.second == b)
                .unwrap()
                .verdict
        };
        assert_eq!(verdict("CL", "SU"), Verdict::First);
        assert_eq!(verdict("CL", "RML"), Verdict::Second);
        assert_eq!(verdict("SU", "RML"), Verdict::Second);
        let weights = RewardVector::from_vec(vec![3.0, 1.0, 8.0]);
        assert_eq!(correctness(&outcome, &weights), 1.0);
    }

    #[test]
    fn equal_scores_are_indifferent() {
        let summary = summary_with_chosen_q(&[vec![2.0, 2.0, 2.0]]);
        let comps = components(&["A", "B", "C"]);
        let outcome = judge_preferences(&summary, &comps).unwrap();
        assert!(outcome
            .pairs
            .iter()
            .all(|p| p.verdict == Verdict::Indifferent));
    }

    #[test]
    fn verdicts_invariant_under_positive_rescaling() {
        let base = vec![vec![2.0, 0.5, 6.0], vec![1.0, 0.25, 2.5]];
        let scaled: Vec<Vec<f64>> = base
            .iter()
            .map(|v| v.iter().map(|x| x * 37.5).collect())
            .collect();
        let comps = components(&["A", "B", "C"]);
        let a = judge_preferences(&summary_with_chosen_q(&base), &comps).unwrap();
        let b = judge_preferences(&summary_with_chosen_q(&scaled), &comps).unwrap();
        let verdicts = |o: &JudgeOutcome| o.pairs.iter().map(|p| p.verdict).collect::<Vec<_>>();
        assert_eq!(verdicts(&a), verdicts(&b));
    }

    #[test]
    fn near_zero_states_are_skipped() {
        let summary = summary_with_chosen_q(&[vec![1e-12, 1e-12], vec![3.0, 1.0]]);
        let comps = components(&["A", "B"]);
        let outcome = judge_preferences(&summary, &comps).unwrap();
        // Only the second state contributes; normalized (0.75, 0.25).
        assert!((outcome.scores[0] - 0.75).abs() < 1e-12);
        assert!((outcome.scores[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn empty_summary_is_an_error() {
        let summary = summary_with_chosen_q(&[]);
        let comps = components(&["A", "B"]);
        assert!(matches!(
            judge_preferences(&summary, &comps),
            Err(Error::EmptySummary)
        ));
    }

    #[test]
    fn weight_ground_truth() {
        assert_eq!(weight_verdict(8.0, 3.0), Verdict::First);
        assert_eq!(weight_verdict(0.0, 0.0), Verdict::Indifferent);
        assert_eq!(weight_verdict(1.0, 5.0), Verdict::Second);
        assert_eq!(weight_ratio(8.0, 3.0), 8.0 / 3.0);
        assert_eq!(weight_ratio(15.0, 0.0), f64::INFINITY);
        assert_eq!(weight_ratio(0.0, 0.0), 1.0);
    }

    #[test]
    fn high_contrast_filter() {
        // Weights (3, 1, 8): qualifying pairs at ratio >= 2 are (CL,SU) at 3,
        // (CL,RML) at 8/3, (SU,RML) at 8.
        let summary = summary_with_chosen_q(&[vec![0.5, 2.0, 6.0]]); // CL/SU inverted
        let comps = components(&["CL", "SU", "RML"]);
        let outcome = judge_preferences(&summary, &comps).unwrap();
        let weights = RewardVector::from_vec(vec![3.0, 1.0, 8.0]);
        let all = correctness(&outcome, &weights);
        let high = correctness_high_contrast(&outcome, &weights, 2.0).unwrap();
        assert!((all - 2.0 / 3.0).abs() < 1e-12);
        assert!((high - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(correctness_high_contrast(&outcome, &weights, 100.0), None);
    }

    #[test]
    fn observed_reward_signal_reads_window_events() {
        let mut summary = summary_with_chosen_q(&[vec![0.0, 0.0]]);
        // Two window steps with rewards favoring component 1.
        let mut step = summary.items[0].central.clone();
        step.reward = RewardVector::from_vec(vec![1.0, 3.0]);
        summary.items[0].window = vec![step.clone(), step];
        let comps = components(&["A", "B"]);
        let outcome =
            judge_preferences_with(&summary, &comps, JudgeSignal::ObservedReward).unwrap();
        assert_eq!(outcome.pairs[0].verdict, Verdict::Second);
        assert!((outcome.scores[1] - 0.75).abs() < 1e-12);
    }
}
