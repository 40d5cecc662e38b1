//! Property tests over the core data model and the summarizer.

use std::collections::BTreeMap;
use std::path::Path;

use proptest::prelude::*;

use rdx_core::summarizer::{
    highlights, highlights_div, ImportanceMetric, SelectionMethod, SummarySpec,
};
use rdx_core::trace_io::{parse_traces, serialize_trace};
use rdx_core::types::{
    feature_distance, greedy_action, q_sum, ActionId, Observation, RewardVector, Trace, TraceStep,
};

fn finite_q() -> impl Strategy<Value = f64> {
    (-1000i64..1000).prop_map(|v| v as f64 / 8.0)
}

/// Structurally valid traces: q_values cover exactly the legal actions, the
/// chosen action is legal, terminal only on the last step, total consistent.
fn arb_trace() -> impl Strategy<Value = Trace> {
    (1usize..5, 1usize..4).prop_flat_map(|(num_actions, num_components)| {
        let step = (
            proptest::collection::vec(finite_q(), num_actions * num_components),
            0..num_actions,
            proptest::collection::vec(finite_q(), num_components),
            proptest::collection::vec(finite_q(), 3),
        );
        proptest::collection::vec(step, 1..12).prop_map(move |steps| {
            let mut total = 0.0;
            let n = steps.len();
            let steps: Vec<TraceStep> = steps
                .into_iter()
                .enumerate()
                .map(|(i, (qs, chosen, reward, features))| {
                    let q_values: BTreeMap<ActionId, RewardVector> = (0..num_actions)
                        .map(|a| {
                            let slice = &qs[a * num_components..(a + 1) * num_components];
                            (ActionId(a), RewardVector::from_vec(slice.to_vec()))
                        })
                        .collect();
                    let reward = RewardVector::from_vec(reward);
                    total += reward.sum();
                    TraceStep {
                        step_index: i,
                        observation: Observation::new(format!("s{i}"), features),
                        legal_actions: (0..num_actions).map(ActionId).collect(),
                        q_values,
                        chosen_action: ActionId(chosen),
                        reward,
                        terminal: i + 1 == n,
                    }
                })
                .collect();
            Trace {
                episode_id: 0,
                agent_id: "prop".into(),
                steps,
                total_reward: total,
            }
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_round_trip_is_identity(trace in arb_trace()) {
        let components: Vec<String> = (0..trace.steps[0].reward.len())
            .map(|c| format!("c{c}"))
            .collect();
        let text = serialize_trace(&trace, &components);
        let parsed = parse_traces(&text, Path::new("prop")).unwrap();
        prop_assert_eq!(parsed, vec![trace]);
    }

    #[test]
    fn q_sum_invariant_under_component_permutation(
        values in proptest::collection::vec(proptest::collection::vec(finite_q(), 3), 1..5)
    ) {
        let q: BTreeMap<ActionId, RewardVector> = values
            .iter()
            .enumerate()
            .map(|(a, v)| (ActionId(a), RewardVector::from_vec(v.clone())))
            .collect();
        let permuted: BTreeMap<ActionId, RewardVector> = values
            .iter()
            .enumerate()
            .map(|(a, v)| {
                (ActionId(a), RewardVector::from_vec(vec![v[2], v[0], v[1]]))
            })
            .collect();
        let a = q_sum(&q).unwrap();
        let b = q_sum(&permuted).unwrap();
        for (k, v) in &a {
            prop_assert!((v - b[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn greedy_is_lowest_index_of_argmax_set(
        values in proptest::collection::vec(proptest::collection::vec(finite_q(), 2), 1..6)
    ) {
        let q: BTreeMap<ActionId, RewardVector> = values
            .iter()
            .enumerate()
            .map(|(a, v)| (ActionId(a), RewardVector::from_vec(v.clone())))
            .collect();
        let sums = q_sum(&q).unwrap();
        let max = sums.values().cloned().fold(f64::NEG_INFINITY, f64::max);
        let expected = sums
            .iter()
            .filter(|(_, &s)| s == max)
            .map(|(&a, _)| a)
            .min()
            .unwrap();
        prop_assert_eq!(greedy_action(&q).unwrap(), expected);
    }

    #[test]
    fn highlights_respects_interval_separation(
        trace in arb_trace(),
        k in 1usize..6,
        interval in 0usize..5,
    ) {
        let spec = SummarySpec {
            k,
            context_window: 2,
            interval,
            metric: ImportanceMetric::MaxMinusMin,
            div_threshold: None,
            selection: SelectionMethod::Highlights,
            seed: 0,
        };
        let summary = highlights(&[trace], &spec).unwrap();
        prop_assert!(summary.items.len() <= k);
        for a in &summary.items {
            for b in &summary.items {
                if a.central_step != b.central_step {
                    prop_assert!(a.central_step.abs_diff(b.central_step) >= interval);
                }
            }
        }
    }

    #[test]
    fn highlights_div_respects_feature_separation(
        trace in arb_trace(),
        threshold in 0.0f64..4.0,
    ) {
        let spec = SummarySpec {
            k: 4,
            context_window: 1,
            interval: 0,
            metric: ImportanceMetric::MaxMinusSecond,
            div_threshold: Some(threshold),
            selection: SelectionMethod::HighlightsDiv,
            seed: 0,
        };
        let summary = highlights_div(&[trace], &spec).unwrap();
        for (i, a) in summary.items.iter().enumerate() {
            for b in summary.items.iter().skip(i + 1) {
                let d = feature_distance(
                    &a.central.observation.features,
                    &b.central.observation.features,
                );
                prop_assert!(d >= threshold, "distance {d} below threshold {threshold}");
            }
        }
    }
}
