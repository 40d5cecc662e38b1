//! Exact Q-iteration on explicit MDPs: the ground-truth fixed point that the
//! tabular learner is checked against.

use crate::error::{Error, Result};
use crate::harness::mdp::ExplicitMdp;
use crate::types::RewardVector;

const MAX_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct ValueIterationResult {
    /// Scalar Q*, indexed [state][action]. Terminal states read 0.
    pub q_scalar: Vec<Vec<f64>>,
    /// Per-component Q, iterated with the shared scalar-greedy action.
    pub q_components: Vec<Vec<RewardVector>>,
    pub iterations: usize,
}

impl ValueIterationResult {
    /// Greedy action of the scalar Q at a state, lowest index on ties.
    pub fn greedy(&self, state: usize) -> usize {
        let row = &self.q_scalar[state];
        let mut best = 0;
        for (a, &q) in row.iter().enumerate().skip(1) {
            if q > row[best] {
                best = a;
            }
        }
        best
    }
}

/// Solves scalar Q* by standard value iteration, then evaluates each reward
/// component under the scalar-greedy policy. The summed per-component tables
/// coincide with the scalar table at the fixed point.
pub fn value_iteration(mdp: &ExplicitMdp, gamma: f64, tol: f64) -> Result<ValueIterationResult> {
    mdp.validate()?;
    if tol <= 0.0 {
        return Err(Error::Config("tolerance must be positive".into()));
    }

    let zero_row = vec![0.0; mdp.num_actions];
    let mut q: Vec<Vec<f64>> = vec![zero_row.clone(); mdp.num_states];
    let mut iterations = 0;
    loop {
        iterations += 1;
        if iterations > MAX_ITERATIONS {
            return Err(Error::NonConvergence {
                iterations: MAX_ITERATIONS,
            });
        }
        let mut delta: f64 = 0.0;
        let mut next_q = vec![zero_row.clone(); mdp.num_states];
        for s in 0..mdp.num_states {
            if mdp.terminal[s] {
                continue;
            }
            for a in 0..mdp.num_actions {
                let mut value = 0.0;
                for (p, next, reward) in &mdp.transitions[s][a] {
                    let future = if mdp.terminal[*next] {
                        0.0
                    } else {
                        q[*next].iter().copied().fold(f64::NEG_INFINITY, f64::max)
                    };
                    value += p * (reward.sum() + gamma * future);
                }
                delta = delta.max((value - q[s][a]).abs());
                next_q[s][a] = value;
            }
        }
        q = next_q;
        if delta < tol {
            break;
        }
    }

    // Shared greedy action per state, fixed for the per-head evaluation.
    let greedy: Vec<usize> = (0..mdp.num_states)
        .map(|s| {
            let row = &q[s];
            let mut best = 0;
            for (a, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = a;
                }
            }
            best
        })
        .collect();

    let zero_comp = vec![RewardVector::zeros(mdp.num_components); mdp.num_actions];
    let mut qc: Vec<Vec<RewardVector>> = vec![zero_comp.clone(); mdp.num_states];
    let mut comp_iterations = 0;
    loop {
        comp_iterations += 1;
        if comp_iterations > MAX_ITERATIONS {
            return Err(Error::NonConvergence {
                iterations: MAX_ITERATIONS,
            });
        }
        let mut delta: f64 = 0.0;
        let mut next_qc = vec![zero_comp.clone(); mdp.num_states];
        for s in 0..mdp.num_states {
            if mdp.terminal[s] {
                continue;
            }
            for a in 0..mdp.num_actions {
                let mut value = RewardVector::zeros(mdp.num_components);
                for (p, next, reward) in &mdp.transitions[s][a] {
                    for c in 0..mdp.num_components {
                        let future = if mdp.terminal[*next] {
                            0.0
                        } else {
                            qc[*next][greedy[*next]][c]
                        };
                        value[c] += p * (reward[c] + gamma * future);
                    }
                }
                for c in 0..mdp.num_components {
                    delta = delta.max((value[c] - qc[s][a][c]).abs());
                }
                next_qc[s][a] = value;
            }
        }
        qc = next_qc;
        if delta < tol {
            break;
        }
    }

    Ok(ValueIterationResult {
        q_scalar: q,
        q_components: qc,
        iterations: iterations + comp_iterations,
    })
}
