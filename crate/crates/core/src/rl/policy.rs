//! Normal-tail stochastic policy over a conflict set.
//!
//! Each action a in cluster s gets a Normal(μ, σ) in [0, 1] value space.
//! The limit L is μ of the best action minus that action's σ; an action's
//! weight is its Normal mass to the right of L.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::StateActionTable;

pub const SIGMA_FLOOR: f64 = 1e-3;
pub const UNSEEN: ActionParams = ActionParams {
    mu: 1.0,
    sigma: 0.5,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionParams {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub cluster: usize,
    /// Only actions with at least one sample.
    pub actions: BTreeMap<String, ActionParams>,
}

impl PolicyParams {
    /// Parameters for `action`, or the optimistic default if unseen.
    pub fn get(&self, action: &str) -> ActionParams {
        self.actions.get(action).copied().unwrap_or(UNSEEN)
    }
}

/// μ by min-max over the cluster's Q̄, σ from the cluster-mean deviation
/// rescaled by the same range and floored at [`SIGMA_FLOOR`]. When all Q̄
/// coincide, μ = 0.5 and σ is rescaled by the spread of the cluster's
/// samples instead.
pub fn policy_params(table: &StateActionTable, cluster: usize) -> PolicyParams {
    let mut out = PolicyParams {
        cluster,
        actions: BTreeMap::new(),
    };
    let Some(stats) = table.cluster(cluster) else {
        return out;
    };
    let sampled: Vec<(&String, f64)> = stats
        .actions
        .iter()
        .filter(|(_, a)| a.n > 0)
        .map(|(k, a)| (k, a.q_mean))
        .collect();
    if sampled.is_empty() {
        return out;
    }
    let lo = sampled.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let hi = sampled
        .iter()
        .map(|s| s.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    let sigma_scale = if range > 0.0 {
        range
    } else {
        stats.return_range().map_or(0.0, |(a, b)| b - a)
    };
    for (action, q) in sampled {
        let mu = if range > 0.0 { (q - lo) / range } else { 0.5 };
        let raw = stats.deviation(action).unwrap_or(0.0);
        let sigma = if sigma_scale > 0.0 {
            raw / sigma_scale
        } else {
            0.0
        };
        out.actions.insert(
            action.clone(),
            ActionParams {
                mu,
                sigma: sigma.max(SIGMA_FLOOR),
            },
        );
    }
    out
}

/// P(X > x) for X ~ Normal(mu, sigma).
pub fn right_tail(x: f64, mu: f64, sigma: f64) -> f64 {
    0.5 * libm::erfc((x - mu) / (sigma * std::f64::consts::SQRT_2))
}

/// The limit L: μ of the highest-μ action (lowest index on ties) minus its σ.
pub fn limit(params: &[ActionParams]) -> f64 {
    let mut best = 0;
    for (i, p) in params.iter().enumerate() {
        if p.mu > params[best].mu {
            best = i;
        }
    }
    params[best].mu - params[best].sigma
}

/// Normalized right-tail masses past L.
pub fn action_probabilities(params: &[ActionParams]) -> Vec<f64> {
    if params.is_empty() {
        return Vec::new();
    }
    let l = limit(params);
    let w: Vec<f64> = params
        .iter()
        .map(|p| right_tail(l, p.mu, p.sigma))
        .collect();
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        w.iter().map(|x| x / total).collect()
    } else {
        vec![1.0 / params.len() as f64; params.len()]
    }
}

/// Draws an index from a probability vector.
pub fn sample_index(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let r = rng.gen::<f64>();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if r < acc {
            return i;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// ε-greedy over the Normal-tail distribution. Returns an index into
/// `actions`.
pub fn select_action(
    actions: &[String],
    params: &PolicyParams,
    epsilon: f64,
    rng: &mut ChaCha8Rng,
) -> usize {
    assert!(
        !actions.is_empty(),
        "select_action needs at least one action"
    );
    if rng.gen::<f64>() < epsilon {
        return rng.gen_range(0..actions.len());
    }
    let p: Vec<ActionParams> = actions.iter().map(|a| params.get(a)).collect();
    sample_index(&action_probabilities(&p), rng)
}
