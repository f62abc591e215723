use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    assign_cluster, policy_params, select_action, ClusterModel, FeatureVector, PolicyParams,
    StateActionTable,
};
use crate::inference::ConflictResolver;

/// Linear ε schedule from `start` at episode 0 to `end` at `episodes - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule {
            start: 0.1,
            end: 0.02,
        }
    }
}

impl EpsilonSchedule {
    pub fn at(&self, episode: usize, episodes: usize) -> f64 {
        if episodes <= 1 {
            return self.start;
        }
        let f = (episode.min(episodes - 1)) as f64 / (episodes - 1) as f64;
        self.start + (self.end - self.start) * f
    }
}

enum States {
    Clustered(ClusterModel),
    Single,
}

/// Frozen snapshot of the learned policy, shareable across parallel
/// episodes.
pub struct PolicyResolver {
    states: States,
    params: BTreeMap<usize, PolicyParams>,
    epsilon: f64,
}

impl PolicyResolver {
    pub fn new(model: &ClusterModel, table: &StateActionTable, epsilon: f64) -> Self {
        PolicyResolver {
            params: snapshot(table),
            states: States::Clustered(model.clone()),
            epsilon,
        }
    }

    /// Every turn is state 0. For environments without features.
    pub fn single_state(table: &StateActionTable, epsilon: f64) -> Self {
        PolicyResolver {
            params: snapshot(table),
            states: States::Single,
            epsilon,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn params(&self, cluster: usize) -> Option<&PolicyParams> {
        self.params.get(&cluster)
    }
}

fn snapshot(table: &StateActionTable) -> BTreeMap<usize, PolicyParams> {
    table
        .clusters
        .keys()
        .map(|&s| (s, policy_params(table, s)))
        .collect()
}

impl ConflictResolver for PolicyResolver {
    fn assign_state(&self, features: Option<&FeatureVector>) -> Option<usize> {
        match &self.states {
            States::Single => Some(0),
            States::Clustered(model) => {
                let f = features?;
                match assign_cluster(f, model) {
                    Ok(c) => Some(c),
                    Err(e) => {
                        tracing::warn!(error = %e, "feature vector does not fit the cluster model");
                        None
                    }
                }
            }
        }
    }

    fn select(&self, state: Option<usize>, actions: &[String], rng: &mut ChaCha8Rng) -> usize {
        let empty = PolicyParams::default();
        let params = state.and_then(|s| self.params.get(&s)).unwrap_or(&empty);
        select_action(actions, params, self.epsilon, rng)
    }
}
