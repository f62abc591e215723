use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EpisodeReturns;
use crate::inference::EpisodeRecord;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ActionStats {
    pub n: u64,
    pub q_mean: f64,
    /// Every G_s credited to this action, in arrival order.
    pub returns: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    /// Number of G_s samples across all actions.
    pub n: u64,
    /// Ḡ_s, the mean of those samples.
    pub mean_return: f64,
    pub actions: BTreeMap<String, ActionStats>,
}

impl ClusterStats {
    /// √(Σ (G_s − Ḡ_s)² / n_a) over the action's samples, against the
    /// cluster's current Ḡ_s.
    pub fn deviation(&self, action: &str) -> Option<f64> {
        let a = self.actions.get(action).filter(|a| a.n > 0)?;
        let ss: f64 = a
            .returns
            .iter()
            .map(|g| (g - self.mean_return).powi(2))
            .sum();
        Some((ss / a.n as f64).sqrt())
    }

    /// Smallest and largest G_s seen in the cluster.
    pub fn return_range(&self) -> Option<(f64, f64)> {
        let mut it = self
            .actions
            .values()
            .flat_map(|a| a.returns.iter().copied());
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), g| (lo.min(g), hi.max(g))))
    }
}

/// Monte-Carlo action values per (cluster, rule id).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StateActionTable {
    pub clusters: BTreeMap<usize, ClusterStats>,
    /// Episodes folded in so far.
    pub episodes: u64,
}

impl StateActionTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cluster(&self, s: usize) -> Option<&ClusterStats> {
        self.clusters.get(&s)
    }

    pub fn record(&mut self, s: usize, action: &str, g_s: f64) {
        let c = self.clusters.entry(s).or_default();
        c.n += 1;
        c.mean_return += (g_s - c.mean_return) / c.n as f64;
        let a = c.actions.entry(action.to_string()).or_default();
        a.n += 1;
        a.q_mean += (g_s - a.q_mean) / a.n as f64;
        a.returns.push(g_s);
    }

    /// Credits each recorded decision with its cluster's G_s. Truncated
    /// episodes and decisions without a cluster are skipped. Returns the
    /// number of samples added.
    pub fn update_values(&mut self, episode: &EpisodeRecord, returns: &EpisodeReturns) -> usize {
        if !episode.is_terminal() {
            return 0;
        }
        let mut added = 0;
        for d in &episode.decisions {
            let Some(s) = d.cluster else { continue };
            let Some(&g_s) = returns.per_cluster.get(&s) else {
                continue;
            };
            self.record(s, &d.chosen, g_s);
            added += 1;
        }
        self.episodes += 1;
        added
    }

    pub fn total_samples(&self) -> u64 {
        self.clusters.values().map(|c| c.n).sum()
    }
}
