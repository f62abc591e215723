use serde::{Deserialize, Serialize};

use crate::rl::{action_probabilities, policy_params, ActionParams, StateActionTable};

/// One sampled action of a cluster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub action: String,
    pub n: u64,
    pub q_mean: f64,
    pub mu: f64,
    pub sigma: f64,
    /// Selection probability if every sampled action were in conflict.
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub cluster: usize,
    pub rows: Vec<ReportRow>,
}

impl ClusterReport {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Values and policy of one cluster, over all of its sampled actions.
pub fn cluster_report(table: &StateActionTable, cluster: usize) -> ClusterReport {
    let params = policy_params(table, cluster);
    let Some(stats) = table.cluster(cluster) else {
        return ClusterReport {
            cluster,
            rows: Vec::new(),
        };
    };
    let sampled: Vec<_> = stats.actions.iter().filter(|(_, a)| a.n > 0).collect();
    let ap: Vec<ActionParams> = sampled.iter().map(|(k, _)| params.get(k)).collect();
    let probs = action_probabilities(&ap);
    let rows = sampled
        .iter()
        .zip(ap.iter().zip(probs))
        .map(|((action, st), (p, probability))| ReportRow {
            action: action.to_string(),
            n: st.n,
            q_mean: st.q_mean,
            mu: p.mu,
            sigma: p.sigma,
            probability,
        })
        .collect();
    ClusterReport { cluster, rows }
}
