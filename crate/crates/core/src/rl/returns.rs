use std::collections::BTreeMap;

use thiserror::Error;

use super::ClusterModel;
use crate::inference::{EpisodeRecord, OutcomeKind};

#[derive(Debug, Error, PartialEq)]
pub enum ReturnError {
    #[error("no return is defined for a `{0}` episode")]
    NotTerminal(OutcomeKind),
    #[error("cluster {cluster} is outside the model (k = {k})")]
    UnknownCluster { cluster: usize, k: usize },
}

/// Episode return G. Every turn costs 1; a lost race doubles the cost; an
/// early destruction costs the most.
pub fn episode_return(outcome: OutcomeKind, n: u32) -> Result<f64, ReturnError> {
    let n = n as f64;
    match outcome {
        OutcomeKind::Won => Ok(-n),
        OutcomeKind::LostRace => Ok(-2.0 * n),
        OutcomeKind::Destroyed => Ok(-(1000.0 - n)),
        OutcomeKind::Truncated => Err(ReturnError::NotTerminal(outcome)),
    }
}

/// State return G_s for a cluster whose mean turn is `t`.
pub fn state_return(outcome: OutcomeKind, n: u32, t: f64) -> Result<f64, ReturnError> {
    let n = n as f64;
    match outcome {
        OutcomeKind::Won => Ok(-(n - t)),
        OutcomeKind::LostRace => Ok(-(2.0 * n - t)),
        OutcomeKind::Destroyed => Ok(-(1000.0 - n + t)),
        OutcomeKind::Truncated => Err(ReturnError::NotTerminal(outcome)),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeReturns {
    pub g: f64,
    pub per_cluster: BTreeMap<usize, f64>,
}

/// Maximal runs `(cluster, first turn, last turn)` of consecutive turns
/// spent in one cluster.
pub fn cluster_runs(episode: &EpisodeRecord) -> Vec<(usize, u32, u32)> {
    let mut runs: Vec<(usize, u32, u32)> = Vec::new();
    for t in &episode.turns {
        let Some(c) = t.cluster else { continue };
        match runs.last_mut() {
            Some((rc, _, b)) if *rc == c && *b + 1 == t.turn => *b = t.turn,
            _ => runs.push((c, t.turn, t.turn)),
        }
    }
    runs
}

/// Folds the mean turn of every maximal run into the model's running
/// cluster turns. Truncated episodes are ignored; returns whether the
/// model changed.
pub fn update_cluster_turns(model: &mut ClusterModel, episode: &EpisodeRecord) -> bool {
    if !episode.is_terminal() {
        return false;
    }
    let mut changed = false;
    for (c, a, b) in cluster_runs(episode) {
        if let Some(ct) = model.cluster_turns.get_mut(c) {
            ct.fold((a as f64 + b as f64) / 2.0);
            changed = true;
        }
    }
    changed
}

/// G for the episode and G_s for every cluster it visited.
pub fn episode_returns(
    outcome: OutcomeKind,
    n: u32,
    model: &ClusterModel,
    episode: &EpisodeRecord,
) -> Result<EpisodeReturns, ReturnError> {
    let g = episode_return(outcome, n)?;
    let mut per_cluster = BTreeMap::new();
    for t in &episode.turns {
        let Some(c) = t.cluster else { continue };
        let ct = model
            .cluster_turns
            .get(c)
            .ok_or(ReturnError::UnknownCluster {
                cluster: c,
                k: model.k,
            })?;
        per_cluster.insert(c, state_return(outcome, n, ct.mean)?);
    }
    Ok(EpisodeReturns { g, per_cluster })
}
