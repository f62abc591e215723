use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{collect, episode_seeds, run_vs_scripted, HarnessError};
use crate::inference::{EpisodeLimits, OutcomeKind};
use crate::ki::KnowledgeItem;
use crate::microciv::GameMap;
use crate::rl::{
    episode_returns, fit_clusters, update_cluster_turns, ClusterModel, EpsilonSchedule,
    PolicyResolver, StateActionTable,
};

pub const CHECKPOINT_FORMAT: &str = "kbrl-checkpoint";
pub const MODEL_FORMAT: &str = "kbrl-cluster-model";
pub const TABLE_FORMAT: &str = "kbrl-state-action-table";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub episodes: usize,
    pub epsilon: EpsilonSchedule,
    pub k: usize,
    pub seed: u64,
    pub kb: Vec<PathBuf>,
    pub fixture: String,
    /// Episodes played in parallel against one frozen policy; 1 updates
    /// after every episode.
    pub wave: usize,
    pub max_turns: u32,
    /// Uniform-policy episodes used to fit the clusters when no model is
    /// supplied.
    pub cluster_episodes: usize,
    pub max_iter: usize,
    pub checkpoint_every: usize,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.into()));
        let eps_ok = |e: f64| e > 0.0 && e <= 1.0;
        if self.episodes == 0 {
            return bad("episodes must be at least 1");
        }
        if !eps_ok(self.epsilon.start) || !eps_ok(self.epsilon.end) {
            return bad("epsilon must lie in (0, 1]");
        }
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if self.wave == 0 {
            return bad("wave size must be at least 1");
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episodes: 300,
            epsilon: EpsilonSchedule::default(),
            k: 16,
            seed: 1,
            kb: Vec::new(),
            fixture: "default".into(),
            wave: 1,
            max_turns: 400,
            cluster_episodes: 20,
            max_iter: 100,
            checkpoint_every: 25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub episode: usize,
    pub seed: u64,
    pub outcome: OutcomeKind,
    pub final_turn: u32,
    /// Episode return G; empty for truncated episodes.
    #[serde(rename = "return")]
    pub ret: Option<f64>,
    pub epsilon: f64,
    pub decisions: usize,
    pub score: f64,
}

/// Everything needed to continue a run where it stopped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub next_episode: usize,
    pub model: ClusterModel,
    pub table: StateActionTable,
    pub curve: Vec<CurveRow>,
}

impl Checkpoint {
    pub fn done(&self) -> bool {
        self.next_episode >= self.config.episodes
    }
}

/// Fits the cluster model from uniform-policy baseline episodes.
pub fn baseline_model(
    kb: &[KnowledgeItem],
    map: &GameMap,
    config: &TrainConfig,
) -> Result<ClusterModel, HarnessError> {
    let ds = collect(
        kb,
        map,
        config.cluster_episodes,
        config.seed ^ 0x636c_7573_7465_7273,
        config.max_turns,
    )?;
    Ok(fit_clusters(
        &ds.rows,
        config.k,
        config.max_iter,
        config.seed,
    )?)
}

/// Monte-Carlo training against the scripted opponent.
///
/// Episodes run in waves of `config.wave` against a policy frozen at the
/// start of the wave; updates are then folded in episode order, so the
/// result does not depend on thread scheduling. `on_checkpoint` is called
/// whenever a multiple of `checkpoint_every` episodes has been crossed and
/// at the end.
pub fn train(
    kb: &[KnowledgeItem],
    map: &GameMap,
    start: Checkpoint,
    on_checkpoint: &mut dyn FnMut(&Checkpoint) -> Result<(), HarnessError>,
) -> Result<Checkpoint, HarnessError> {
    let mut cp = start;
    let cfg = cp.config.clone();
    cfg.validate()?;
    let seeds = episode_seeds(cfg.seed, cfg.episodes);
    let limits = EpisodeLimits {
        max_turns: cfg.max_turns,
        ..EpisodeLimits::default()
    };
    while !cp.done() {
        let from = cp.next_episode;
        let to = (from + cfg.wave).min(cfg.episodes);
        let eps: Vec<f64> = (from..to)
            .map(|e| cfg.epsilon.at(e, cfg.episodes))
            .collect();
        let records = (from..to)
            .into_par_iter()
            .map(|e| {
                let resolver = PolicyResolver::new(&cp.model, &cp.table, eps[e - from]);
                run_vs_scripted(kb, &resolver, map, seeds[e], limits.clone()).map(|(r, _)| r)
            })
            .collect::<Result<Vec<_>, _>>()?;
        for (i, rec) in records.into_iter().enumerate() {
            let e = from + i;
            let ret = if rec.is_terminal() {
                update_cluster_turns(&mut cp.model, &rec);
                let returns = episode_returns(rec.outcome, rec.final_turn, &cp.model, &rec)?;
                cp.table.update_values(&rec, &returns);
                Some(returns.g)
            } else {
                None
            };
            tracing::info!(episode = e, outcome = %rec.outcome, turns = rec.final_turn, ret, "training episode");
            cp.curve.push(CurveRow {
                episode: e,
                seed: seeds[e],
                outcome: rec.outcome,
                final_turn: rec.final_turn,
                ret,
                epsilon: eps[i],
                decisions: rec.decisions.len(),
                score: rec.score,
            });
        }
        cp.next_episode = to;
        let every = cfg.checkpoint_every.max(1);
        if to / every > from / every || cp.done() {
            on_checkpoint(&cp)?;
        }
    }
    Ok(cp)
}

/// Fresh run state: fits clusters unless a model is given.
pub fn start_run(
    kb: &[KnowledgeItem],
    map: &GameMap,
    config: TrainConfig,
    model: Option<ClusterModel>,
) -> Result<Checkpoint, HarnessError> {
    config.validate()?;
    let model = match model {
        Some(m) => m,
        None => baseline_model(kb, map, &config)?,
    };
    Ok(Checkpoint {
        config,
        next_episode: 0,
        model,
        table: StateActionTable::new(),
        curve: Vec::new(),
    })
}

/// The learning curve as CSV.
pub fn curve_csv(rows: &[CurveRow]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
