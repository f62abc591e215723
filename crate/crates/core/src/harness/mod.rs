//! Experiment driver: baseline collection, clustering, training,
//! tournaments and single games on MicroCiv.

mod collect;
mod report;
mod tournament;
mod train;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::inference::{
    run_episode, ConflictResolver, EngineError, EnvError, EpisodeConfig, EpisodeLimits,
    EpisodeRecord, Issue,
};
use crate::ki::{load_pack_dir, KiError, KnowledgeItem};
use crate::microciv::{ontology, GameMap, GameState, MicroCivEnv, MicroCivError};
use crate::rl::persist::PersistError;
use crate::rl::{ClusterError, ReturnError};

pub use collect::{collect, dataset_csv, Dataset};
pub use report::{cluster_report, ClusterReport, ReportRow};
pub use tournament::{
    evaluate_vs_scripted, play_match, tournament, Agent, AgentSummary, MatchResult, PairSummary,
    ScriptedSummary, TournamentResult,
};
pub use train::{
    baseline_model, curve_csv, start_run, train, Checkpoint, CurveRow, TrainConfig,
    CHECKPOINT_FORMAT, MODEL_FORMAT, TABLE_FORMAT,
};

/// Pack names shipped with the crate, common pack first.
pub const SHIPPED_PACKS: [&str; 4] = ["common", "expander", "developer", "aggressor"];

/// The single-expert packs.
pub const EXPERTS: [&str; 3] = ["expander", "developer", "aggressor"];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Ki(#[from] KiError),
    #[error(transparent)]
    Engine(Box<EngineError>),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Return(#[from] ReturnError),
    #[error(transparent)]
    Persist(#[from] PersistError),
    #[error(transparent)]
    MicroCiv(#[from] MicroCivError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Config(String),
}

impl From<EngineError> for HarnessError {
    fn from(e: EngineError) -> Self {
        HarnessError::Engine(Box::new(e))
    }
}

/// Directory of a shipped pack.
pub fn shipped_pack_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/packs")
        .join(name)
}

/// Loads and concatenates pack directories in the given order.
pub fn load_kb(dirs: &[PathBuf]) -> Result<Vec<KnowledgeItem>, KiError> {
    let mut kb = Vec::new();
    for d in dirs {
        kb.extend(load_pack_dir(d)?);
    }
    Ok(kb)
}

/// Common pack plus the named expert packs.
pub fn shipped_kb(experts: &[&str]) -> Result<Vec<KnowledgeItem>, KiError> {
    let mut dirs = vec![shipped_pack_dir("common")];
    dirs.extend(experts.iter().map(|e| shipped_pack_dir(e)));
    load_kb(&dirs)
}

/// `n` episode seeds derived from one base seed.
pub fn episode_seeds(base: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    (0..n).map(|_| rng.gen()).collect()
}

/// One episode of `kb` against the scripted opponent.
pub fn run_vs_scripted(
    kb: &[KnowledgeItem],
    resolver: &dyn ConflictResolver,
    map: &GameMap,
    seed: u64,
    limits: EpisodeLimits,
) -> Result<(EpisodeRecord, GameState), HarnessError> {
    let mut env = MicroCivEnv::new(map.clone(), seed);
    let rec = run_episode(
        kb,
        ontology(),
        &mut env,
        resolver,
        EpisodeConfig {
            limits,
            seed,
            issue: Issue::start_playing("microciv"),
        },
    )?;
    Ok((rec, env.state().clone()))
}

/// A resolver shareable across threads.
pub type SharedResolver = Arc<dyn ConflictResolver + Send>;
