use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{episode_seeds, run_vs_scripted, HarnessError};
use crate::inference::{EpisodeLimits, OutcomeKind, UniformResolver};
use crate::ki::KnowledgeItem;
use crate::microciv::{features, GameMap};
use crate::rl::FeatureVector;

/// Per-turn feature vectors from baseline episodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub columns: Vec<String>,
    /// `(episode, turn)` of each row.
    pub index: Vec<(usize, u32)>,
    pub rows: Vec<FeatureVector>,
    /// `(seed, outcome, final turn)` of each episode.
    pub episodes: Vec<(u64, OutcomeKind, u32)>,
}

/// Plays `episodes` games with uniform conflict resolution and keeps every
/// turn's feature vector.
pub fn collect(
    kb: &[KnowledgeItem],
    map: &GameMap,
    episodes: usize,
    seed: u64,
    max_turns: u32,
) -> Result<Dataset, HarnessError> {
    if episodes == 0 {
        return Err(HarnessError::Config("episodes must be at least 1".into()));
    }
    let schema = features::schema();
    let weights = schema.weights();
    let limits = EpisodeLimits {
        max_turns,
        record_features: true,
        ..EpisodeLimits::default()
    };
    let records = episode_seeds(seed, episodes)
        .into_par_iter()
        .map(|s| run_vs_scripted(kb, &UniformResolver, map, s, limits.clone()).map(|(r, _)| r))
        .collect::<Result<Vec<_>, _>>()?;
    let mut ds = Dataset {
        columns: schema.columns(),
        index: Vec::new(),
        rows: Vec::new(),
        episodes: Vec::new(),
    };
    for (e, r) in records.into_iter().enumerate() {
        tracing::info!(episode = e, outcome = %r.outcome, turns = r.final_turn, "baseline episode");
        ds.episodes.push((r.seed, r.outcome, r.final_turn));
        for (t, values) in r.turns.iter().zip(r.features) {
            ds.index.push((e, t.turn));
            ds.rows.push(FeatureVector {
                values,
                weights: weights.clone(),
            });
        }
    }
    Ok(ds)
}

/// `episode,turn,<feature columns>` with one line per row.
pub fn dataset_csv(ds: &Dataset) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["episode".to_string(), "turn".to_string()];
    header.extend(ds.columns.iter().cloned());
    w.write_record(&header)?;
    for ((e, t), row) in ds.index.iter().zip(&ds.rows) {
        let mut rec = vec![e.to_string(), t.to_string()];
        rec.extend(row.values.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
