use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Won,
    LostRace,
    Destroyed,
    Truncated,
}

impl OutcomeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeKind::Won => "won",
            OutcomeKind::LostRace => "lost_race",
            OutcomeKind::Destroyed => "destroyed",
            OutcomeKind::Truncated => "truncated",
        }
    }
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OutcomeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "won" => OutcomeKind::Won,
            "lost_race" => OutcomeKind::LostRace,
            "destroyed" => OutcomeKind::Destroyed,
            "truncated" => OutcomeKind::Truncated,
            other => return Err(format!("unknown outcome `{other}`")),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurnTrace {
    pub turn: u32,
    pub cluster: Option<usize>,
}

/// One resolved conflict: two or more distinct rules were applicable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub turn: u32,
    pub cluster: Option<usize>,
    pub candidates: Vec<String>,
    pub chosen: String,
    /// Number of (rule, binding) pairs in the conflict set.
    pub bindings: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub seed: u64,
    pub outcome: OutcomeKind,
    pub final_turn: u32,
    pub score: f64,
    pub turns: Vec<TurnTrace>,
    pub decisions: Vec<Decision>,
    /// `(turn, rule id)` for every rule fired, conflicts or not.
    pub executions: Vec<(u32, String)>,
    /// Raw per-turn feature values, when recording was requested.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub features: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Turn {
        turn: u32,
        cluster: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        features: Option<Vec<f64>>,
    },
    Decision {
        turn: u32,
        cluster: Option<usize>,
        candidates: Vec<String>,
        chosen: String,
        bindings: usize,
    },
    Execution {
        turn: u32,
        ki: String,
    },
    Outcome {
        outcome: OutcomeKind,
        final_turn: u32,
        score: f64,
        seed: u64,
    },
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("episode log has no outcome record")]
    MissingOutcome,
}

impl EpisodeRecord {
    pub fn is_terminal(&self) -> bool {
        self.outcome != OutcomeKind::Truncated
    }

    /// JSON Lines, chronological: each turn record is followed by that
    /// turn's decisions and executions; the outcome record comes last.
    pub fn to_jsonl(&self) -> String {
        let mut lines = Vec::new();
        let (mut d, mut e) = (0, 0);
        let mut emit_until = |lines: &mut Vec<Line>, turn: Option<u32>| {
            while d < self.decisions.len() && turn.is_none_or(|t| self.decisions[d].turn <= t) {
                let x = &self.decisions[d];
                lines.push(Line::Decision {
                    turn: x.turn,
                    cluster: x.cluster,
                    candidates: x.candidates.clone(),
                    chosen: x.chosen.clone(),
                    bindings: x.bindings,
                });
                d += 1;
            }
            while e < self.executions.len() && turn.is_none_or(|t| self.executions[e].0 <= t) {
                let (turn, ki) = &self.executions[e];
                lines.push(Line::Execution {
                    turn: *turn,
                    ki: ki.clone(),
                });
                e += 1;
            }
        };
        for (i, t) in self.turns.iter().enumerate() {
            lines.push(Line::Turn {
                turn: t.turn,
                cluster: t.cluster,
                features: self.features.get(i).cloned(),
            });
            emit_until(&mut lines, Some(t.turn));
        }
        emit_until(&mut lines, None);
        lines.push(Line::Outcome {
            outcome: self.outcome,
            final_turn: self.final_turn,
            score: self.score,
            seed: self.seed,
        });
        let mut out = String::new();
        for l in lines {
            out.push_str(&serde_json::to_string(&l).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<EpisodeRecord, RecordError> {
        let mut rec = EpisodeRecord {
            seed: 0,
            outcome: OutcomeKind::Truncated,
            final_turn: 0,
            score: 0.0,
            turns: Vec::new(),
            decisions: Vec::new(),
            executions: Vec::new(),
            features: Vec::new(),
        };
        let mut saw_outcome = false;
        for (i, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let line: Line = serde_json::from_str(raw).map_err(|source| RecordError::Json {
                line: i + 1,
                source,
            })?;
            match line {
                Line::Turn {
                    turn,
                    cluster,
                    features,
                } => {
                    rec.turns.push(TurnTrace { turn, cluster });
                    if let Some(f) = features {
                        rec.features.push(f);
                    }
                }
                Line::Decision {
                    turn,
                    cluster,
                    candidates,
                    chosen,
                    bindings,
                } => rec.decisions.push(Decision {
                    turn,
                    cluster,
                    candidates,
                    chosen,
                    bindings,
                }),
                Line::Execution { turn, ki } => rec.executions.push((turn, ki)),
                Line::Outcome {
                    outcome,
                    final_turn,
                    score,
                    seed,
                } => {
                    rec.outcome = outcome;
                    rec.final_turn = final_turn;
                    rec.score = score;
                    rec.seed = seed;
                    saw_outcome = true;
                }
            }
        }
        if !saw_outcome {
            return Err(RecordError::MissingOutcome);
        }
        Ok(rec)
    }
}
