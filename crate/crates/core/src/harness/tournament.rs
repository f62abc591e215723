use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{episode_seeds, run_vs_scripted, HarnessError, SharedResolver};
use crate::inference::{Engine, EpisodeLimits, Issue, OutcomeKind};
use crate::ki::KnowledgeItem;
use crate::microciv::{ontology, GameMap, MicroCivEnv};

/// A knowledge base and the way it resolves conflicts.
#[derive(Clone)]
pub struct Agent {
    pub name: String,
    pub kb: Vec<KnowledgeItem>,
    pub resolver: SharedResolver,
}

/// One two-seat game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub seed: u64,
    /// Agent names by seat.
    pub seats: [String; 2],
    pub outcomes: [OutcomeKind; 2],
    pub final_turn: u32,
    pub scores: [i64; 2],
    pub generated: [i64; 2],
}

impl MatchResult {
    /// Seat that won, if any.
    pub fn winner(&self) -> Option<usize> {
        self.outcomes.iter().position(|o| *o == OutcomeKind::Won)
    }
}

/// Plays `a` (seat 0) against `b` (seat 1). Within a turn seat 0 acts
/// first; both seats' orders take effect before the turn ends.
pub fn play_match(
    a: &Agent,
    b: &Agent,
    map: &GameMap,
    seed: u64,
    max_turns: u32,
) -> Result<MatchResult, HarnessError> {
    let mut env = MicroCivEnv::two_seat(map.clone(), seed);
    let limits = EpisodeLimits {
        max_turns,
        ..EpisodeLimits::default()
    };
    let mut engines = [
        Engine::new(
            &a.kb,
            ontology(),
            Issue::start_playing("microciv"),
            seed,
            limits.clone(),
        ),
        Engine::new(
            &b.kb,
            ontology(),
            Issue::start_playing("microciv"),
            seed ^ 1,
            limits,
        ),
    ];
    let agents = [a, b];
    while !env.state().is_terminal() && env.state().turn < max_turns {
        for seat in 0..2 {
            if !env.state().players[seat].alive() {
                continue;
            }
            env.set_seat(seat);
            engines[seat].play_turn(&mut env, agents[seat].resolver.as_ref())?;
            if env.state().is_terminal() {
                break;
            }
        }
        if !env.state().is_terminal() {
            env.advance()?;
        }
    }
    let s = env.state();
    let outcome = |p: usize| s.outcome(p).unwrap_or(OutcomeKind::Truncated);
    Ok(MatchResult {
        seed,
        seats: [a.name.clone(), b.name.clone()],
        outcomes: [outcome(0), outcome(1)],
        final_turn: s.turn,
        scores: [s.players[0].score(), s.players[1].score()],
        generated: [s.players[0].generated, s.players[1].generated],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub a: String,
    pub b: String,
    pub games: usize,
    pub a_wins: usize,
    pub b_wins: usize,
    pub draws: usize,
}

impl PairSummary {
    pub fn a_win_rate(&self) -> f64 {
        self.a_wins as f64 / self.games.max(1) as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentSummary {
    pub agent: String,
    pub games: usize,
    pub wins: usize,
    /// Mean final turn of won games; empty without wins.
    pub mean_winning_turn: Option<f64>,
    pub mean_score: f64,
    pub generated: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TournamentResult {
    pub games: Vec<MatchResult>,
    pub pairs: Vec<PairSummary>,
    pub agents: Vec<AgentSummary>,
}

/// Round robin: every pair plays `games` games, alternating seats.
pub fn tournament(
    agents: &[Agent],
    map: &GameMap,
    games: usize,
    seed: u64,
    max_turns: u32,
) -> Result<TournamentResult, HarnessError> {
    if agents.len() < 2 {
        return Err(HarnessError::Config(
            "a tournament needs at least two agents".into(),
        ));
    }
    if games == 0 {
        return Err(HarnessError::Config(
            "games per pair must be at least 1".into(),
        ));
    }
    let mut fixtures = Vec::new();
    for i in 0..agents.len() {
        for j in i + 1..agents.len() {
            for g in 0..games {
                fixtures.push((i, j, g));
            }
        }
    }
    let seeds = episode_seeds(seed, games);
    let results = fixtures
        .par_iter()
        .map(|&(i, j, g)| {
            let (x, y) = if g % 2 == 0 { (i, j) } else { (j, i) };
            play_match(&agents[x], &agents[y], map, seeds[g], max_turns)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut pairs = Vec::new();
    for i in 0..agents.len() {
        for j in i + 1..agents.len() {
            let (a, b) = (&agents[i].name, &agents[j].name);
            let mut p = PairSummary {
                a: a.clone(),
                b: b.clone(),
                games: 0,
                a_wins: 0,
                b_wins: 0,
                draws: 0,
            };
            for r in results
                .iter()
                .filter(|r| r.seats.contains(a) && r.seats.contains(b))
            {
                p.games += 1;
                match r.winner().map(|w| &r.seats[w]) {
                    Some(w) if w == a => p.a_wins += 1,
                    Some(_) => p.b_wins += 1,
                    None => p.draws += 1,
                }
            }
            pairs.push(p);
        }
    }

    let mut acc: BTreeMap<&str, (usize, usize, Vec<u32>, i64, i64)> = BTreeMap::new();
    for r in &results {
        for seat in 0..2 {
            let e = acc.entry(r.seats[seat].as_str()).or_default();
            e.0 += 1;
            if r.outcomes[seat] == OutcomeKind::Won {
                e.1 += 1;
                e.2.push(r.final_turn);
            }
            e.3 += r.scores[seat];
            e.4 += r.generated[seat];
        }
    }
    let summaries = agents
        .iter()
        .map(|a| {
            let (games, wins, turns, score, generated) =
                acc.remove(a.name.as_str()).unwrap_or_default();
            AgentSummary {
                agent: a.name.clone(),
                games,
                wins,
                mean_winning_turn: (!turns.is_empty())
                    .then(|| turns.iter().map(|&t| t as f64).sum::<f64>() / turns.len() as f64),
                mean_score: score as f64 / games.max(1) as f64,
                generated,
            }
        })
        .collect();
    Ok(TournamentResult {
        games: results,
        pairs,
        agents: summaries,
    })
}

impl TournamentResult {
    pub fn pairs_csv(&self) -> Result<String, HarnessError> {
        to_csv(&self.pairs)
    }

    pub fn agents_csv(&self) -> Result<String, HarnessError> {
        to_csv(&self.agents)
    }

    pub fn pair(&self, a: &str, b: &str) -> Option<&PairSummary> {
        self.pairs.iter().find(|p| p.a == a && p.b == b)
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Results of an agent against the scripted opponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptedSummary {
    pub agent: String,
    pub games: usize,
    pub won: usize,
    pub lost_race: usize,
    pub destroyed: usize,
    pub truncated: usize,
    pub mean_final_turn: f64,
    pub mean_score: f64,
}

pub fn evaluate_vs_scripted(
    agent: &Agent,
    map: &GameMap,
    games: usize,
    seed: u64,
    max_turns: u32,
) -> Result<ScriptedSummary, HarnessError> {
    let limits = EpisodeLimits {
        max_turns,
        ..EpisodeLimits::default()
    };
    let records = episode_seeds(seed, games)
        .into_par_iter()
        .map(|s| {
            run_vs_scripted(&agent.kb, agent.resolver.as_ref(), map, s, limits.clone())
                .map(|(r, _)| r)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let count = |k: OutcomeKind| records.iter().filter(|r| r.outcome == k).count();
    let n = records.len().max(1) as f64;
    Ok(ScriptedSummary {
        agent: agent.name.clone(),
        games: records.len(),
        won: count(OutcomeKind::Won),
        lost_race: count(OutcomeKind::LostRace),
        destroyed: count(OutcomeKind::Destroyed),
        truncated: count(OutcomeKind::Truncated),
        mean_final_turn: records.iter().map(|r| r.final_turn as f64).sum::<f64>() / n,
        mean_score: records.iter().map(|r| r.score).sum::<f64>() / n,
    })
}
