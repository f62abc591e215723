//! The episode loop: sync, match, resolve, execute, advance.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::exec::{execute, ExecError, HandlerSet};
use super::matcher::{match_rules, ConflictSet, EvalError};
use super::record::{Decision, EpisodeRecord, OutcomeKind, TurnTrace};
use super::Issue;
use crate::graph::{Graph, Ontology};
use crate::ki::KnowledgeItem;
use crate::rl::FeatureVector;

#[derive(Debug, Error, PartialEq)]
#[error("environment: {0}")]
pub struct EnvError(pub String);

/// What the engine needs from the world it acts in. Command dispatch goes
/// through the [`HandlerSet`] half.
pub trait Environment: HandlerSet {
    /// Applies queued commands, then mirrors the visible state into `graph`.
    fn sync(&mut self, graph: &mut Graph) -> Result<(), EnvError>;
    /// Finishes the current turn.
    fn end_turn(&mut self) -> Result<(), EnvError>;
    fn turn(&self) -> u32;
    fn outcome(&self) -> Option<OutcomeKind>;
    fn features(&self) -> Option<FeatureVector> {
        None
    }
    fn score(&self) -> f64 {
        0.0
    }
}

/// Picks one action (rule id) out of a conflict set of two or more.
pub trait ConflictResolver: Sync {
    fn assign_state(&self, _features: Option<&FeatureVector>) -> Option<usize> {
        None
    }

    /// Index into `actions`.
    fn select(&self, state: Option<usize>, actions: &[String], rng: &mut ChaCha8Rng) -> usize;
}

/// Uniform random choice; the untrained baseline.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformResolver;

impl ConflictResolver for UniformResolver {
    fn select(&self, _state: Option<usize>, actions: &[String], rng: &mut ChaCha8Rng) -> usize {
        rng.gen_range(0..actions.len())
    }
}

/// Always the first action in conflict-set order.
#[derive(Clone, Copy, Debug, Default)]
pub struct FirstResolver;

impl ConflictResolver for FirstResolver {
    fn select(&self, _state: Option<usize>, _actions: &[String], _rng: &mut ChaCha8Rng) -> usize {
        0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeLimits {
    pub max_turns: u32,
    /// Rule firings allowed in one turn before the turn is ended anyway.
    pub max_steps_per_turn: u32,
    pub record_features: bool,
}

impl Default for EpisodeLimits {
    fn default() -> Self {
        EpisodeLimits {
            max_turns: 400,
            max_steps_per_turn: 64,
            record_features: false,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// Inference state for one agent over one episode.
pub struct Engine<'kb> {
    kb: &'kb [KnowledgeItem],
    graph: Graph,
    issue: Issue,
    rng: ChaCha8Rng,
    limits: EpisodeLimits,
    seed: u64,
    turns: Vec<TurnTrace>,
    decisions: Vec<Decision>,
    features: Vec<Vec<f64>>,
}

impl<'kb> Engine<'kb> {
    pub fn new(
        kb: &'kb [KnowledgeItem],
        ontology: Arc<Ontology>,
        issue: Issue,
        seed: u64,
        limits: EpisodeLimits,
    ) -> Self {
        Engine {
            kb,
            graph: Graph::new(ontology),
            issue,
            rng: ChaCha8Rng::seed_from_u64(seed),
            limits,
            seed,
            turns: Vec::new(),
            decisions: Vec::new(),
            features: Vec::new(),
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn issue(&self) -> &Issue {
        &self.issue
    }

    pub fn limits(&self) -> &EpisodeLimits {
        &self.limits
    }

    /// Current conflict set against the last synced graph.
    pub fn conflict_set(
        &self,
        turn: u32,
        cluster: Option<usize>,
    ) -> Result<ConflictSet, EvalError> {
        Ok(ConflictSet {
            turn,
            cluster,
            candidates: match_rules(self.kb, &self.graph, &self.issue)?,
        })
    }

    /// Fires rules until none applies (or the step budget runs out). Does
    /// not end the turn.
    pub fn play_turn(
        &mut self,
        env: &mut dyn Environment,
        resolver: &dyn ConflictResolver,
    ) -> Result<(), EngineError> {
        let turn = env.turn();
        let features = env.features();
        let cluster = resolver.assign_state(features.as_ref());
        self.turns.push(TurnTrace { turn, cluster });
        if self.limits.record_features {
            self.features
                .push(features.map(|f| f.values).unwrap_or_default());
        }
        let mut steps = 0;
        loop {
            env.sync(&mut self.graph)?;
            if env.outcome().is_some() {
                return Ok(());
            }
            let set = self.conflict_set(turn, cluster)?;
            if set.is_empty() {
                return Ok(());
            }
            if steps >= self.limits.max_steps_per_turn {
                tracing::debug!(turn, steps, "step budget exhausted, ending turn");
                return Ok(());
            }
            let actions = set.actions();
            let chosen = if actions.len() == 1 {
                actions[0].clone()
            } else {
                let idx = resolver.select(cluster, &actions, &mut self.rng);
                let chosen = actions[idx].clone();
                self.decisions.push(Decision {
                    turn,
                    cluster,
                    candidates: actions,
                    chosen: chosen.clone(),
                    bindings: set.len(),
                });
                chosen
            };
            let cand = set
                .first_of(&chosen)
                .expect("chosen action comes from the set");
            let ki = &self.kb[cand.ki];
            execute(
                ki,
                &cand.binding,
                &mut self.graph,
                &mut self.issue,
                env,
                turn,
            )?;
            steps += 1;
        }
    }

    pub fn finish(self, outcome: OutcomeKind, final_turn: u32, score: f64) -> EpisodeRecord {
        EpisodeRecord {
            seed: self.seed,
            outcome,
            final_turn,
            score,
            turns: self.turns,
            decisions: self.decisions,
            executions: self.issue.history().to_vec(),
            features: self.features,
        }
    }
}

pub struct EpisodeConfig {
    pub limits: EpisodeLimits,
    pub seed: u64,
    pub issue: Issue,
}

/// Plays one episode to a terminal state or the turn limit.
pub fn run_episode(
    kb: &[KnowledgeItem],
    ontology: Arc<Ontology>,
    env: &mut dyn Environment,
    resolver: &dyn ConflictResolver,
    config: EpisodeConfig,
) -> Result<EpisodeRecord, EngineError> {
    let max_turns = config.limits.max_turns;
    let mut engine = Engine::new(kb, ontology, config.issue, config.seed, config.limits);
    loop {
        if let Some(outcome) = env.outcome() {
            return Ok(engine.finish(outcome, env.turn(), env.score()));
        }
        if env.turn() >= max_turns {
            return Ok(engine.finish(OutcomeKind::Truncated, env.turn(), env.score()));
        }
        engine.play_turn(env, resolver)?;
        if env.outcome().is_none() {
            env.end_turn()?;
        }
    }
}
