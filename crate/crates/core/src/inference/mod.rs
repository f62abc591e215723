//! Rule matching against the semantic network and the Issue, conflict-set
//! formation, transactional execution and the episode loop.

mod engine;
mod exec;
mod issue;
mod matcher;
mod record;

pub use engine::{
    run_episode, ConflictResolver, Engine, EngineError, EnvError, Environment, EpisodeConfig,
    EpisodeLimits, FirstResolver, UniformResolver,
};
pub use exec::{
    execute, ActionHandler, ExecError, ExecutionEffect, HandlerError, HandlerRegistry, HandlerSet,
};
pub use issue::Issue;
pub use matcher::{
    binding_holds, match_on, match_rules, Binding, Candidate, ConflictSet, EvalError,
};
pub use record::{Decision, EpisodeRecord, OutcomeKind, RecordError, TurnTrace};
