//! MicroCiv: a small deterministic two-player strategy game.
//!
//! Players found cities with settlers, grow them, build units and
//! buildings, and race to tech level [`T_MAX`]. A player who loses every
//! unit and city is destroyed. Movement is one tile per turn, combat is
//! decided by hit points and defence bonuses, and nothing is random once
//! the seed is fixed.

mod command;
pub mod connector;
mod env;
pub mod features;
mod map;
pub mod opponent;
mod rules;
mod state;

use thiserror::Error;

pub use command::{Command, CommandError, Dir};
pub use connector::{connector_sync, ontology};
pub use env::{parse_replay, replay, state_hash, MicroCivEnv, ReplayEntry, Transport, HANDLER};
pub use map::{GameMap, Terrain, Tile, FIXTURES};
pub use opponent::Temperament;
pub use rules::{FORTIFY_BONUS, HILLS_BONUS, MILITIA_PER_POP, WALLS_BONUS};
pub use state::{
    cheb, tech_cost, BuildItem, City, Focus, GameState, Player, Unit, UnitKind, Yield,
    CITY_SPACING, FOCUS_LOCK, GRANARY_POP, MAX_POP, SIGHT, T_MAX,
};

use crate::inference::OutcomeKind;

#[derive(Debug, Error, PartialEq)]
pub enum MicroCivError {
    #[error("unknown map fixture `{0}`")]
    UnknownFixture(String),
    #[error("map `{name}` line {line}: {message}")]
    Map {
        name: String,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Io(String),
    #[error("replay turn {turn}: {message}")]
    Replay { turn: u32, message: String },
}

/// Initial state of a shipped fixture.
pub fn reset(fixture: &str, seed: u64) -> Result<GameState, MicroCivError> {
    Ok(GameState::reset(GameMap::fixture(fixture)?, seed))
}

/// Applies the agent's (seat 0) commands in order. `EndTurn` lets the
/// scripted opponent play seat 1 before the turn ends. Illegal commands
/// are skipped and returned.
pub fn apply(state: &GameState, commands: &[Command]) -> (GameState, Vec<CommandError>) {
    let mut next = state.clone();
    let mut rejected = Vec::new();
    let temperament = Temperament::from_seed(state.seed);
    for c in commands {
        let r = match c {
            Command::EndTurn => {
                if next.is_terminal() {
                    Err(CommandError::Illegal {
                        command: c.to_string(),
                        reason: "the game is over".into(),
                    })
                } else {
                    if next.players[1].alive() {
                        opponent::play(&mut next, 1, &temperament);
                    }
                    next.end_turn();
                    Ok(())
                }
            }
            other => next.apply_command(0, other),
        };
        if let Err(e) = r {
            tracing::debug!(error = %e, "command rejected");
            rejected.push(e);
        }
    }
    (next, rejected)
}

/// Outcome for the agent in seat 0.
pub fn outcome(state: &GameState) -> Option<OutcomeKind> {
    state.outcome(0)
}
