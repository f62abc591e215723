use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::command::Command;
use super::connector::connector_sync;
use super::map::GameMap;
use super::opponent::{self, Temperament};
use super::state::GameState;
use super::{features, MicroCivError};
use crate::graph::Graph;
use crate::inference::{EnvError, Environment, HandlerError, HandlerSet, OutcomeKind};
use crate::rl::FeatureVector;

/// Name rules use in `handler microciv "..."`.
pub const HANDLER: &str = "microciv";

/// How dispatched command text reaches the game.
#[derive(Clone, Debug, PartialEq)]
pub enum Transport {
    InProcess,
    /// Lines are appended to this file and consumed at the next sync.
    File(PathBuf),
}

/// One turn of a replay log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub turn: u32,
    /// `(seat, command text)` in application order.
    pub commands: Vec<(usize, String)>,
    /// SHA-256 of the state after the turn ended.
    pub hash: String,
}

pub fn state_hash(state: &GameState) -> String {
    let json = serde_json::to_vec(state).expect("state serializes");
    let digest = Sha256::digest(&json);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// MicroCiv as seen by the inference engine. Seat 1 is either the
/// scripted opponent or a second engine driven from outside.
pub struct MicroCivEnv {
    state: GameState,
    seat: usize,
    opponent: Option<Temperament>,
    transport: Transport,
    queues: [Vec<Command>; 2],
    synced: [Option<(u64, u64)>; 2],
    record: bool,
    turn_log: Vec<(usize, String)>,
    replay: Vec<ReplayEntry>,
}

impl MicroCivEnv {
    /// Agent in seat 0 against the scripted opponent.
    pub fn new(map: GameMap, seed: u64) -> Self {
        let mut env = Self::two_seat(map, seed);
        env.opponent = Some(Temperament::from_seed(seed));
        env
    }

    /// Both seats driven from outside; see [`MicroCivEnv::set_seat`].
    pub fn two_seat(map: GameMap, seed: u64) -> Self {
        MicroCivEnv {
            state: GameState::reset(map, seed),
            seat: 0,
            opponent: None,
            transport: Transport::InProcess,
            queues: [Vec::new(), Vec::new()],
            synced: [None, None],
            record: false,
            turn_log: Vec::new(),
            replay: Vec::new(),
        }
    }

    pub fn with_transport(mut self, transport: Transport) -> Self {
        self.transport = transport;
        self
    }

    pub fn recording(mut self, on: bool) -> Self {
        self.record = on;
        self
    }

    pub fn set_seat(&mut self, seat: usize) {
        assert!(seat < 2, "MicroCiv has two seats");
        self.seat = seat;
    }

    pub fn seat(&self) -> usize {
        self.seat
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn temperament(&self) -> Option<&Temperament> {
        self.opponent.as_ref()
    }

    pub fn replay(&self) -> &[ReplayEntry] {
        &self.replay
    }

    pub fn replay_jsonl(&self) -> String {
        self.replay
            .iter()
            .map(|e| serde_json::to_string(e).expect("entry serializes") + "\n")
            .collect()
    }

    fn read_file_commands(&mut self) -> Result<(), EnvError> {
        let Transport::File(path) = &self.transport else {
            return Ok(());
        };
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
            Err(e) => return Err(EnvError(format!("{}: {e}", path.display()))),
        };
        std::fs::write(path, "").map_err(|e| EnvError(format!("{}: {e}", path.display())))?;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let cmd: Command = line
                .parse()
                .map_err(|e| EnvError(format!("command file: {e}")))?;
            self.queues[self.seat].push(cmd);
        }
        Ok(())
    }

    /// Applies what `seat` has queued.
    fn flush(&mut self, seat: usize) {
        for cmd in std::mem::take(&mut self.queues[seat]) {
            match self.state.apply_command(seat, &cmd) {
                Ok(()) => {
                    if self.record {
                        self.turn_log.push((seat, cmd.to_string()));
                    }
                }
                Err(e) => tracing::debug!(seat, error = %e, "queued command rejected"),
            }
        }
    }

    /// Applies queued commands of both seats, lets the scripted opponent
    /// move, then ends the turn.
    pub fn advance(&mut self) -> Result<(), EnvError> {
        self.read_file_commands()?;
        self.flush(0);
        self.flush(1);
        if let Some(t) = self.opponent {
            if self.state.players[1].alive() && !self.state.is_terminal() {
                opponent::play(&mut self.state, 1, &t);
            }
        }
        let turn = self.state.turn;
        self.state.end_turn();
        if self.record {
            self.replay.push(ReplayEntry {
                turn,
                commands: std::mem::take(&mut self.turn_log),
                hash: state_hash(&self.state),
            });
        }
        Ok(())
    }
}

impl HandlerSet for MicroCivEnv {
    fn check(&self, handler: &str, command: &str) -> Result<(), HandlerError> {
        if handler != HANDLER {
            return Err(HandlerError::NotConfigured(handler.to_string()));
        }
        let reject = |reason: String| HandlerError::Rejected {
            handler: handler.to_string(),
            command: command.to_string(),
            reason,
        };
        let cmd: Command = command
            .parse()
            .map_err(|e: super::CommandError| reject(e.to_string()))?;
        if cmd == Command::EndTurn {
            return Err(reject("turns are ended by the engine".into()));
        }
        self.state
            .validate(self.seat, &cmd)
            .map_err(|e| reject(e.to_string()))
    }

    fn dispatch(&mut self, handler: &str, command: &str) -> Result<(), HandlerError> {
        if handler != HANDLER {
            return Err(HandlerError::NotConfigured(handler.to_string()));
        }
        let cmd: Command =
            command
                .parse()
                .map_err(|e: super::CommandError| HandlerError::Rejected {
                    handler: handler.to_string(),
                    command: command.to_string(),
                    reason: e.to_string(),
                })?;
        match &self.transport {
            Transport::InProcess => self.queues[self.seat].push(cmd),
            Transport::File(path) => {
                let mut f = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|e| HandlerError::Transport {
                        handler: handler.to_string(),
                        reason: e.to_string(),
                    })?;
                writeln!(f, "{cmd}").map_err(|e| HandlerError::Transport {
                    handler: handler.to_string(),
                    reason: e.to_string(),
                })?;
            }
        }
        Ok(())
    }
}

impl Environment for MicroCivEnv {
    fn sync(&mut self, graph: &mut Graph) -> Result<(), EnvError> {
        self.read_file_commands()?;
        self.flush(self.seat);
        let key = (self.state.version, graph.version());
        if self.synced[self.seat] == Some(key) {
            return Ok(());
        }
        connector_sync(&self.state, self.seat, graph)
            .map_err(|e| EnvError(format!("connector: {e}")))?;
        self.synced[self.seat] = Some((self.state.version, graph.version()));
        Ok(())
    }

    fn end_turn(&mut self) -> Result<(), EnvError> {
        self.advance()
    }

    fn turn(&self) -> u32 {
        self.state.turn
    }

    fn outcome(&self) -> Option<OutcomeKind> {
        self.state.outcome(self.seat)
    }

    fn features(&self) -> Option<FeatureVector> {
        Some(features::state_features(&self.state, self.seat))
    }

    fn score(&self) -> f64 {
        self.state.players[self.seat].score() as f64
    }
}

/// Re-runs a logged game and checks every turn's state hash.
pub fn replay(
    map: GameMap,
    seed: u64,
    scripted: bool,
    entries: &[ReplayEntry],
) -> Result<GameState, MicroCivError> {
    let mut env = if scripted {
        MicroCivEnv::new(map, seed)
    } else {
        MicroCivEnv::two_seat(map, seed)
    };
    for e in entries {
        if env.state.turn != e.turn {
            return Err(MicroCivError::Replay {
                turn: e.turn,
                message: format!(
                    "log is at turn {} but the game is at {}",
                    e.turn, env.state.turn
                ),
            });
        }
        for (seat, text) in &e.commands {
            let cmd: Command =
                text.parse()
                    .map_err(|err: super::CommandError| MicroCivError::Replay {
                        turn: e.turn,
                        message: err.to_string(),
                    })?;
            env.state
                .apply_command(*seat, &cmd)
                .map_err(|err| MicroCivError::Replay {
                    turn: e.turn,
                    message: err.to_string(),
                })?;
        }
        env.advance().map_err(|err| MicroCivError::Replay {
            turn: e.turn,
            message: err.to_string(),
        })?;
        let h = state_hash(&env.state);
        if h != e.hash {
            return Err(MicroCivError::Replay {
                turn: e.turn,
                message: "state hash differs".into(),
            });
        }
    }
    Ok(env.state)
}

pub fn parse_replay(text: &str) -> Result<Vec<ReplayEntry>, MicroCivError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| MicroCivError::Replay {
                turn: i as u32,
                message: e.to_string(),
            })
        })
        .collect()
}
