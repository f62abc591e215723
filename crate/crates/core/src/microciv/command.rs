use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::state::{BuildItem, Focus};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dir {
    N,
    Ne,
    E,
    Se,
    S,
    Sw,
    W,
    Nw,
}

impl Dir {
    pub const ALL: [Dir; 8] = [
        Dir::N,
        Dir::Ne,
        Dir::E,
        Dir::Se,
        Dir::S,
        Dir::Sw,
        Dir::W,
        Dir::Nw,
    ];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Dir::N => (0, -1),
            Dir::Ne => (1, -1),
            Dir::E => (1, 0),
            Dir::Se => (1, 1),
            Dir::S => (0, 1),
            Dir::Sw => (-1, 1),
            Dir::W => (-1, 0),
            Dir::Nw => (-1, -1),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Dir::N => "n",
            Dir::Ne => "ne",
            Dir::E => "e",
            Dir::Se => "se",
            Dir::S => "s",
            Dir::Sw => "sw",
            Dir::W => "w",
            Dir::Nw => "nw",
        }
    }
}

/// One player order. The text form follows the client console style,
/// e.g. `unit 12; press b` to found a city.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verb", rename_all = "snake_case")]
pub enum Command {
    Move {
        unit: u32,
        dir: Dir,
    },
    /// Stay in place for the rest of the game (or until ordered again).
    Fortify {
        unit: u32,
    },
    /// Walk toward a tile one step per turn, over several turns.
    Goto {
        unit: u32,
        x: i32,
        y: i32,
    },
    FoundCity {
        unit: u32,
    },
    Build {
        city: u32,
        item: BuildItem,
    },
    ResearchFocus {
        focus: Focus,
    },
    Attack {
        unit: u32,
        x: i32,
        y: i32,
    },
    EndTurn,
}

impl Command {
    /// The command family: move (including goto and fortify), found_city,
    /// build, research_focus, attack or end_turn.
    pub fn verb(&self) -> &'static str {
        match self {
            Command::Move { .. } | Command::Fortify { .. } | Command::Goto { .. } => "move",
            Command::FoundCity { .. } => "found_city",
            Command::Build { .. } => "build",
            Command::ResearchFocus { .. } => "research_focus",
            Command::Attack { .. } => "attack",
            Command::EndTurn => "end_turn",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Move { unit, dir } => write!(f, "unit {unit}; move {}", dir.as_str()),
            Command::Fortify { unit } => write!(f, "unit {unit}; press f"),
            Command::Goto { unit, x, y } => write!(f, "unit {unit}; goto {x},{y}"),
            Command::FoundCity { unit } => write!(f, "unit {unit}; press b"),
            Command::Build { city, item } => write!(f, "city {city}; build {}", item.as_str()),
            Command::ResearchFocus { focus } => write!(f, "focus {}", focus.as_str()),
            Command::Attack { unit, x, y } => write!(f, "unit {unit}; attack {x},{y}"),
            Command::EndTurn => f.write_str("end turn"),
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum CommandError {
    #[error("cannot parse command `{text}`: {reason}")]
    Parse { text: String, reason: String },
    #[error("illegal command `{command}`: {reason}")]
    Illegal { command: String, reason: String },
}

fn parse_xy(s: &str) -> Option<(i32, i32)> {
    let (x, y) = s.split_once(',')?;
    Some((x.trim().parse().ok()?, y.trim().parse().ok()?))
}

impl FromStr for Command {
    type Err = CommandError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let fail = |reason: &str| CommandError::Parse {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        fn words(s: &str) -> Vec<&str> {
            s.split_whitespace().collect()
        }
        let t = text.trim();
        if let Some((head, tail)) = t.split_once(';') {
            let head = words(head);
            let tail = words(tail);
            let id = |w: &[&str]| -> Result<u32, CommandError> {
                match w {
                    [_, n] => n.parse().map_err(|_| fail("bad id")),
                    _ => Err(fail("expected `unit <id>` or `city <id>`")),
                }
            };
            return match (head.first().copied(), tail.as_slice()) {
                (Some("unit"), ["press", "b"]) => Ok(Command::FoundCity { unit: id(&head)? }),
                (Some("unit"), ["press", "f"]) => Ok(Command::Fortify { unit: id(&head)? }),
                (Some("unit"), ["move", d]) => {
                    let dir = Dir::ALL
                        .into_iter()
                        .find(|x| x.as_str() == *d)
                        .ok_or_else(|| fail("unknown direction"))?;
                    Ok(Command::Move {
                        unit: id(&head)?,
                        dir,
                    })
                }
                (Some("unit"), [verb @ ("goto" | "attack"), rest @ ..]) => {
                    let (x, y) = parse_xy(&rest.concat()).ok_or_else(|| fail("expected `x,y`"))?;
                    let unit = id(&head)?;
                    Ok(if *verb == "goto" {
                        Command::Goto { unit, x, y }
                    } else {
                        Command::Attack { unit, x, y }
                    })
                }
                (Some("city"), ["build", item]) => Ok(Command::Build {
                    city: id(&head)?,
                    item: item.parse().map_err(|_| fail("unknown build item"))?,
                }),
                _ => Err(fail("unknown order")),
            };
        }
        match words(t).as_slice() {
            ["focus", f] => Ok(Command::ResearchFocus {
                focus: f.parse().map_err(|_| fail("unknown focus"))?,
            }),
            ["end", "turn"] => Ok(Command::EndTurn),
            _ => Err(fail("unknown verb")),
        }
    }
}
