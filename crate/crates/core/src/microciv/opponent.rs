//! The built-in rule-based opponent: expand, then develop, defend its
//! cities, and raid undefended enemy cities it can reach.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::command::Command;
use super::state::{cheb, BuildItem, Focus, GameState, UnitKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Temperament {
    /// Stop building settlers at this many cities.
    pub max_cities: usize,
    /// Path distance within which an undefended city is raided.
    pub raid_range: u32,
    /// Warriors kept in each city.
    pub guards: usize,
    /// Extra warriors for raids beyond the guards.
    pub raiders: usize,
}

impl Temperament {
    /// Drawn once per game from the game seed.
    pub fn from_seed(seed: u64) -> Temperament {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6f70_706f_6e65_6e74);
        Temperament {
            max_cities: rng.gen_range(3..=5),
            raid_range: rng.gen_range(4..=10),
            guards: 1,
            raiders: rng.gen_range(0..=2),
        }
    }
}

/// Plays player `p`'s whole turn, applying each order as it is decided.
pub fn play(state: &mut GameState, p: usize, t: &Temperament) {
    research(state, p, t);
    settlers(state, p);
    warriors(state, p, t);
    workers(state, p);
    production(state, p, t);
}

fn issue(state: &mut GameState, p: usize, cmd: Command) {
    if let Err(e) = state.apply_command(p, &cmd) {
        tracing::trace!(error = %e, "opponent order rejected");
    }
}

fn research(state: &mut GameState, p: usize, t: &Temperament) {
    let pl = &state.players[p];
    let want = if pl.cities.len() < t.max_cities {
        Focus::Growth
    } else {
        Focus::Science
    };
    if pl.focus != want && state.turn >= pl.focus_locked_until {
        issue(state, p, Command::ResearchFocus { focus: want });
    }
}

/// Best reachable city site: highest rank less one per step, ties to the
/// nearer tile, then the lower tile index.
pub fn best_site(
    state: &GameState,
    p: usize,
    x: i32,
    y: i32,
    max_dist: u32,
    explored_only: bool,
) -> Option<(i32, i32, u32)> {
    best_site_in(
        state,
        p,
        &state.distances(p, x, y),
        &state.site_ranks(p),
        max_dist,
        explored_only,
    )
}

/// [`best_site`] over precomputed distances and site ranks.
pub fn best_site_in(
    state: &GameState,
    p: usize,
    dist: &[Option<u32>],
    ranks: &[i64],
    max_dist: u32,
    explored_only: bool,
) -> Option<(i32, i32, u32)> {
    let mut best: Option<(i64, u32, usize)> = None;
    for (i, d) in dist.iter().enumerate() {
        let Some(d) = *d else { continue };
        if d > max_dist || (explored_only && !state.players[p].explored[i]) {
            continue;
        }
        let rank = ranks[i];
        if rank == 0 {
            continue;
        }
        let key = (rank - d as i64, d, i);
        if best.is_none_or(|(bk, bd, bi)| key.0 > bk || (key.0 == bk && (d, i) < (bd, bi))) {
            best = Some(key);
        }
    }
    best.map(|(_, d, i)| {
        (
            (i as i32) % state.map.width,
            (i as i32) / state.map.width,
            d,
        )
    })
}

fn settlers(state: &mut GameState, p: usize) {
    let ids: Vec<u32> = state.players[p]
        .units
        .iter()
        .filter(|u| u.kind == UnitKind::Settler && u.idle())
        .map(|u| u.id)
        .collect();
    for id in ids {
        let Some(u) = state.players[p].unit(id).cloned() else {
            continue;
        };
        match best_site(state, p, u.x, u.y, 8, false) {
            Some((_, _, 0)) => issue(state, p, Command::FoundCity { unit: id }),
            Some((x, y, _)) => issue(state, p, Command::Goto { unit: id, x, y }),
            None if state.site_ok(p, u.x, u.y) => issue(state, p, Command::FoundCity { unit: id }),
            None => issue(state, p, Command::Fortify { unit: id }),
        }
    }
}

fn warriors(state: &mut GameState, p: usize, t: &Temperament) {
    let o = GameState::other(p);
    let ids: Vec<u32> = state.players[p]
        .units
        .iter()
        .filter(|u| u.kind == UnitKind::Warrior && !u.moved)
        .map(|u| u.id)
        .collect();
    for id in ids {
        let Some(u) = state.players[p].unit(id).cloned() else {
            continue;
        };
        // strike anything adjacent that loses to us
        let mut struck = false;
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (x, y) = (u.x + dx, u.y + dy);
                if (dx, dy) == (0, 0) || !state.map.in_bounds(x, y) {
                    continue;
                }
                let beatable = match state.best_defender(o, x, y) {
                    Some((_, d)) => u.hp > d,
                    None => {
                        state.players[o].city_at(x, y).is_some() && u.hp > state.militia(o, x, y)
                    }
                };
                if beatable && !struck {
                    issue(state, p, Command::Attack { unit: id, x, y });
                    struck = true;
                }
            }
        }
        if struck {
            continue;
        }
        let in_city = state.players[p].city_at(u.x, u.y).cloned();
        if let Some(c) = &in_city {
            if state.players[p].defenders(c) <= t.guards && (u.fortified || u.idle()) {
                if !u.fortified {
                    issue(state, p, Command::Fortify { unit: id });
                }
                continue;
            }
        }
        if u.goto.is_some() {
            continue;
        }
        // raid: an enemy city with no defenders within range
        let dist = state.distances(p, u.x, u.y);
        let warriors = state.players[p].count(UnitKind::Warrior);
        let spare = warriors > state.players[p].cities.len() * t.guards;
        let target = state.players[o]
            .cities
            .iter()
            .filter(|c| state.players[o].defenders(c) == 0)
            .filter_map(|c| {
                let approach = approach_tile(state, p, &dist, c.x, c.y)?;
                (approach.2 <= t.raid_range).then_some(approach)
            })
            .min_by_key(|a| (a.2, a.1, a.0))
            .or_else(|| {
                // a player without cities is hunted down wherever it hides
                if !state.players[o].cities.is_empty() {
                    return None;
                }
                state.players[o]
                    .units
                    .iter()
                    .filter_map(|e| approach_tile(state, p, &dist, e.x, e.y))
                    .min_by_key(|a| (a.2, a.1, a.0))
            });
        if let (true, Some((x, y, d))) = (spare || in_city.is_none(), target) {
            if d > 0 {
                issue(state, p, Command::Goto { unit: id, x, y });
            }
            continue;
        }
        // otherwise reinforce the weakest city
        let post = state.players[p]
            .cities
            .iter()
            .filter(|c| state.players[p].defenders(c) < t.guards || (c.x, c.y) == (u.x, u.y))
            .filter_map(|c| dist[state.map.index(c.x, c.y)].map(|d| (d, c.id, c.x, c.y)))
            .min();
        match post {
            Some((0, ..)) | None => {
                if u.idle() {
                    issue(state, p, Command::Fortify { unit: id });
                }
            }
            Some((_, _, x, y)) => issue(state, p, Command::Goto { unit: id, x, y }),
        }
    }
}

/// Nearest reachable tile next to (x, y), with its distance.
pub fn approach_tile(
    state: &GameState,
    _p: usize,
    dist: &[Option<u32>],
    x: i32,
    y: i32,
) -> Option<(i32, i32, u32)> {
    let mut best: Option<(u32, usize)> = None;
    for dy in -1..=1 {
        for dx in -1..=1 {
            let (ax, ay) = (x + dx, y + dy);
            if (dx, dy) == (0, 0) || !state.map.in_bounds(ax, ay) {
                continue;
            }
            let i = state.map.index(ax, ay);
            if let Some(d) = dist[i] {
                if best.is_none_or(|b| (d, i) < b) {
                    best = Some((d, i));
                }
            }
        }
    }
    best.map(|(d, i)| {
        (
            (i as i32) % state.map.width,
            (i as i32) / state.map.width,
            d,
        )
    })
}

fn workers(state: &mut GameState, p: usize) {
    let ids: Vec<u32> = state.players[p]
        .units
        .iter()
        .filter(|u| u.kind == UnitKind::Worker && u.idle())
        .map(|u| u.id)
        .collect();
    for id in ids {
        let Some(u) = state.players[p].unit(id).cloned() else {
            continue;
        };
        let pl = &state.players[p];
        let near = pl.cities.iter().any(|c| cheb(c.x, c.y, u.x, u.y) <= 1);
        if near {
            issue(state, p, Command::Fortify { unit: id });
            continue;
        }
        let dist = state.distances(p, u.x, u.y);
        let home = pl
            .cities
            .iter()
            .filter_map(|c| dist[state.map.index(c.x, c.y)].map(|d| (d, c.id, c.x, c.y)))
            .min();
        match home {
            Some((_, _, x, y)) => issue(state, p, Command::Goto { unit: id, x, y }),
            None => issue(state, p, Command::Fortify { unit: id }),
        }
    }
}

fn production(state: &mut GameState, p: usize, t: &Temperament) {
    let o = GameState::other(p);
    let ids: Vec<u32> = state.players[p]
        .cities
        .iter()
        .filter(|c| c.queue.is_none())
        .map(|c| c.id)
        .collect();
    for id in ids {
        let pl = &state.players[p];
        let c = pl.city(id).expect("listed above").clone();
        let settlers = pl.count(UnitKind::Settler);
        let warriors = pl.count(UnitKind::Warrior);
        let workers = pl.count(UnitKind::Worker);
        let menace = state.players[o]
            .units
            .iter()
            .any(|u| u.kind == UnitKind::Warrior && cheb(u.x, u.y, c.x, c.y) <= 4);
        let item = if pl.defenders(&c) == 0 && warriors < pl.cities.len() * t.guards + 1 {
            BuildItem::Warrior
        } else if settlers == 0 && pl.cities.len() < t.max_cities && c.pop >= 2 {
            BuildItem::Settler
        } else if menace && !c.walls {
            BuildItem::Walls
        } else if !c.library {
            BuildItem::Library
        } else if warriors < pl.cities.len() * t.guards + t.raiders {
            BuildItem::Warrior
        } else if !c.granary {
            BuildItem::Granary
        } else if workers < pl.cities.len() {
            BuildItem::Worker
        } else if !c.walls {
            BuildItem::Walls
        } else {
            BuildItem::Warrior
        };
        issue(state, p, Command::Build { city: id, item });
    }
}
