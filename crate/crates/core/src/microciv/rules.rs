//! Command legality, command effects, combat and the end-of-turn update.

use super::command::{Command, CommandError};
use super::state::{
    cheb, tech_cost, BuildItem, City, GameState, Unit, UnitKind, FOCUS_LOCK, T_MAX,
};
use crate::inference::OutcomeKind;

/// Defence bonus of a hills tile.
pub const HILLS_BONUS: i64 = 3;
/// Defence bonus of city walls.
pub const WALLS_BONUS: i64 = 6;
/// Defence of an empty city per citizen.
pub const MILITIA_PER_POP: i64 = 3;
/// Defence bonus of a fortified unit.
pub const FORTIFY_BONUS: i64 = 2;

impl GameState {
    fn illegal(cmd: &Command, reason: impl Into<String>) -> CommandError {
        CommandError::Illegal {
            command: cmd.to_string(),
            reason: reason.into(),
        }
    }

    fn own_unit(&self, p: usize, id: u32, cmd: &Command) -> Result<&Unit, CommandError> {
        self.players[p]
            .unit(id)
            .ok_or_else(|| Self::illegal(cmd, format!("no unit {id}")))
    }

    /// A launch ends the game. A destroyed player is out, but the other
    /// one keeps playing toward the launch.
    pub fn is_terminal(&self) -> bool {
        self.players.iter().any(|p| p.launched.is_some()) || self.players.iter().all(|p| !p.alive())
    }

    /// Checks a command without changing anything.
    pub fn validate(&self, p: usize, cmd: &Command) -> Result<(), CommandError> {
        if self.is_terminal() {
            return Err(Self::illegal(cmd, "the game is over"));
        }
        let fresh = |u: &Unit| {
            if u.moved {
                Err(Self::illegal(cmd, "unit has already acted this turn"))
            } else {
                Ok(())
            }
        };
        match *cmd {
            Command::Move { unit, dir } => {
                let u = self.own_unit(p, unit, cmd)?;
                fresh(u)?;
                let (dx, dy) = dir.delta();
                if !self.passable(p, u.x + dx, u.y + dy) {
                    return Err(Self::illegal(cmd, "target tile cannot be entered"));
                }
            }
            Command::Fortify { unit } => {
                self.own_unit(p, unit, cmd)?;
            }
            Command::Goto { unit, x, y } => {
                let u = self.own_unit(p, unit, cmd)?;
                if !self.passable(p, x, y) {
                    return Err(Self::illegal(cmd, "target tile cannot be entered"));
                }
                if (u.x, u.y) == (x, y) {
                    return Err(Self::illegal(cmd, "unit is already there"));
                }
            }
            Command::FoundCity { unit } => {
                let u = self.own_unit(p, unit, cmd)?;
                if u.kind != UnitKind::Settler {
                    return Err(Self::illegal(cmd, "only settlers found cities"));
                }
                if !self.site_ok(p, u.x, u.y) {
                    return Err(Self::illegal(cmd, "a city cannot be founded here"));
                }
            }
            Command::Build { city, item } => {
                let c = self.players[p]
                    .city(city)
                    .ok_or_else(|| Self::illegal(cmd, format!("no city {city}")))?;
                if c.has(item) {
                    return Err(Self::illegal(cmd, "already built"));
                }
            }
            Command::ResearchFocus { .. } => {
                if self.turn < self.players[p].focus_locked_until {
                    return Err(Self::illegal(cmd, "research focus is locked"));
                }
            }
            Command::Attack { unit, x, y } => {
                let u = self.own_unit(p, unit, cmd)?;
                fresh(u)?;
                if u.kind != UnitKind::Warrior {
                    return Err(Self::illegal(cmd, "only warriors attack"));
                }
                if cheb(u.x, u.y, x, y) != 1 {
                    return Err(Self::illegal(cmd, "target is not adjacent"));
                }
                let o = &self.players[Self::other(p)];
                if o.units_at(x, y).next().is_none() && o.city_at(x, y).is_none() {
                    return Err(Self::illegal(cmd, "nothing to attack there"));
                }
            }
            Command::EndTurn => {}
        }
        Ok(())
    }

    /// Applies one command for player `p`. `EndTurn` runs the whole
    /// end-of-turn update without a scripted opponent.
    pub fn apply_command(&mut self, p: usize, cmd: &Command) -> Result<(), CommandError> {
        self.validate(p, cmd)?;
        self.version += 1;
        let idx = |s: &GameState, id: u32| {
            s.players[p]
                .units
                .iter()
                .position(|u| u.id == id)
                .expect("validated")
        };
        match *cmd {
            Command::Move { unit, dir } => {
                let i = idx(self, unit);
                let (dx, dy) = dir.delta();
                let u = &mut self.players[p].units[i];
                u.x += dx;
                u.y += dy;
                u.moved = true;
                u.fortified = false;
                u.goto = None;
            }
            Command::Fortify { unit } => {
                let i = idx(self, unit);
                let u = &mut self.players[p].units[i];
                u.fortified = true;
                u.goto = None;
                u.moved = true;
            }
            Command::Goto { unit, x, y } => {
                let i = idx(self, unit);
                let u = &mut self.players[p].units[i];
                u.goto = Some((x, y));
                u.fortified = false;
            }
            Command::FoundCity { unit } => {
                let i = idx(self, unit);
                let u = self.players[p].units.remove(i);
                let id = self.fresh_id();
                let turn = self.turn;
                self.players[p].cities.push(City {
                    id,
                    x: u.x,
                    y: u.y,
                    pop: 1,
                    food: 0,
                    shields: 0,
                    queue: None,
                    walls: false,
                    library: false,
                    granary: false,
                    founded: turn,
                });
            }
            Command::Build { city, item } => {
                let c = self.players[p]
                    .cities
                    .iter_mut()
                    .find(|c| c.id == city)
                    .expect("validated");
                c.queue = Some(item);
            }
            Command::ResearchFocus { focus } => {
                let turn = self.turn;
                let pl = &mut self.players[p];
                pl.focus = focus;
                pl.focus_locked_until = turn + FOCUS_LOCK;
            }
            Command::Attack { unit, x, y } => self.attack(p, unit, x, y),
            Command::EndTurn => self.end_turn(),
        }
        self.reveal();
        Ok(())
    }

    /// Applies commands in order; illegal ones are skipped and reported.
    pub fn apply(&mut self, p: usize, commands: &[Command]) -> Vec<CommandError> {
        let mut rejected = Vec::new();
        for c in commands {
            if let Err(e) = self.apply_command(p, c) {
                tracing::debug!(error = %e, "command rejected");
                rejected.push(e);
            }
        }
        rejected
    }

    /// Strength of the best defender on (x, y) belonging to `p`, and its
    /// index; ties go to the lower unit id.
    pub fn best_defender(&self, p: usize, x: i32, y: i32) -> Option<(usize, i64)> {
        let pl = &self.players[p];
        let walls = pl.city_at(x, y).is_some_and(|c| c.walls);
        let hills = self
            .map
            .tile(x, y)
            .is_some_and(|t| t.terrain == super::map::Terrain::Hills);
        let mut best: Option<(usize, i64, u32)> = None;
        for (i, u) in pl.units.iter().enumerate() {
            if (u.x, u.y) != (x, y) {
                continue;
            }
            let d = u.hp
                + if hills { HILLS_BONUS } else { 0 }
                + if walls { WALLS_BONUS } else { 0 }
                + if u.fortified { FORTIFY_BONUS } else { 0 };
            if best.is_none_or(|(_, bd, bid)| d > bd || (d == bd && u.id < bid)) {
                best = Some((i, d, u.id));
            }
        }
        best.map(|(i, d, _)| (i, d))
    }

    /// Deterministic combat: the attacker wins on strictly greater hp than
    /// the defence value. An empty enemy city is razed if the attacker beats its militia.
    fn attack(&mut self, p: usize, unit: u32, x: i32, y: i32) {
        let o = Self::other(p);
        let ai = self.players[p]
            .units
            .iter()
            .position(|u| u.id == unit)
            .expect("validated");
        self.players[p].units[ai].moved = true;
        self.players[p].units[ai].fortified = false;
        let attack = self.players[p].units[ai].hp;
        match self.best_defender(o, x, y) {
            Some((di, defence)) => {
                if attack > defence {
                    self.players[o].units.remove(di);
                    let a = &mut self.players[p].units[ai];
                    a.hp = (a.hp - defence / 2).max(1);
                } else {
                    self.players[p].units.remove(ai);
                    let d = &mut self.players[o].units[di];
                    d.hp = (d.hp - attack / 2).max(1);
                }
            }
            None => {
                let militia = self.militia(o, x, y);
                if attack > militia {
                    self.players[o].cities.retain(|c| (c.x, c.y) != (x, y));
                } else {
                    let a = &mut self.players[p].units[ai];
                    a.hp = (a.hp - militia / 2).max(1);
                }
            }
        }
    }

    /// Defence of a city with no units in it: its citizens plus walls and
    /// hills. Zero if there is no city at (x, y).
    pub fn militia(&self, p: usize, x: i32, y: i32) -> i64 {
        let Some(c) = self.players[p].city_at(x, y) else {
            return 0;
        };
        let hills = self
            .map
            .tile(x, y)
            .is_some_and(|t| t.terrain == super::map::Terrain::Hills);
        MILITIA_PER_POP * c.pop
            + if hills { HILLS_BONUS } else { 0 }
            + if c.walls { WALLS_BONUS } else { 0 }
    }

    /// Gotos, city growth and production, research, healing, then the turn
    /// counter. Both players are processed, player 0 first.
    pub fn end_turn(&mut self) {
        if self.is_terminal() {
            return;
        }
        self.version += 1;
        for p in 0..2 {
            self.advance_gotos(p);
        }
        for p in 0..2 {
            self.grow_and_produce(p);
        }
        for p in 0..2 {
            let turn = self.turn;
            let pl = &mut self.players[p];
            for u in &mut pl.units {
                let home = pl.cities.iter().any(|c| (c.x, c.y) == (u.x, u.y));
                let heal = if home { 2 } else { u.fortified as i64 };
                u.hp = (u.hp + heal).min(u.max_hp);
                u.moved = false;
            }
            if pl.tech >= T_MAX && pl.launched.is_none() {
                pl.launched = Some(turn + 1);
            }
        }
        self.turn += 1;
        self.reveal();
    }

    fn advance_gotos(&mut self, p: usize) {
        for i in 0..self.players[p].units.len() {
            let u = &self.players[p].units[i];
            let Some((tx, ty)) = u.goto else { continue };
            if u.moved {
                continue;
            }
            match self.next_step(p, u.x, u.y, tx, ty) {
                Some((nx, ny)) => {
                    let u = &mut self.players[p].units[i];
                    u.x = nx;
                    u.y = ny;
                    if (nx, ny) == (tx, ty) {
                        u.goto = None;
                    }
                }
                None => self.players[p].units[i].goto = None,
            }
        }
    }

    fn grow_and_produce(&mut self, p: usize) {
        let yields: Vec<_> = self.players[p]
            .cities
            .iter()
            .map(|c| self.city_yield(p, c))
            .collect();
        let tech = self.players[p].tech as i64;
        let mut new_units = Vec::new();
        let mut science = 0;
        let mut gold = 0;
        let mut generated = 0;
        for (c, y) in self.players[p].cities.iter_mut().zip(&yields) {
            generated += y.food + y.prod + y.science;
            science += y.science;
            gold += y.gold;
            c.food += y.food - 2 * c.pop;
            if c.food >= c.growth_threshold() && c.pop < c.max_pop() {
                c.food = if c.granary {
                    c.growth_threshold() / 2
                } else {
                    0
                };
                c.pop += 1;
            } else if c.pop >= c.max_pop() {
                c.food = c.food.min(c.growth_threshold());
            } else if c.food < 0 {
                c.food = 0;
                c.pop = (c.pop - 1).max(1);
            }
            c.shields += y.prod;
            if let Some(item) = c.queue {
                if c.shields >= item.cost() && (item != BuildItem::Settler || c.pop >= 2) {
                    c.shields -= item.cost();
                    c.queue = None;
                    match item.unit() {
                        Some(kind) => {
                            if kind == UnitKind::Settler {
                                c.pop -= 1;
                            }
                            let hp =
                                kind.base_hp() + if kind == UnitKind::Warrior { tech } else { 0 };
                            new_units.push((kind, c.x, c.y, hp));
                        }
                        None => match item {
                            BuildItem::Walls => c.walls = true,
                            BuildItem::Library => c.library = true,
                            BuildItem::Granary => c.granary = true,
                            _ => unreachable!("units handled above"),
                        },
                    }
                }
            }
        }
        for (kind, x, y, hp) in new_units {
            let id = self.fresh_id();
            self.players[p].units.push(Unit {
                id,
                kind,
                x,
                y,
                hp,
                max_hp: hp,
                moved: false,
                fortified: false,
                goto: None,
            });
        }
        let pl = &mut self.players[p];
        pl.science += science;
        pl.gold += gold;
        pl.generated += generated;
        if pl.tech < T_MAX && pl.science >= tech_cost(pl.tech) {
            pl.science -= tech_cost(pl.tech);
            pl.tech += 1;
        }
    }

    /// Outcome from the point of view of player `p`.
    pub fn outcome(&self, p: usize) -> Option<OutcomeKind> {
        let me = &self.players[p];
        let them = &self.players[Self::other(p)];
        if !me.alive() {
            return Some(OutcomeKind::Destroyed);
        }
        match (me.launched, them.launched) {
            (None, None) => None,
            (Some(_), None) => Some(OutcomeKind::Won),
            (None, Some(_)) => Some(OutcomeKind::LostRace),
            (Some(a), Some(b)) if a != b => Some(if a < b {
                OutcomeKind::Won
            } else {
                OutcomeKind::LostRace
            }),
            _ => {
                let key = |q: &super::state::Player| (q.science, q.score());
                Some(if key(me) > key(them) {
                    OutcomeKind::Won
                } else {
                    OutcomeKind::LostRace
                })
            }
        }
    }
}
