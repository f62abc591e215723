use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::map::GameMap;

/// Tech level that launches the rocket.
pub const T_MAX: u8 = 8;
/// Chebyshev radius each unit and city reveals.
pub const SIGHT: i32 = 2;
/// No two cities closer than this (Chebyshev).
pub const CITY_SPACING: i32 = 3;
/// Largest city without a granary.
pub const MAX_POP: i64 = 6;
/// Extra size a granary allows.
pub const GRANARY_POP: i64 = 3;
/// Turns a research focus stays fixed once chosen.
pub const FOCUS_LOCK: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    Settler,
    Worker,
    Warrior,
}

impl UnitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            UnitKind::Settler => "settler",
            UnitKind::Worker => "worker",
            UnitKind::Warrior => "warrior",
        }
    }

    pub fn base_hp(self) -> i64 {
        match self {
            UnitKind::Settler | UnitKind::Worker => 3,
            UnitKind::Warrior => 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildItem {
    Settler,
    Worker,
    Warrior,
    Walls,
    Library,
    Granary,
}

impl BuildItem {
    pub const ALL: [BuildItem; 6] = [
        BuildItem::Settler,
        BuildItem::Worker,
        BuildItem::Warrior,
        BuildItem::Walls,
        BuildItem::Library,
        BuildItem::Granary,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BuildItem::Settler => "settler",
            BuildItem::Worker => "worker",
            BuildItem::Warrior => "warrior",
            BuildItem::Walls => "walls",
            BuildItem::Library => "library",
            BuildItem::Granary => "granary",
        }
    }

    pub fn cost(self) -> i64 {
        match self {
            BuildItem::Settler => 24,
            BuildItem::Worker => 16,
            BuildItem::Warrior => 12,
            BuildItem::Walls => 24,
            BuildItem::Library => 30,
            BuildItem::Granary => 20,
        }
    }

    pub fn unit(self) -> Option<UnitKind> {
        match self {
            BuildItem::Settler => Some(UnitKind::Settler),
            BuildItem::Worker => Some(UnitKind::Worker),
            BuildItem::Warrior => Some(UnitKind::Warrior),
            _ => None,
        }
    }
}

impl FromStr for BuildItem {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        BuildItem::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Focus {
    Science,
    Production,
    Growth,
}

impl Focus {
    pub const ALL: [Focus; 3] = [Focus::Science, Focus::Production, Focus::Growth];

    pub fn as_str(self) -> &'static str {
        match self {
            Focus::Science => "science",
            Focus::Production => "production",
            Focus::Growth => "growth",
        }
    }
}

impl FromStr for Focus {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Focus::ALL.into_iter().find(|f| f.as_str() == s).ok_or(())
    }
}

impl fmt::Display for Focus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Unit {
    pub id: u32,
    pub kind: UnitKind,
    pub x: i32,
    pub y: i32,
    pub hp: i64,
    pub max_hp: i64,
    pub moved: bool,
    pub fortified: bool,
    pub goto: Option<(i32, i32)>,
}

impl Unit {
    /// Free to receive an order this turn.
    pub fn idle(&self) -> bool {
        !self.moved && !self.fortified && self.goto.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct City {
    pub id: u32,
    pub x: i32,
    pub y: i32,
    pub pop: i64,
    pub food: i64,
    pub shields: i64,
    pub queue: Option<BuildItem>,
    pub walls: bool,
    pub library: bool,
    pub granary: bool,
    pub founded: u32,
}

impl City {
    pub fn has(&self, b: BuildItem) -> bool {
        match b {
            BuildItem::Walls => self.walls,
            BuildItem::Library => self.library,
            BuildItem::Granary => self.granary,
            _ => false,
        }
    }

    pub fn growth_threshold(&self) -> i64 {
        10 + 6 * self.pop
    }

    /// Size limit; a granary raises it.
    pub fn max_pop(&self) -> i64 {
        if self.granary {
            MAX_POP + GRANARY_POP
        } else {
            MAX_POP
        }
    }
}

/// Per-turn yields of one city.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Yield {
    pub food: i64,
    pub prod: i64,
    pub science: i64,
    pub gold: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Player {
    pub units: Vec<Unit>,
    pub cities: Vec<City>,
    pub science: i64,
    pub tech: u8,
    pub gold: i64,
    pub focus: Focus,
    pub focus_locked_until: u32,
    pub explored: Vec<bool>,
    /// Turn on which the rocket launched.
    pub launched: Option<u32>,
    /// Food, production and science generated over the game.
    pub generated: i64,
}

impl Player {
    pub fn alive(&self) -> bool {
        !self.units.is_empty() || !self.cities.is_empty()
    }

    pub fn unit(&self, id: u32) -> Option<&Unit> {
        self.units.iter().find(|u| u.id == id)
    }

    pub fn city(&self, id: u32) -> Option<&City> {
        self.cities.iter().find(|c| c.id == id)
    }

    pub fn city_at(&self, x: i32, y: i32) -> Option<&City> {
        self.cities.iter().find(|c| c.x == x && c.y == y)
    }

    pub fn units_at(&self, x: i32, y: i32) -> impl Iterator<Item = &Unit> {
        self.units.iter().filter(move |u| u.x == x && u.y == y)
    }

    pub fn count(&self, kind: UnitKind) -> usize {
        self.units.iter().filter(|u| u.kind == kind).count()
    }

    pub fn population(&self) -> i64 {
        self.cities.iter().map(|c| c.pop).sum()
    }

    pub fn score(&self) -> i64 {
        let buildings: i64 = self
            .cities
            .iter()
            .map(|c| c.walls as i64 + c.library as i64 + c.granary as i64)
            .sum();
        2 * self.population() + 3 * self.cities.len() as i64 + 10 * self.tech as i64 + buildings
    }

    /// Warriors standing in the city.
    pub fn defenders(&self, city: &City) -> usize {
        self.units_at(city.x, city.y)
            .filter(|u| u.kind == UnitKind::Warrior)
            .count()
    }

    pub fn sees(&self, x: i32, y: i32) -> bool {
        let near = |ax: i32, ay: i32| cheb(ax, ay, x, y) <= SIGHT;
        self.units.iter().any(|u| near(u.x, u.y)) || self.cities.iter().any(|c| near(c.x, c.y))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameState {
    pub turn: u32,
    pub map: GameMap,
    pub players: [Player; 2],
    pub next_id: u32,
    pub seed: u64,
    /// Bumped on every change; lets observers skip redundant work.
    pub version: u64,
}

pub fn cheb(ax: i32, ay: i32, bx: i32, by: i32) -> i32 {
    (ax - bx).abs().max((ay - by).abs())
}

pub fn tech_cost(level: u8) -> i64 {
    200 + 160 * level as i64
}

impl GameState {
    pub fn reset(map: GameMap, seed: u64) -> GameState {
        let n = map.tiles.len();
        let mut next_id = 1;
        let mut player = |(x, y): (i32, i32)| {
            let mut units = Vec::new();
            for kind in [UnitKind::Settler, UnitKind::Warrior] {
                units.push(Unit {
                    id: next_id,
                    kind,
                    x,
                    y,
                    hp: kind.base_hp(),
                    max_hp: kind.base_hp(),
                    moved: false,
                    fortified: false,
                    goto: None,
                });
                next_id += 1;
            }
            Player {
                units,
                cities: Vec::new(),
                science: 0,
                tech: 0,
                gold: 0,
                focus: Focus::Growth,
                focus_locked_until: 0,
                explored: vec![false; n],
                launched: None,
                generated: 0,
            }
        };
        let players = [player(map.starts[0]), player(map.starts[1])];
        let mut s = GameState {
            turn: 0,
            map,
            players,
            next_id,
            seed,
            version: 0,
        };
        s.reveal();
        s
    }

    pub fn other(p: usize) -> usize {
        1 - p
    }

    pub fn fresh_id(&mut self) -> u32 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    /// Marks everything within sight of each player's units and cities.
    pub fn reveal(&mut self) {
        let map = &self.map;
        for p in &mut self.players {
            let spots: Vec<(i32, i32)> = p
                .units
                .iter()
                .map(|u| (u.x, u.y))
                .chain(p.cities.iter().map(|c| (c.x, c.y)))
                .collect();
            for (cx, cy) in spots {
                for y in cy - SIGHT..=cy + SIGHT {
                    for x in cx - SIGHT..=cx + SIGHT {
                        if map.in_bounds(x, y) {
                            p.explored[map.index(x, y)] = true;
                        }
                    }
                }
            }
        }
    }

    pub fn city_anywhere(&self, x: i32, y: i32) -> bool {
        self.players.iter().any(|p| p.city_at(x, y).is_some())
    }

    /// Whether `p` may found a city on (x, y).
    pub fn site_ok(&self, p: usize, x: i32, y: i32) -> bool {
        self.map.is_land(x, y)
            && !self
                .players
                .iter()
                .flat_map(|q| q.cities.iter())
                .any(|c| cheb(c.x, c.y, x, y) < CITY_SPACING)
            && self.players[Self::other(p)].units_at(x, y).next().is_none()
    }

    /// Sum of food and production around a prospective city, hills centre
    /// counting extra for defence. Zero if the site is not allowed.
    pub fn site_rank(&self, p: usize, x: i32, y: i32) -> i64 {
        if !self.site_ok(p, x, y) {
            return 0;
        }
        let mut r = 0;
        for dy in -1..=1 {
            for dx in -1..=1 {
                if let Some(t) = self.map.tile(x + dx, y + dy) {
                    r += t.food() + t.prod();
                }
            }
        }
        if self
            .map
            .tile(x, y)
            .is_some_and(|t| t.terrain == super::map::Terrain::Hills)
        {
            r += 2;
        }
        r
    }

    /// Tiles `p` cannot enter: water and anything held by the other player.
    pub fn passable(&self, p: usize, x: i32, y: i32) -> bool {
        let o = &self.players[Self::other(p)];
        self.map.is_land(x, y) && o.city_at(x, y).is_none() && o.units_at(x, y).next().is_none()
    }

    /// Breadth-first step distances from (x, y) over tiles `p` can enter,
    /// 8-connected. Unreachable tiles are `None`.
    pub fn distances(&self, p: usize, x: i32, y: i32) -> Vec<Option<u32>> {
        self.distances_in(&self.passable_mask(p), x, y)
    }

    /// [`GameState::passable`] for every tile, by tile index.
    pub fn passable_mask(&self, p: usize) -> Vec<bool> {
        let mut mask: Vec<bool> = self.map.tiles.iter().map(|t| t.is_land()).collect();
        let o = &self.players[Self::other(p)];
        for (x, y) in o
            .units
            .iter()
            .map(|u| (u.x, u.y))
            .chain(o.cities.iter().map(|c| (c.x, c.y)))
        {
            mask[self.map.index(x, y)] = false;
        }
        mask
    }

    /// Breadth-first distances over the tiles `mask` allows.
    pub fn distances_in(&self, mask: &[bool], x: i32, y: i32) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.map.tiles.len()];
        if !self.map.in_bounds(x, y) {
            return dist;
        }
        let mut q = VecDeque::new();
        dist[self.map.index(x, y)] = Some(0);
        q.push_back((x, y, 0));
        while let Some((cx, cy, d)) = q.pop_front() {
            for dir in super::command::Dir::ALL {
                let (dx, dy) = dir.delta();
                let (nx, ny) = (cx + dx, cy + dy);
                if !self.map.in_bounds(nx, ny) {
                    continue;
                }
                let i = self.map.index(nx, ny);
                if mask[i] && dist[i].is_none() {
                    dist[i] = Some(d + 1);
                    q.push_back((nx, ny, d + 1));
                }
            }
        }
        dist
    }

    /// [`GameState::site_rank`] for every tile, by tile index.
    pub fn site_ranks(&self, p: usize) -> Vec<i64> {
        (0..self.map.tiles.len() as i32)
            .map(|i| self.site_rank(p, i % self.map.width, i / self.map.width))
            .collect()
    }

    /// First step from (x, y) on a shortest path to (tx, ty); ties go to
    /// the first direction in compass order.
    pub fn next_step(&self, p: usize, x: i32, y: i32, tx: i32, ty: i32) -> Option<(i32, i32)> {
        if !self.passable(p, tx, ty) {
            return None;
        }
        let from_goal = self.distances(p, tx, ty);
        let here = from_goal[self.map.index(x, y)]?;
        if here == 0 {
            return None;
        }
        super::command::Dir::ALL.into_iter().find_map(|dir| {
            let (dx, dy) = dir.delta();
            let (nx, ny) = (x + dx, y + dy);
            (self.map.in_bounds(nx, ny) && from_goal[self.map.index(nx, ny)] == Some(here - 1))
                .then_some((nx, ny))
        })
    }

    /// Yields of a city this turn, before growth and production are
    /// applied.
    pub fn city_yield(&self, p: usize, city: &City) -> Yield {
        let player = &self.players[p];
        let enemy = &self.players[Self::other(p)];
        let centre = self
            .map
            .tile(city.x, city.y)
            .expect("cities stand on the map");
        let mut food = centre.food().max(2);
        let mut prod = centre.prod().max(1);
        let mut ring: Vec<(i64, usize, i64, i64)> = Vec::new();
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (x, y) = (city.x + dx, city.y + dy);
                if (dx, dy) == (0, 0) || enemy.units_at(x, y).next().is_some() {
                    continue;
                }
                if let Some(t) = self.map.tile(x, y) {
                    ring.push((
                        -(t.food() + t.prod()),
                        self.map.index(x, y),
                        t.food(),
                        t.prod(),
                    ));
                }
            }
        }
        ring.sort();
        for &(_, _, f, pr) in ring.iter().take(city.pop as usize) {
            food += f;
            prod += pr;
        }
        let workers = player
            .units
            .iter()
            .filter(|u| u.kind == UnitKind::Worker && cheb(u.x, u.y, city.x, city.y) <= 1)
            .count()
            .min(2) as i64;
        food += workers + city.granary as i64;
        prod += workers;
        let mut science = 1 + city.pop;
        if city.library {
            science += science / 2;
        }
        match player.focus {
            Focus::Science => science += science / 2,
            Focus::Production => prod += prod / 2,
            Focus::Growth => food += food / 2,
        }
        Yield {
            food,
            prod,
            science,
            gold: city.pop,
        }
    }

    pub fn total_yield(&self, p: usize) -> Yield {
        let mut y = Yield::default();
        for c in &self.players[p].cities {
            let cy = self.city_yield(p, c);
            y.food += cy.food - 2 * c.pop;
            y.prod += cy.prod;
            y.science += cy.science;
            y.gold += cy.gold;
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_places_two_units_each() {
        let s = GameState::reset(GameMap::fixture("default").unwrap(), 7);
        assert_eq!(s.turn, 0);
        for (p, &(x, y)) in s.players.iter().zip(&s.map.starts) {
            assert_eq!(p.units.len(), 2);
            assert!(p.units.iter().all(|u| (u.x, u.y) == (x, y)));
            assert_eq!(p.tech, 0);
            assert!(p.explored[s.map.index(x, y)]);
        }
        assert_eq!(s, GameState::reset(GameMap::fixture("default").unwrap(), 7));
    }

    #[test]
    fn paths_avoid_water() {
        let s = GameState::reset(GameMap::fixture("default").unwrap(), 0);
        let d = s.distances(0, 2, 5);
        assert_eq!(d[s.map.index(2, 5)], Some(0));
        assert_eq!(d[s.map.index(0, 0)], None);
        assert!(d[s.map.index(13, 5)].is_some());
        let step = s.next_step(0, 2, 5, 4, 5).unwrap();
        assert_eq!(step, (3, 4));
        assert_eq!(s.next_step(0, 2, 5, 2, 5), None);
    }
}
