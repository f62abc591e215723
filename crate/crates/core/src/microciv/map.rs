use serde::{Deserialize, Serialize};

use super::MicroCivError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terrain {
    Grass,
    Hills,
    Water,
}

impl Terrain {
    pub fn as_str(self) -> &'static str {
        match self {
            Terrain::Grass => "grass",
            Terrain::Hills => "hills",
            Terrain::Water => "water",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tile {
    pub terrain: Terrain,
    /// A special resource: +1 food and +1 production.
    pub bonus: bool,
}

impl Tile {
    pub fn is_land(&self) -> bool {
        self.terrain != Terrain::Water
    }

    pub fn food(&self) -> i64 {
        let base = match self.terrain {
            Terrain::Grass => 2,
            Terrain::Hills => 1,
            Terrain::Water => 1,
        };
        base + self.bonus as i64
    }

    pub fn prod(&self) -> i64 {
        let base = match self.terrain {
            Terrain::Grass => 1,
            Terrain::Hills => 2,
            Terrain::Water => 0,
        };
        base + self.bonus as i64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameMap {
    pub name: String,
    pub width: i32,
    pub height: i32,
    pub tiles: Vec<Tile>,
    pub starts: [(i32, i32); 2],
}

pub const FIXTURES: [&str; 3] = ["default", "twin-continents", "islands"];

impl GameMap {
    /// Map text: `#` comments, `start <player> <x> <y>` header lines, then
    /// one row per line: `.` grass, `^` hills, `~` water, `*` grass with a
    /// bonus resource.
    pub fn parse(name: &str, text: &str) -> Result<GameMap, MicroCivError> {
        let bad = |line: usize, message: String| MicroCivError::Map {
            name: name.to_string(),
            line,
            message,
        };
        let mut starts: [Option<(i32, i32)>; 2] = [None, None];
        let mut rows: Vec<Vec<Tile>> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("start ") {
                let nums: Vec<i32> = rest
                    .split_whitespace()
                    .map(|t| {
                        t.parse()
                            .map_err(|_| bad(i + 1, format!("bad number `{t}`")))
                    })
                    .collect::<Result<_, _>>()?;
                let [p, x, y] = nums[..] else {
                    return Err(bad(i + 1, "expected `start <player> <x> <y>`".into()));
                };
                let slot = starts
                    .get_mut(p as usize)
                    .ok_or_else(|| bad(i + 1, format!("player {p} out of range")))?;
                *slot = Some((x, y));
                continue;
            }
            let row = line
                .chars()
                .map(|c| match c {
                    '.' => Ok(Tile {
                        terrain: Terrain::Grass,
                        bonus: false,
                    }),
                    '*' => Ok(Tile {
                        terrain: Terrain::Grass,
                        bonus: true,
                    }),
                    '^' => Ok(Tile {
                        terrain: Terrain::Hills,
                        bonus: false,
                    }),
                    '~' => Ok(Tile {
                        terrain: Terrain::Water,
                        bonus: false,
                    }),
                    other => Err(bad(i + 1, format!("unknown tile `{other}`"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(bad(
                        i + 1,
                        format!("row has {} tiles, expected {}", row.len(), first.len()),
                    ));
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(bad(0, "no tile rows".into()));
        }
        let (width, height) = (rows[0].len() as i32, rows.len() as i32);
        let mut out = [(0, 0); 2];
        for (p, s) in starts.iter().enumerate() {
            let (x, y) = s.ok_or_else(|| bad(0, format!("missing start for player {p}")))?;
            out[p] = (x, y);
        }
        let map = GameMap {
            name: name.to_string(),
            width,
            height,
            tiles: rows.into_iter().flatten().collect(),
            starts: out,
        };
        for (p, &(x, y)) in map.starts.iter().enumerate() {
            if !map.tile(x, y).is_some_and(|t| t.is_land()) {
                return Err(bad(
                    0,
                    format!("start of player {p} at {x},{y} is not land"),
                ));
            }
        }
        Ok(map)
    }

    pub fn fixture(name: &str) -> Result<GameMap, MicroCivError> {
        let text = match name {
            "default" => include_str!("../../fixtures/maps/default.map"),
            "twin-continents" => include_str!("../../fixtures/maps/twin-continents.map"),
            "islands" => include_str!("../../fixtures/maps/islands.map"),
            other => return Err(MicroCivError::UnknownFixture(other.to_string())),
        };
        GameMap::parse(name, text)
    }

    /// A shipped fixture by name, or a map file by path.
    pub fn load(name_or_path: &str) -> Result<GameMap, MicroCivError> {
        if FIXTURES.contains(&name_or_path) {
            return GameMap::fixture(name_or_path);
        }
        let path = std::path::Path::new(name_or_path);
        if path.is_file() {
            let text =
                std::fs::read_to_string(path).map_err(|e| MicroCivError::Io(e.to_string()))?;
            let name = path.file_stem().map_or(name_or_path.to_string(), |s| {
                s.to_string_lossy().into_owned()
            });
            return GameMap::parse(&name, &text);
        }
        Err(MicroCivError::UnknownFixture(name_or_path.to_string()))
    }

    pub fn in_bounds(&self, x: i32, y: i32) -> bool {
        x >= 0 && y >= 0 && x < self.width && y < self.height
    }

    pub fn tile(&self, x: i32, y: i32) -> Option<&Tile> {
        self.in_bounds(x, y)
            .then(|| &self.tiles[(y * self.width + x) as usize])
    }

    pub fn is_land(&self, x: i32, y: i32) -> bool {
        self.tile(x, y).is_some_and(Tile::is_land)
    }

    pub fn index(&self, x: i32, y: i32) -> usize {
        (y * self.width + x) as usize
    }

    pub fn land_count(&self) -> usize {
        self.tiles.iter().filter(|t| t.is_land()).count()
    }
}
