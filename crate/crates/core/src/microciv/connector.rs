//! Mirrors what one player can see into the semantic network.
//!
//! Besides raw state, unit nodes carry a few precomputed hints (best city
//! site, nearest visible foe, the city most in need of a guard, the
//! nearest unexplored frontier) so rules can stay declarative.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, OnceLock};

use super::opponent::{approach_tile, best_site_in};
use super::state::{cheb, GameState, UnitKind, SIGHT};
use crate::graph::{
    load_ontology, Graph, GraphError, NodeId, Ontology, SemanticEdge, SemanticNode,
};
use crate::value::Value;

pub const ONTOLOGY_TTL: &str = include_str!("../../fixtures/microciv.ttl");

/// Furthest a settler looks for a city site.
pub const SITE_RANGE: u32 = 10;

pub fn ontology() -> Arc<Ontology> {
    static ONT: OnceLock<Arc<Ontology>> = OnceLock::new();
    ONT.get_or_init(|| Arc::new(load_ontology(ONTOLOGY_TTL).expect("shipped ontology parses")))
        .clone()
}

pub fn tile_id(x: i32, y: i32) -> NodeId {
    NodeId(format!("tile-{x}-{y}"))
}

pub fn unit_id(id: u32) -> NodeId {
    NodeId(format!("unit-{id}"))
}

pub fn city_id(id: u32) -> NodeId {
    NodeId(format!("city-{id}"))
}

/// Nodes and edges describing `seat`'s view of the state.
pub fn view(state: &GameState, seat: usize) -> (Vec<SemanticNode>, BTreeSet<SemanticEdge>) {
    let o = GameState::other(seat);
    let me = &state.players[seat];
    let them = &state.players[o];
    let map = &state.map;
    let mut nodes = Vec::new();
    let mut edges = BTreeSet::new();

    let mask = state.passable_mask(seat);
    let ranks = state.site_ranks(seat);
    let visible_units: Vec<_> = them.units.iter().filter(|u| me.sees(u.x, u.y)).collect();
    let visible_cities: Vec<_> = them.cities.iter().filter(|c| me.sees(c.x, c.y)).collect();

    let settler_ids: Vec<Value> = me
        .units
        .iter()
        .filter(|u| u.kind == UnitKind::Settler)
        .map(|u| Value::Int(u.id as i64))
        .collect();
    nodes.push(
        SemanticNode::new("player-me", "Player")
            .with("owner", "me")
            .with("turn", state.turn as i64)
            .with("tech", me.tech as i64)
            .with("science", me.science)
            .with("score", me.score())
            .with("pop", me.population())
            .with("focus", me.focus.as_str())
            .with("focus_locked", state.turn < me.focus_locked_until)
            .with("cities", me.cities.len() as i64)
            .with("settlers", me.count(UnitKind::Settler) as i64)
            .with("warriors", me.count(UnitKind::Warrior) as i64)
            .with("workers", me.count(UnitKind::Worker) as i64)
            .with("settler_ids", Value::List(settler_ids))
            .with("enemy_cities", visible_cities.len() as i64)
            .with(
                "enemy_warriors",
                visible_units
                    .iter()
                    .filter(|u| u.kind == UnitKind::Warrior)
                    .count() as i64,
            ),
    );
    nodes.push(
        SemanticNode::new("player-enemy", "Player")
            .with("owner", "enemy")
            .with("tech", them.tech as i64)
            .with("score", them.score()),
    );

    for y in 0..map.height {
        for x in 0..map.width {
            let i = map.index(x, y);
            if !me.explored[i] {
                continue;
            }
            let t = map.tiles[i];
            let rank = ranks[i];
            nodes.push(
                SemanticNode::new(tile_id(x, y).0, "Tile")
                    .with("x", x as i64)
                    .with("y", y as i64)
                    .with("terrain", t.terrain.as_str())
                    .with("food", t.food())
                    .with("prod", t.prod())
                    .with("bonus", t.bonus)
                    .with("site_rank", rank)
                    .with("site_ok", rank > 0),
            );
        }
    }

    let capital = me.cities.iter().map(|c| c.id).min();
    for c in &me.cities {
        let y = state.city_yield(seat, c);
        let threatened = visible_units
            .iter()
            .any(|u| u.kind == UnitKind::Warrior && cheb(u.x, u.y, c.x, c.y) <= SIGHT);
        nodes.push(
            SemanticNode::new(city_id(c.id).0, "City")
                .with("id", c.id as i64)
                .with("owner", "me")
                .with("x", c.x as i64)
                .with("y", c.y as i64)
                .with("pop", c.pop)
                .with("food", y.food - 2 * c.pop)
                .with("prod", y.prod)
                .with("queue", c.queue.map_or("none", |q| q.as_str()))
                .with("walls", c.walls)
                .with("library", c.library)
                .with("granary", c.granary)
                .with("defenders", me.defenders(c) as i64)
                .with(
                    "workers_near",
                    me.units
                        .iter()
                        .filter(|u| u.kind == UnitKind::Worker && cheb(u.x, u.y, c.x, c.y) <= 1)
                        .count() as i64,
                )
                .with("threatened", threatened)
                .with("can_settle", c.pop >= 2)
                .with("capital", Some(c.id) == capital),
        );
        edges.insert(SemanticEdge::new(
            "builtOn",
            city_id(c.id),
            tile_id(c.x, c.y),
        ));
    }
    for c in &visible_cities {
        nodes.push(
            SemanticNode::new(city_id(c.id).0, "City")
                .with("id", c.id as i64)
                .with("owner", "enemy")
                .with("x", c.x as i64)
                .with("y", c.y as i64)
                .with("pop", c.pop)
                .with("walls", c.walls)
                .with("defenders", them.defenders(c) as i64),
        );
        edges.insert(SemanticEdge::new(
            "builtOn",
            city_id(c.id),
            tile_id(c.x, c.y),
        ));
    }

    for u in &me.units {
        let dist = state.distances_in(&mask, u.x, u.y);
        let here = (u.x as i64, u.y as i64);
        let site = best_site_in(state, seat, &dist, &ranks, SITE_RANGE, true);
        let near = nearest_site(state, seat, &dist, &ranks);
        // nearest visible city, else nearest visible unit
        let foe = visible_cities
            .iter()
            .filter_map(|c| approach_tile(state, seat, &dist, c.x, c.y).map(|a| (a.2, c.x, c.y, a)))
            .min_by_key(|f| (f.0, f.2, f.1))
            .or_else(|| {
                visible_units
                    .iter()
                    .filter_map(|e| {
                        approach_tile(state, seat, &dist, e.x, e.y).map(|a| (a.2, e.x, e.y, a))
                    })
                    .min_by_key(|f| (f.0, f.2, f.1))
            });
        let beatable = foe.is_some_and(|(_, fx, fy, _)| match state.best_defender(o, fx, fy) {
            Some((_, d)) => u.hp > d,
            None => u.hp > state.militia(o, fx, fy),
        });
        let post = me
            .cities
            .iter()
            .filter(|c| me.defenders(c) == 0 || (c.x, c.y) == (u.x, u.y))
            .filter_map(|c| dist[map.index(c.x, c.y)].map(|d| (d, c.id, c.x, c.y)))
            .min()
            .or_else(|| {
                me.cities
                    .iter()
                    .filter_map(|c| dist[map.index(c.x, c.y)].map(|d| (d, c.id, c.x, c.y)))
                    .min()
            });
        let frontier = frontier(state, seat, &dist);
        let in_city = me.city_at(u.x, u.y).is_some();
        let xyd = |v: Option<(i32, i32, u32)>| {
            v.map_or((here.0, here.1, -1), |(x, y, d)| {
                (x as i64, y as i64, d as i64)
            })
        };
        let (tx, ty, td) = xyd(site);
        let (nx, ny, nd) = xyd(near);
        let (fx, fy, fd) = foe.map_or((here.0, here.1, -1), |(d, x, y, _)| {
            (x as i64, y as i64, d as i64 + 1)
        });
        let (ax, ay) = foe.map_or(here, |(_, _, _, a)| (a.0 as i64, a.1 as i64));
        let (px, py, pd) = post.map_or((here.0, here.1, -1), |(d, _, x, y)| {
            (x as i64, y as i64, d as i64)
        });
        let (ex, ey, ed) = xyd(frontier);
        nodes.push(
            SemanticNode::new(unit_id(u.id).0, "Unit")
                .with("id", u.id as i64)
                .with("owner", "me")
                .with("kind", u.kind.as_str())
                .with("x", here.0)
                .with("y", here.1)
                .with("hp", u.hp)
                .with("idle", u.idle())
                .with("moves", if u.moved { 0 } else { 1 })
                .with("fortified", u.fortified)
                .with("in_city", in_city)
                .with("site_ok", state.site_ok(seat, u.x, u.y))
                .with("target_x", tx)
                .with("target_y", ty)
                .with("target_dist", td)
                .with("near_x", nx)
                .with("near_y", ny)
                .with("near_dist", nd)
                .with("foe_x", fx)
                .with("foe_y", fy)
                .with("foe_dist", fd)
                .with("foe_beatable", beatable)
                .with("approach_x", ax)
                .with("approach_y", ay)
                .with("post_x", px)
                .with("post_y", py)
                .with("post_dist", pd)
                .with("explore_x", ex)
                .with("explore_y", ey)
                .with("explore_dist", ed),
        );
        edges.insert(SemanticEdge::new(
            "locatedOn",
            unit_id(u.id),
            tile_id(u.x, u.y),
        ));
        if let Some(c) = me.city_at(u.x, u.y) {
            if u.kind == UnitKind::Warrior {
                edges.insert(SemanticEdge::new("guards", unit_id(u.id), city_id(c.id)));
            }
        }
        if u.kind == UnitKind::Warrior {
            for e in &visible_units {
                if cheb(u.x, u.y, e.x, e.y) == 1 {
                    edges.insert(SemanticEdge::new("engages", unit_id(u.id), unit_id(e.id)));
                }
            }
        }
    }
    for e in &visible_units {
        nodes.push(
            SemanticNode::new(unit_id(e.id).0, "Unit")
                .with("id", e.id as i64)
                .with("owner", "enemy")
                .with("kind", e.kind.as_str())
                .with("x", e.x as i64)
                .with("y", e.y as i64)
                .with("hp", e.hp),
        );
        edges.insert(SemanticEdge::new(
            "locatedOn",
            unit_id(e.id),
            tile_id(e.x, e.y),
        ));
        if e.kind == UnitKind::Warrior {
            for c in &me.cities {
                if cheb(e.x, e.y, c.x, c.y) <= SIGHT {
                    edges.insert(SemanticEdge::new("threatens", unit_id(e.id), city_id(c.id)));
                }
            }
        }
    }
    (nodes, edges)
}

/// Closest explored legal site, ties to the higher rank, then tile index.
fn nearest_site(
    state: &GameState,
    seat: usize,
    dist: &[Option<u32>],
    ranks: &[i64],
) -> Option<(i32, i32, u32)> {
    let w = state.map.width;
    dist.iter()
        .enumerate()
        .filter(|(i, d)| d.is_some_and(|d| d <= SITE_RANGE) && state.players[seat].explored[*i])
        .filter_map(|(i, d)| {
            let r = ranks[i];
            (r > 0).then(|| (d.expect("filtered"), -r, i))
        })
        .min()
        .map(|(d, _, i)| (i as i32 % w, i as i32 / w, d))
}

/// Closest reachable explored tile bordering an unexplored one.
fn frontier(state: &GameState, seat: usize, dist: &[Option<u32>]) -> Option<(i32, i32, u32)> {
    let map = &state.map;
    let explored = &state.players[seat].explored;
    let mut best: Option<(u32, usize)> = None;
    for (i, d) in dist.iter().enumerate() {
        let Some(d) = *d else { continue };
        let (x, y) = (i as i32 % map.width, i as i32 / map.width);
        let borders = (-1..=1).any(|dy| {
            (-1..=1).any(|dx| map.in_bounds(x + dx, y + dy) && !explored[map.index(x + dx, y + dy)])
        });
        if borders && best.is_none_or(|b| (d, i) < b) {
            best = Some((d, i));
        }
    }
    best.map(|(d, i)| (i as i32 % map.width, i as i32 / map.width, d))
}

/// Brings `graph` in line with `seat`'s view, touching only what changed.
pub fn connector_sync(state: &GameState, seat: usize, graph: &mut Graph) -> Result<(), GraphError> {
    let (nodes, edges) = view(state, seat);
    let keep: BTreeSet<NodeId> = nodes.iter().map(|n| n.id.clone()).collect();
    let stale: Vec<NodeId> = graph
        .nodes()
        .map(|n| n.id.clone())
        .filter(|id| !keep.contains(id))
        .collect();
    for id in stale {
        graph.remove_node(&id);
    }
    let stale_edges: Vec<SemanticEdge> = graph
        .edges()
        .filter(|e| !edges.contains(e))
        .cloned()
        .collect();
    for e in &stale_edges {
        graph.remove_edge(e);
    }
    for n in nodes {
        if graph.node(&n.id) != Some(&n) {
            graph.upsert_node(n)?;
        }
    }
    for e in edges {
        if !graph.has_edge(&e.verb, &e.from, &e.to) {
            graph.add_edge(e)?;
        }
    }
    Ok(())
}

/// Node counts by entity type, for quick inspection.
pub fn census(graph: &Graph) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for n in graph.nodes() {
        *out.entry(n.entity_type.clone()).or_insert(0) += 1;
    }
    out
}
