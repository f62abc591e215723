use std::sync::atomic::{AtomicU32, Ordering};

use kbrl::graph::{Graph, NodeId};
use kbrl::harness::{load_kb, shipped_pack_dir, SHIPPED_PACKS};
use kbrl::inference::{
    run_episode, EpisodeConfig, EpisodeLimits, HandlerSet, Issue, OutcomeKind, UniformResolver,
};
use kbrl::microciv::{
    self, connector_sync, ontology, parse_replay, replay, state_hash, BuildItem, Command, Dir,
    Focus, GameMap, GameState, MicroCivEnv, Transport, UnitKind,
};
use kbrl::value::Value;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn default_map() -> GameMap {
    GameMap::fixture("default").unwrap()
}

fn temp_file(tag: &str) -> std::path::PathBuf {
    static N: AtomicU32 = AtomicU32::new(0);
    std::env::temp_dir().join(format!(
        "kbrl-{tag}-{}-{}",
        std::process::id(),
        N.fetch_add(1, Ordering::Relaxed)
    ))
}

fn ids(state: &GameState, p: usize, kind: UnitKind) -> Vec<u32> {
    state.players[p]
        .units
        .iter()
        .filter(|u| u.kind == kind)
        .map(|u| u.id)
        .collect()
}

/// The city id the next founding will receive.
fn next_city_id(state: &GameState) -> u32 {
    state.next_id
}

#[test]
fn two_queued_commands_apply_in_order() {
    let mut env = MicroCivEnv::two_seat(default_map(), 3);
    let settler = ids(env.state(), 0, UnitKind::Settler)[0];
    let city = next_city_id(env.state());
    let found = Command::FoundCity { unit: settler }.to_string();
    let build = Command::Build {
        city,
        item: BuildItem::Warrior,
    }
    .to_string();
    env.check("microciv", &found).unwrap();
    // the build only becomes legal once the city exists
    assert!(env.check("microciv", &build).is_err());
    env.dispatch("microciv", &found).unwrap();
    env.dispatch("microciv", &build).unwrap();
    env.advance().unwrap();

    let s = env.state();
    assert_eq!(s.turn, 1);
    let c = s.players[0].city(city).expect("city founded");
    assert_eq!((c.x, c.y), s.map.starts[0]);
    assert_eq!(c.queue, Some(BuildItem::Warrior));
    assert!(s.players[0].unit(settler).is_none());
}

#[test]
fn reversed_order_loses_the_build() {
    let mut env = MicroCivEnv::two_seat(default_map(), 3);
    let settler = ids(env.state(), 0, UnitKind::Settler)[0];
    let city = next_city_id(env.state());
    env.dispatch(
        "microciv",
        &Command::Build {
            city,
            item: BuildItem::Warrior,
        }
        .to_string(),
    )
    .unwrap();
    env.dispatch(
        "microciv",
        &Command::FoundCity { unit: settler }.to_string(),
    )
    .unwrap();
    env.advance().unwrap();
    assert_eq!(env.state().players[0].city(city).unwrap().queue, None);
}

#[test]
fn handler_rejects_foreign_handlers_and_end_turn() {
    let env = MicroCivEnv::new(default_map(), 1);
    assert!(env.check("othergame", "unit 1; press b").is_err());
    assert!(env.check("microciv", "end turn").is_err());
    assert!(env.check("microciv", "unit 1; fly").is_err());
    assert!(env.check("microciv", "unit 1; press b").is_ok());
    assert!(env.check("microciv", "unit 2; press b").is_err());
}

#[test]
fn file_transport_matches_in_process() {
    let path = temp_file("commands");
    let mut by_file =
        MicroCivEnv::new(default_map(), 5).with_transport(Transport::File(path.clone()));
    let mut direct = MicroCivEnv::new(default_map(), 5);
    let cmds = [
        Command::FoundCity { unit: 1 }.to_string(),
        Command::Move {
            unit: 2,
            dir: Dir::E,
        }
        .to_string(),
        Command::ResearchFocus {
            focus: Focus::Science,
        }
        .to_string(),
    ];
    for c in &cmds {
        by_file.dispatch("microciv", c).unwrap();
        direct.dispatch("microciv", c).unwrap();
    }
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(
        written.lines().collect::<Vec<_>>(),
        cmds.iter().map(String::as_str).collect::<Vec<_>>()
    );
    by_file.advance().unwrap();
    direct.advance().unwrap();
    assert_eq!(by_file.state(), direct.state());
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        "",
        "lines are consumed once"
    );
    let _ = std::fs::remove_file(path);
}

#[test]
fn same_seed_same_game() {
    let a = microciv::reset("default", 11).unwrap();
    let b = microciv::reset("default", 11).unwrap();
    assert_eq!(state_hash(&a), state_hash(&b));
    let cmds = [
        Command::FoundCity { unit: 1 },
        Command::EndTurn,
        Command::EndTurn,
    ];
    let (a, ea) = microciv::apply(&a, &cmds);
    let (b, eb) = microciv::apply(&b, &cmds);
    assert!(ea.is_empty() && eb.is_empty());
    assert_eq!(a, b);
    assert_eq!(a.turn, 2);
}

#[test]
fn unknown_fixture_is_an_error() {
    assert!(microciv::reset("atlantis", 0).is_err());
}

fn recorded_episode(seed: u64, turns: u32) -> (MicroCivEnv, kbrl::inference::EpisodeRecord) {
    let dirs: Vec<_> = SHIPPED_PACKS.iter().map(|p| shipped_pack_dir(p)).collect();
    let kb = load_kb(&dirs).unwrap();
    let mut env = MicroCivEnv::new(default_map(), seed).recording(true);
    let rec = run_episode(
        &kb,
        ontology(),
        &mut env,
        &UniformResolver,
        EpisodeConfig {
            limits: EpisodeLimits {
                max_turns: turns,
                ..EpisodeLimits::default()
            },
            seed,
            issue: Issue::start_playing("microciv"),
        },
    )
    .unwrap();
    (env, rec)
}

#[test]
fn replay_reproduces_the_game() {
    let (env, rec) = recorded_episode(21, 40);
    assert_eq!(rec.outcome, OutcomeKind::Truncated);
    let log = env.replay_jsonl();
    let entries = parse_replay(&log).unwrap();
    assert_eq!(entries.len() as u32, env.state().turn);
    assert!(entries.iter().map(|e| e.commands.len()).sum::<usize>() > 0);
    let end = replay(default_map(), 21, true, &entries).unwrap();
    assert_eq!(&end, env.state());
    assert_eq!(
        serde_json::to_string(&end).unwrap(),
        serde_json::to_string(env.state()).unwrap()
    );
}

#[test]
fn tampered_replay_is_detected() {
    let (env, _) = recorded_episode(22, 10);
    let mut entries = env.replay().to_vec();
    entries[5].hash = "0".repeat(64);
    let err = replay(default_map(), 22, true, &entries).unwrap_err();
    assert!(matches!(
        err,
        microciv::MicroCivError::Replay { turn: 5, .. }
    ));

    let mut entries = env.replay().to_vec();
    entries.remove(3);
    assert!(replay(default_map(), 22, true, &entries).is_err());
}

/// Plays `turns` turns of random legal orders for both seats.
fn random_game(seed: u64, turns: u32) -> GameState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = GameState::reset(default_map(), seed);
    for _ in 0..turns {
        if s.is_terminal() {
            break;
        }
        for p in 0..2 {
            for cmd in random_orders(&s, p, &mut rng) {
                let _ = s.apply_command(p, &cmd);
            }
        }
        s.end_turn();
    }
    s
}

fn random_orders(s: &GameState, p: usize, rng: &mut ChaCha8Rng) -> Vec<Command> {
    let mut out = Vec::new();
    for u in &s.players[p].units {
        let mut options = vec![Command::Fortify { unit: u.id }];
        for d in Dir::ALL {
            options.push(Command::Move { unit: u.id, dir: d });
            let (dx, dy) = d.delta();
            options.push(Command::Attack {
                unit: u.id,
                x: u.x + dx,
                y: u.y + dy,
            });
        }
        if u.kind == UnitKind::Settler {
            options.push(Command::FoundCity { unit: u.id });
            options.push(Command::FoundCity { unit: u.id });
        }
        options.retain(|c| s.validate(p, c).is_ok());
        if let Some(c) = options.choose(rng) {
            out.push(c.clone());
        }
    }
    for c in &s.players[p].cities {
        if c.queue.is_none() {
            let item = BuildItem::ALL[rng.gen_range(0..BuildItem::ALL.len())];
            out.push(Command::Build { city: c.id, item });
        }
    }
    if rng.gen_bool(0.1) {
        out.push(Command::ResearchFocus {
            focus: Focus::ALL[rng.gen_range(0..3)],
        });
    }
    out
}

fn int(graph: &Graph, id: &NodeId, attr: &str) -> i64 {
    match graph
        .node(id)
        .unwrap_or_else(|| panic!("{id:?} missing"))
        .get(attr)
    {
        Some(Value::Int(v)) => *v,
        other => panic!("{id:?}.{attr} = {other:?}"),
    }
}

fn text(graph: &Graph, id: &NodeId, attr: &str) -> String {
    match graph.node(id).unwrap().get(attr) {
        Some(Value::Str(v)) => v.to_string(),
        other => panic!("{id:?}.{attr} = {other:?}"),
    }
}

fn check_faithful(s: &GameState, seat: usize, g: &Graph) {
    let me = &s.players[seat];
    let them = &s.players[1 - seat];
    let units = g.nodes().filter(|n| n.entity_type == "Unit").count();
    let cities = g.nodes().filter(|n| n.entity_type == "City").count();
    let seen_units = them.units.iter().filter(|u| me.sees(u.x, u.y)).count();
    let seen_cities = them.cities.iter().filter(|c| me.sees(c.x, c.y)).count();
    assert_eq!(units, me.units.len() + seen_units);
    assert_eq!(cities, me.cities.len() + seen_cities);
    for u in &me.units {
        let id = microciv::connector::unit_id(u.id);
        assert_eq!(int(g, &id, "x"), u.x as i64);
        assert_eq!(int(g, &id, "y"), u.y as i64);
        assert_eq!(int(g, &id, "hp"), u.hp);
        assert_eq!(text(g, &id, "kind"), u.kind.as_str());
        assert_eq!(text(g, &id, "owner"), "me");
        let tile = microciv::connector::tile_id(u.x, u.y);
        assert!(g.has_edge("locatedOn", &id, &tile));
    }
    for c in &me.cities {
        let id = microciv::connector::city_id(c.id);
        assert_eq!(int(g, &id, "pop"), c.pop);
        assert_eq!(int(g, &id, "defenders"), me.defenders(c) as i64);
        assert_eq!(
            text(g, &id, "queue"),
            c.queue.map_or("none", |q| q.as_str())
        );
    }
    for u in them.units.iter().filter(|u| me.sees(u.x, u.y)) {
        let id = microciv::connector::unit_id(u.id);
        assert_eq!(text(g, &id, "owner"), "enemy");
        assert_eq!(
            (int(g, &id, "x"), int(g, &id, "y")),
            (u.x as i64, u.y as i64)
        );
    }
    let tiles = g.nodes().filter(|n| n.entity_type == "Tile").count();
    assert_eq!(tiles, me.explored.iter().filter(|e| **e).count());
    let player = NodeId::new("player-me");
    assert_eq!(int(g, &player, "tech"), me.tech as i64);
    assert_eq!(int(g, &player, "score"), me.score());
    assert_eq!(int(g, &player, "turn"), s.turn as i64);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn connector_agrees_with_state(seed in any::<u64>(), turns in 0u32..60, seat in 0usize..2) {
        let mid = random_game(seed, turns / 2);
        let end = random_game(seed, turns);
        // incremental sync from an earlier state must equal a fresh sync
        let mut incremental = Graph::new(ontology());
        connector_sync(&mid, seat, &mut incremental).unwrap();
        connector_sync(&end, seat, &mut incremental).unwrap();
        let mut fresh = Graph::new(ontology());
        connector_sync(&end, seat, &mut fresh).unwrap();
        check_faithful(&end, seat, &fresh);
        check_faithful(&end, seat, &incremental);
        let a: Vec<_> = fresh.nodes().cloned().collect();
        let b: Vec<_> = incremental.nodes().cloned().collect();
        prop_assert_eq!(a.len(), b.len());
        for n in &a {
            prop_assert_eq!(Some(n), incremental.node(&n.id));
        }
        let ea: Vec<_> = fresh.edges().cloned().collect();
        let eb: Vec<_> = incremental.edges().cloned().collect();
        prop_assert_eq!(ea, eb);
        incremental.validate().unwrap();
    }

    #[test]
    fn land_is_conserved_and_outcomes_exclusive(seed in any::<u64>(), turns in 1u32..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = GameState::reset(default_map(), seed);
        let land = s.map.land_count();
        for _ in 0..turns {
            if s.is_terminal() {
                break;
            }
            for p in 0..2 {
                for cmd in random_orders(&s, p, &mut rng) {
                    let before: [usize; 2] = [s.players[0].cities.len(), s.players[1].cities.len()];
                    let applied = s.apply_command(p, &cmd).is_ok();
                    let after = [s.players[0].cities.len(), s.players[1].cities.len()];
                    match (&cmd, applied) {
                        (Command::FoundCity { .. }, true) => {
                            prop_assert_eq!(after[p], before[p] + 1);
                            prop_assert_eq!(after[1 - p], before[1 - p]);
                        }
                        (Command::Attack { .. }, true) => {
                            prop_assert_eq!(after[p], before[p]);
                            prop_assert!(after[1 - p] + 1 >= before[1 - p] && after[1 - p] <= before[1 - p]);
                        }
                        _ => prop_assert_eq!(after, before),
                    }
                }
            }
            let cities = [s.players[0].cities.len(), s.players[1].cities.len()];
            s.end_turn();
            prop_assert_eq!(cities, [s.players[0].cities.len(), s.players[1].cities.len()]);
            prop_assert_eq!(s.map.land_count(), land);
            for p in 0..2 {
                let o = s.outcome(p);
                let kinds = [OutcomeKind::Won, OutcomeKind::LostRace, OutcomeKind::Destroyed]
                    .iter()
                    .filter(|k| o == Some(**k))
                    .count();
                prop_assert!(kinds <= 1);
                if s.is_terminal() {
                    prop_assert!(o.is_some() || !s.players[p].alive() || s.players.iter().all(|q| !q.alive()));
                }
            }
            if s.outcome(0) == Some(OutcomeKind::Won) {
                prop_assert_ne!(s.outcome(1), Some(OutcomeKind::Won));
            }
        }
    }

    #[test]
    fn command_trace_determines_the_state(seed in any::<u64>(), turns in 1u32..40) {
        prop_assert_eq!(random_game(seed, turns), random_game(seed, turns));
    }
}
