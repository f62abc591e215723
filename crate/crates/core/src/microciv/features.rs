use std::collections::BTreeMap;

use super::state::{Focus, GameState, UnitKind};
use crate::rl::{build_feature_vector, FeatureDef, FeatureSchema, FeatureValue, FeatureVector};

const NUMERIC: [(&str, f64); 16] = [
    ("score", 3.0),
    ("population", 3.0),
    ("tech", 3.0),
    ("science_rate", 1.5),
    ("production_rate", 1.5),
    ("food_rate", 1.5),
    ("gold_rate", 1.5),
    ("science_stock", 1.5),
    ("cities", 1.0),
    ("settlers", 1.0),
    ("warriors", 1.0),
    ("workers", 1.0),
    ("explored", 1.0),
    ("enemy_units_seen", 1.0),
    ("enemy_cities_seen", 1.0),
    ("enemy_tech", 1.0),
];

pub fn schema() -> FeatureSchema {
    let mut features: Vec<FeatureDef> = NUMERIC
        .iter()
        .map(|(name, weight)| FeatureDef::Numeric {
            name: name.to_string(),
            weight: *weight,
        })
        .collect();
    features.push(FeatureDef::Categorical {
        name: "focus".into(),
        levels: Focus::ALL.iter().map(|f| f.as_str().to_string()).collect(),
        weight: 0.5,
    });
    FeatureSchema { features }
}

/// Raw per-turn fields of `seat`'s position, as the player sees it.
pub fn state_fields(state: &GameState, seat: usize) -> BTreeMap<String, FeatureValue> {
    let me = &state.players[seat];
    let them = &state.players[GameState::other(seat)];
    let y = state.total_yield(seat);
    let num = |x: i64| FeatureValue::Num(x as f64);
    let mut f = BTreeMap::new();
    f.insert("score".into(), num(me.score()));
    f.insert("population".into(), num(me.population()));
    f.insert("tech".into(), num(me.tech as i64));
    f.insert("science_rate".into(), num(y.science));
    f.insert("production_rate".into(), num(y.prod));
    f.insert("food_rate".into(), num(y.food));
    f.insert("gold_rate".into(), num(y.gold));
    f.insert("science_stock".into(), num(me.science));
    f.insert("cities".into(), num(me.cities.len() as i64));
    f.insert("settlers".into(), num(me.count(UnitKind::Settler) as i64));
    f.insert("warriors".into(), num(me.count(UnitKind::Warrior) as i64));
    f.insert("workers".into(), num(me.count(UnitKind::Worker) as i64));
    f.insert(
        "explored".into(),
        num(me.explored.iter().filter(|e| **e).count() as i64),
    );
    f.insert(
        "enemy_units_seen".into(),
        num(them.units.iter().filter(|u| me.sees(u.x, u.y)).count() as i64),
    );
    f.insert(
        "enemy_cities_seen".into(),
        num(them.cities.iter().filter(|c| me.sees(c.x, c.y)).count() as i64),
    );
    f.insert("enemy_tech".into(), num(them.tech as i64));
    f.insert("focus".into(), FeatureValue::Cat(me.focus.as_str().into()));
    f
}

pub fn state_features(state: &GameState, seat: usize) -> FeatureVector {
    build_feature_vector(&schema(), &state_fields(state, seat)).expect("fields cover the schema")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microciv::map::GameMap;

    #[test]
    fn fresh_state_vector() {
        let s = GameState::reset(GameMap::fixture("default").unwrap(), 0);
        let v = state_features(&s, 0);
        let cols = schema().columns();
        assert_eq!(v.len(), NUMERIC.len() + Focus::ALL.len());
        assert_eq!(cols.len(), v.len());
        let at = |name: &str| v.values[cols.iter().position(|c| c == name).unwrap()];
        assert_eq!(at("score"), 0.0);
        assert_eq!(at("settlers"), 1.0);
        assert_eq!(at("warriors"), 1.0);
        assert_eq!(at("cities"), 0.0);
        let focus: f64 = cols
            .iter()
            .zip(&v.values)
            .filter(|(c, _)| c.starts_with("focus"))
            .map(|(_, x)| x)
            .sum();
        assert_eq!(focus, 1.0);
        assert_eq!(v.weights, schema().weights());
    }

    #[test]
    fn seats_see_their_own_side() {
        let mut s = GameState::reset(GameMap::fixture("default").unwrap(), 0);
        s.players[1].tech = 3;
        let cols = schema().columns();
        let idx = |name: &str| cols.iter().position(|c| c == name).unwrap();
        assert_eq!(state_features(&s, 0).values[idx("enemy_tech")], 3.0);
        assert_eq!(state_features(&s, 1).values[idx("tech")], 3.0);
    }
}
