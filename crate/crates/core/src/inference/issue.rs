use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::value::Value;

/// Working memory for one task. Created from outside with at least one
/// attribute; afterwards only rule execution changes it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    attributes: BTreeMap<String, Value>,
    history: Vec<(u32, String)>,
}

impl Issue {
    pub fn new(attr: impl Into<String>, value: impl Into<Value>) -> Self {
        let mut attributes = BTreeMap::new();
        attributes.insert(attr.into(), value.into());
        Issue {
            attributes,
            history: Vec::new(),
        }
    }

    /// Returns `None` for an empty map.
    pub fn with_attributes(attributes: BTreeMap<String, Value>) -> Option<Self> {
        (!attributes.is_empty()).then_some(Issue {
            attributes,
            history: Vec::new(),
        })
    }

    /// The issue that starts a game: `StartPlaying = <game>`.
    pub fn start_playing(game: &str) -> Self {
        Issue::new("StartPlaying", game)
    }

    pub fn get(&self, attr: &str) -> Option<&Value> {
        self.attributes.get(attr)
    }

    pub fn attributes(&self) -> &BTreeMap<String, Value> {
        &self.attributes
    }

    /// `(turn, rule id)` for every executed rule, in order.
    pub fn history(&self) -> &[(u32, String)] {
        &self.history
    }

    pub(crate) fn replace_attributes(&mut self, attributes: BTreeMap<String, Value>) {
        self.attributes = attributes;
    }

    pub(crate) fn record(&mut self, turn: u32, ki_id: String) {
        self.history.push((turn, ki_id));
    }
}
