use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A per-turn state description together with the clustering weight of
/// each component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureDef {
    Numeric {
        name: String,
        weight: f64,
    },
    /// Expanded to one column per level.
    Categorical {
        name: String,
        levels: Vec<String>,
        weight: f64,
    },
}

impl FeatureDef {
    pub fn name(&self) -> &str {
        match self {
            FeatureDef::Numeric { name, .. } | FeatureDef::Categorical { name, .. } => name,
        }
    }

    fn width(&self) -> usize {
        match self {
            FeatureDef::Numeric { .. } => 1,
            FeatureDef::Categorical { levels, .. } => levels.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FeatureValue {
    Num(f64),
    Cat(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("missing feature field `{0}`")]
    Missing(String),
    #[error("feature `{0}` has the wrong kind")]
    WrongKind(String),
    #[error("feature `{name}` has unknown level `{level}`")]
    UnknownLevel { name: String, level: String },
    #[error("feature `{0}` is not finite")]
    NotFinite(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<FeatureDef>,
}

impl FeatureSchema {
    pub fn dim(&self) -> usize {
        self.features.iter().map(FeatureDef::width).sum()
    }

    /// Column names after one-hot expansion, e.g. `focus=science`.
    pub fn columns(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.dim());
        for f in &self.features {
            match f {
                FeatureDef::Numeric { name, .. } => out.push(name.clone()),
                FeatureDef::Categorical { name, levels, .. } => {
                    out.extend(levels.iter().map(|l| format!("{name}={l}")));
                }
            }
        }
        out
    }

    pub fn weights(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        for f in &self.features {
            match f {
                FeatureDef::Numeric { weight, .. } => out.push(*weight),
                FeatureDef::Categorical { levels, weight, .. } => {
                    out.extend(std::iter::repeat_n(*weight, levels.len()))
                }
            }
        }
        out
    }
}

/// Lays out `fields` in schema order. Extra fields are ignored.
pub fn build_feature_vector(
    schema: &FeatureSchema,
    fields: &BTreeMap<String, FeatureValue>,
) -> Result<FeatureVector, FeatureError> {
    let mut values = Vec::with_capacity(schema.dim());
    for def in &schema.features {
        let name = def.name();
        let field = fields
            .get(name)
            .ok_or_else(|| FeatureError::Missing(name.to_string()))?;
        match (def, field) {
            (FeatureDef::Numeric { .. }, FeatureValue::Num(x)) => {
                if !x.is_finite() {
                    return Err(FeatureError::NotFinite(name.to_string()));
                }
                values.push(*x);
            }
            (FeatureDef::Categorical { levels, .. }, FeatureValue::Cat(level)) => {
                let hit = levels.iter().position(|l| l == level).ok_or_else(|| {
                    FeatureError::UnknownLevel {
                        name: name.to_string(),
                        level: level.clone(),
                    }
                })?;
                values.extend((0..levels.len()).map(|i| if i == hit { 1.0 } else { 0.0 }));
            }
            _ => return Err(FeatureError::WrongKind(name.to_string())),
        }
    }
    Ok(FeatureVector {
        values,
        weights: schema.weights(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> FeatureSchema {
        FeatureSchema {
            features: vec![
                FeatureDef::Numeric {
                    name: "score".into(),
                    weight: 3.0,
                },
                FeatureDef::Categorical {
                    name: "focus".into(),
                    levels: vec!["science".into(), "production".into(), "growth".into()],
                    weight: 0.5,
                },
                FeatureDef::Numeric {
                    name: "cities".into(),
                    weight: 1.0,
                },
            ],
        }
    }

    fn fields(focus: &str) -> BTreeMap<String, FeatureValue> {
        BTreeMap::from([
            ("score".to_string(), FeatureValue::Num(12.0)),
            ("focus".to_string(), FeatureValue::Cat(focus.into())),
            ("cities".to_string(), FeatureValue::Num(0.0)),
        ])
    }

    #[test]
    fn one_hot_layout() {
        let v = build_feature_vector(&schema(), &fields("production")).unwrap();
        assert_eq!(v.values, vec![12.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(v.weights, vec![3.0, 0.5, 0.5, 0.5, 1.0]);
        assert_eq!(schema().columns()[2], "focus=production");
    }

    #[test]
    fn missing_and_bad_fields() {
        let mut f = fields("science");
        f.remove("cities");
        assert_eq!(
            build_feature_vector(&schema(), &f),
            Err(FeatureError::Missing("cities".into()))
        );
        assert!(matches!(
            build_feature_vector(&schema(), &fields("war")),
            Err(FeatureError::UnknownLevel { .. })
        ));
        let mut f = fields("science");
        f.insert("score".into(), FeatureValue::Cat("x".into()));
        assert_eq!(
            build_feature_vector(&schema(), &f),
            Err(FeatureError::WrongKind("score".into()))
        );
    }
}
