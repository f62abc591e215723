//! Scalar and list values shared by the graph, the Issue and rule programs.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// The kinds an ontology attribute may declare.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarKind {
    String,
    Integer,
    Float,
    Boolean,
}

impl fmt::Display for ScalarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScalarKind::String => "string",
            ScalarKind::Integer => "integer",
            ScalarKind::Float => "float",
            ScalarKind::Boolean => "boolean",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Scalar(ScalarKind),
    List(ScalarKind),
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueKind::Scalar(k) => write!(f, "{k}"),
            ValueKind::List(k) => write!(f, "list-of-{k}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<Value>),
}

impl Value {
    pub fn str(s: impl Into<String>) -> Self {
        Value::Str(s.into())
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Bool(_) => "boolean",
            Value::Int(_) => "integer",
            Value::Float(_) => "float",
            Value::Str(_) => "string",
            Value::List(_) => "list",
        }
    }

    fn scalar_kind(&self) -> Option<ScalarKind> {
        match self {
            Value::Bool(_) => Some(ScalarKind::Boolean),
            Value::Int(_) => Some(ScalarKind::Integer),
            Value::Float(_) => Some(ScalarKind::Float),
            Value::Str(_) => Some(ScalarKind::String),
            Value::List(_) => None,
        }
    }

    /// Whether the value is acceptable for an attribute of `kind`.
    /// Integers are accepted where floats are declared.
    pub fn conforms_to(&self, kind: ValueKind) -> bool {
        fn scalar_ok(v: &Value, k: ScalarKind) -> bool {
            match (v.scalar_kind(), k) {
                (Some(ScalarKind::Integer), ScalarKind::Float) => true,
                (Some(have), want) => have == want,
                (None, _) => false,
            }
        }
        match (self, kind) {
            (Value::List(_), ValueKind::Scalar(_)) => false,
            (v, ValueKind::Scalar(k)) => scalar_ok(v, k),
            (Value::List(items), ValueKind::List(k)) => items.iter().all(|i| scalar_ok(i, k)),
            (_, ValueKind::List(_)) => false,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    /// Ordering between values of compatible kinds; `None` when the kinds
    /// cannot be compared (string vs integer, list vs scalar, ...).
    pub fn compare(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
            (Value::Bool(a), Value::Bool(b)) => Some(a.cmp(b)),
            (Value::Str(a), Value::Str(b)) => Some(a.cmp(b)),
            (Value::List(a), Value::List(b)) => {
                for (x, y) in a.iter().zip(b) {
                    match x.compare(y)? {
                        Ordering::Equal => continue,
                        o => return Some(o),
                    }
                }
                Some(a.len().cmp(&b.len()))
            }
            (a, b) => match (a.as_f64(), b.as_f64()) {
                (Some(x), Some(y)) => x.partial_cmp(&y),
                _ => None,
            },
        }
    }

    /// Text used when a value is interpolated into a command template.
    pub fn render(&self) -> String {
        match self {
            Value::Str(s) => s.clone(),
            Value::List(items) => items
                .iter()
                .map(Value::render)
                .collect::<Vec<_>>()
                .join(","),
            other => other.to_string(),
        }
    }
}

/// Literal syntax, as used by the rule printer.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => {
                if x.is_finite() && x.fract() == 0.0 && x.abs() < 1e15 {
                    write!(f, "{x:.1}")
                } else {
                    write!(f, "{x:?}")
                }
            }
            Value::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        '$' => f.write_str("\\$")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Value::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Str(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Str(v)
    }
}

/// Comparison operators shared by graph queries and rule conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    In,
}

impl CmpOp {
    pub const ALL: [CmpOp; 7] = [
        CmpOp::Eq,
        CmpOp::Ne,
        CmpOp::Lt,
        CmpOp::Le,
        CmpOp::Gt,
        CmpOp::Ge,
        CmpOp::In,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::In => "in",
        }
    }

    /// `None` when the operands have incompatible kinds.
    pub fn eval(self, lhs: &Value, rhs: &Value) -> Option<bool> {
        if self == CmpOp::In {
            let Value::List(items) = rhs else { return None };
            let mut found = false;
            for item in items {
                if lhs.compare(item)? == Ordering::Equal {
                    found = true;
                }
            }
            return Some(found);
        }
        let ord = lhs.compare(rhs)?;
        Some(match self {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
            CmpOp::In => unreachable!(),
        })
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn int_conforms_to_float() {
        assert!(Value::Int(3).conforms_to(ValueKind::Scalar(ScalarKind::Float)));
        assert!(!Value::Float(3.0).conforms_to(ValueKind::Scalar(ScalarKind::Integer)));
        assert!(!Value::str("3").conforms_to(ValueKind::Scalar(ScalarKind::Integer)));
    }

    #[test]
    fn list_kinds_are_homogeneous() {
        let l = Value::List(vec![Value::Int(1), Value::Int(2)]);
        assert!(l.conforms_to(ValueKind::List(ScalarKind::Integer)));
        let mixed = Value::List(vec![Value::Int(1), Value::str("a")]);
        assert!(!mixed.conforms_to(ValueKind::List(ScalarKind::Integer)));
    }

    #[test]
    fn mixed_numeric_comparison() {
        assert_eq!(
            Value::Int(2).compare(&Value::Float(2.5)),
            Some(Ordering::Less)
        );
        assert_eq!(Value::Int(2).compare(&Value::str("2")), None);
    }

    #[test]
    fn membership_and_kind_errors() {
        let l = Value::List(vec![Value::Int(1), Value::Int(4)]);
        assert_eq!(CmpOp::In.eval(&Value::Int(4), &l), Some(true));
        assert_eq!(CmpOp::In.eval(&Value::Int(5), &l), Some(false));
        assert_eq!(CmpOp::In.eval(&Value::Int(5), &Value::Int(5)), None);
        assert_eq!(CmpOp::Eq.eval(&Value::str("a"), &Value::Int(1)), None);
        assert_eq!(
            CmpOp::Le.eval(&Value::Int(1), &Value::Float(1.0)),
            Some(true)
        );
    }

    #[test]
    fn json_keeps_int_and_float_apart() {
        let v: Vec<Value> = serde_json::from_str("[1, 1.0, \"a\", true, [2]]").unwrap();
        assert_eq!(
            v,
            vec![
                Value::Int(1),
                Value::Float(1.0),
                Value::str("a"),
                Value::Bool(true),
                Value::List(vec![Value::Int(2)])
            ]
        );
        assert_eq!(serde_json::to_string(&Value::Float(1.0)).unwrap(), "1.0");
    }
}
