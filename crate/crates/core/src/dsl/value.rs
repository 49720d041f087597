//! Runtime values of the list DSL: integers and lists of integers.

use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use super::DslError;

/// Maximum number of elements a list value may hold.
pub const LIST_CAP: usize = 64;

/// The two runtime types of the DSL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueType {
    Int,
    List,
}

impl ValueType {
    pub fn default_value(self) -> Value {
        match self {
            ValueType::Int => Value::Int(0),
            ValueType::List => Value::List(Vec::new()),
        }
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueType::Int => f.write_str("INT"),
            ValueType::List => f.write_str("LIST"),
        }
    }
}

impl FromStr for ValueType {
    type Err = DslError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "INT" | "int" => Ok(ValueType::Int),
            "LIST" | "list" | "[int]" => Ok(ValueType::List),
            other => Err(DslError::Parse(format!("unknown type `{other}`"))),
        }
    }
}

/// A DSL value. Integers live in the `i32` range and all arithmetic saturates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Int(i32),
    List(Vec<i32>),
}

impl Value {
    pub fn value_type(&self) -> ValueType {
        match self {
            Value::Int(_) => ValueType::Int,
            Value::List(_) => ValueType::List,
        }
    }

    pub fn as_int(&self) -> Option<i32> {
        match self {
            Value::Int(v) => Some(*v),
            Value::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[i32]> {
        match self {
            Value::List(xs) => Some(xs),
            Value::Int(_) => None,
        }
    }

    /// Builds a value from wide integers, saturating each into the `i32` range.
    pub fn list_saturating<I: IntoIterator<Item = i64>>(items: I) -> Result<Value, DslError> {
        let xs: Vec<i32> = items.into_iter().map(saturate).collect();
        if xs.len() > LIST_CAP {
            return Err(DslError::ListTooLong(xs.len()));
        }
        Ok(Value::List(xs))
    }
}

pub(crate) fn saturate(v: i64) -> i32 {
    v.clamp(i32::MIN as i64, i32::MAX as i64) as i32
}

impl From<i32> for Value {
    fn from(v: i32) -> Self {
        Value::Int(v)
    }
}

impl From<Vec<i32>> for Value {
    fn from(v: Vec<i32>) -> Self {
        Value::List(v)
    }
}

impl From<&[i32]> for Value {
    fn from(v: &[i32]) -> Self {
        Value::List(v.to_vec())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::List(xs) => {
                f.write_str("[")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// Parses a decimal integer or a bracketed list such as `[1,-2,3]`.
impl FromStr for Value {
    type Err = DslError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let parse_int = |t: &str| -> Result<i64, DslError> {
            t.trim()
                .parse::<i64>()
                .map_err(|_| DslError::Parse(format!("bad integer `{}`", t.trim())))
        };
        if let Some(body) = s.strip_prefix('[') {
            let body = body
                .strip_suffix(']')
                .ok_or_else(|| DslError::Parse(format!("unterminated list `{s}`")))?;
            if body.trim().is_empty() {
                return Ok(Value::List(Vec::new()));
            }
            let items = body.split(',').map(parse_int).collect::<Result<Vec<_>, _>>()?;
            Value::list_saturating(items)
        } else {
            Ok(Value::Int(saturate(parse_int(s)?)))
        }
    }
}

// Plain JSON encoding: a number for INT, an array of numbers for LIST.
impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Int(v) => serializer.serialize_i32(*v),
            Value::List(xs) => {
                let mut seq = serializer.serialize_seq(Some(xs.len()))?;
                for x in xs {
                    seq.serialize_element(x)?;
                }
                seq.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ValueVisitor;

        impl<'de> Visitor<'de> for ValueVisitor {
            type Value = Value;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an integer or a list of integers")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Value, E> {
                Ok(Value::Int(saturate(v)))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Value, E> {
                Ok(Value::Int(saturate(v.min(i64::MAX as u64) as i64)))
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Value, A::Error> {
                let mut xs = Vec::new();
                while let Some(v) = seq.next_element::<i64>()? {
                    xs.push(v);
                }
                Value::list_saturating(xs).map_err(de::Error::custom)
            }
        }

        deserializer.deserialize_any(ValueVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_round_trip() {
        let v: Value = "[-2, 10,3]".parse().unwrap();
        assert_eq!(v, Value::List(vec![-2, 10, 3]));
        assert_eq!(v.to_string(), "[-2,10,3]");
        assert_eq!("[]".parse::<Value>().unwrap(), Value::List(vec![]));
        assert_eq!("-7".parse::<Value>().unwrap(), Value::Int(-7));
    }

    #[test]
    fn literal_saturates() {
        assert_eq!("99999999999".parse::<Value>().unwrap(), Value::Int(i32::MAX));
        assert_eq!(
            "[-99999999999]".parse::<Value>().unwrap(),
            Value::List(vec![i32::MIN])
        );
    }

    #[test]
    fn rejects_oversized_lists() {
        let text = format!("[{}]", vec!["1"; LIST_CAP + 1].join(","));
        assert!(matches!(text.parse::<Value>(), Err(DslError::ListTooLong(65))));
    }

    #[test]
    fn json_encoding() {
        let v = Value::List(vec![1, 2]);
        assert_eq!(serde_json::to_string(&v).unwrap(), "[1,2]");
        assert_eq!(serde_json::from_str::<Value>("5").unwrap(), Value::Int(5));
        assert_eq!(serde_json::from_str::<Value>("[]").unwrap(), Value::List(vec![]));
        assert!(serde_json::from_str::<Value>("\"x\"").is_err());
    }
}
