//! Runtime values held in contract storage and passed as call arguments.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::contract::{ElementaryType, TypeName};
use crate::types::{Address, Bytes32};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Value {
    Uint(#[serde(with = "u128_text")] u128),
    Bool(bool),
    Address(Address),
    String(String),
    Bytes32(Bytes32),
    Array {
        elem: ElementaryType,
        items: Vec<Value>,
    },
    Mapping {
        key: ElementaryType,
        value: TypeName,
        #[serde(with = "entries")]
        entries: BTreeMap<MapKey, Value>,
    },
}

/// Elementary value usable as a mapping key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKey {
    Uint(#[serde(with = "u128_text")] u128),
    Bool(bool),
    Address(Address),
    String(String),
    Bytes32(Bytes32),
}

impl Value {
    pub fn default_for(ty: &TypeName) -> Value {
        match ty {
            TypeName::Elementary(e) => Value::default_elementary(*e),
            TypeName::Array(elem) => Value::Array {
                elem: *elem,
                items: Vec::new(),
            },
            TypeName::Mapping { key, value } => Value::Mapping {
                key: *key,
                value: (**value).clone(),
                entries: BTreeMap::new(),
            },
        }
    }

    pub fn default_elementary(e: ElementaryType) -> Value {
        match e {
            ElementaryType::Uint => Value::Uint(0),
            ElementaryType::Bool => Value::Bool(false),
            ElementaryType::Address => Value::Address(Address::default()),
            ElementaryType::String => Value::String(String::new()),
            ElementaryType::Bytes32 => Value::Bytes32(Bytes32::default()),
        }
    }

    pub fn type_name(&self) -> TypeName {
        match self {
            Value::Uint(_) => TypeName::uint(),
            Value::Bool(_) => TypeName::bool(),
            Value::Address(_) => TypeName::address(),
            Value::String(_) => TypeName::string(),
            Value::Bytes32(_) => TypeName::bytes32(),
            Value::Array { elem, .. } => TypeName::Array(*elem),
            Value::Mapping { key, value, .. } => TypeName::Mapping {
                key: *key,
                value: Box::new(value.clone()),
            },
        }
    }

    /// Whether the value may occupy a slot of the given declared type.
    pub fn conforms_to(&self, ty: &TypeName) -> bool {
        match (self, ty) {
            (Value::Array { elem, items }, TypeName::Array(t)) => {
                elem == t && items.iter().all(|v| v.conforms_to(&TypeName::Elementary(*t)))
            }
            (Value::Mapping { key, value, .. }, TypeName::Mapping { key: k, value: v }) => key == k && value == &**v,
            _ => self.type_name() == *ty,
        }
    }

    pub fn as_key(&self) -> Option<MapKey> {
        Some(match self {
            Value::Uint(v) => MapKey::Uint(*v),
            Value::Bool(v) => MapKey::Bool(*v),
            Value::Address(v) => MapKey::Address(*v),
            Value::String(v) => MapKey::String(v.clone()),
            Value::Bytes32(v) => MapKey::Bytes32(*v),
            _ => return None,
        })
    }

    pub fn as_uint(&self) -> Option<u128> {
        match self {
            Value::Uint(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::String(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_bytes32(&self) -> Option<Bytes32> {
        match self {
            Value::Bytes32(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_address(&self) -> Option<Address> {
        match self {
            Value::Address(v) => Some(*v),
            _ => None,
        }
    }

    /// Converts a loosely typed JSON argument into a value of the declared
    /// type. Integers may be given as numbers or decimal strings; addresses
    /// and bytes32 as `0x` hex strings.
    pub fn from_json(json: &Json, ty: &TypeName) -> Result<Value, String> {
        let mismatch = || format!("expected {ty}, got {json}");
        match ty {
            TypeName::Elementary(e) => elementary_from_json(json, *e).ok_or_else(mismatch),
            TypeName::Array(elem) => {
                let items = json
                    .as_array()
                    .ok_or_else(mismatch)?
                    .iter()
                    .map(|j| elementary_from_json(j, *elem).ok_or_else(mismatch))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Value::Array { elem: *elem, items })
            }
            TypeName::Mapping { .. } => Err(format!("mapping arguments are not supported ({ty})")),
        }
    }

    /// Plain JSON view: scalars as JSON scalars, arrays as lists, mappings as
    /// objects keyed by the key's text form.
    pub fn to_json(&self) -> Json {
        match self {
            Value::Uint(v) => {
                if *v <= u64::MAX as u128 {
                    Json::from(*v as u64)
                } else {
                    Json::from(v.to_string())
                }
            }
            Value::Bool(v) => Json::from(*v),
            Value::Address(v) => Json::from(v.to_string()),
            Value::String(v) => Json::from(v.clone()),
            Value::Bytes32(v) => Json::from(v.to_string()),
            Value::Array { items, .. } => Json::Array(items.iter().map(Value::to_json).collect()),
            Value::Mapping { entries, .. } => {
                Json::Object(entries.iter().map(|(k, v)| (k.to_string(), v.to_json())).collect())
            }
        }
    }
}

fn elementary_from_json(json: &Json, e: ElementaryType) -> Option<Value> {
    Some(match e {
        ElementaryType::Uint => match json {
            Json::Number(n) => Value::Uint(n.as_u64()? as u128),
            Json::String(s) => Value::Uint(s.parse().ok()?),
            _ => return None,
        },
        ElementaryType::Bool => Value::Bool(json.as_bool()?),
        ElementaryType::Address => Value::Address(json.as_str()?.parse().ok()?),
        ElementaryType::String => Value::String(json.as_str()?.to_string()),
        ElementaryType::Bytes32 => Value::Bytes32(json.as_str()?.parse().ok()?),
    })
}

impl MapKey {
    pub fn into_value(self) -> Value {
        match self {
            MapKey::Uint(v) => Value::Uint(v),
            MapKey::Bool(v) => Value::Bool(v),
            MapKey::Address(v) => Value::Address(v),
            MapKey::String(v) => Value::String(v),
            MapKey::Bytes32(v) => Value::Bytes32(v),
        }
    }

    pub fn elementary_type(&self) -> ElementaryType {
        match self {
            MapKey::Uint(_) => ElementaryType::Uint,
            MapKey::Bool(_) => ElementaryType::Bool,
            MapKey::Address(_) => ElementaryType::Address,
            MapKey::String(_) => ElementaryType::String,
            MapKey::Bytes32(_) => ElementaryType::Bytes32,
        }
    }
}

impl fmt::Display for MapKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapKey::Uint(v) => write!(f, "{v}"),
            MapKey::Bool(v) => write!(f, "{v}"),
            MapKey::Address(v) => write!(f, "{v}"),
            MapKey::String(v) => f.write_str(v),
            MapKey::Bytes32(v) => write!(f, "{v}"),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

mod u128_text {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

mod entries {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serializer};

    use super::{MapKey, Value};

    pub fn serialize<S: Serializer>(map: &BTreeMap<MapKey, Value>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<MapKey, Value>, D::Error> {
        let pairs: Vec<(MapKey, Value)> = Vec::deserialize(d)?;
        Ok(pairs.into_iter().collect())
    }
}
