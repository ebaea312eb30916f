use std::collections::BTreeMap;
use std::fmt;

/// Tree-structured interchange value carried in envelope `content`.
///
/// Maps are ordered by key (byte order of UTF-8, which is code-point order),
/// so two maps built with different insertion orders are equal and
/// canonicalize identically.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ContentValue {
    #[default]
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    String(String),
    List(Vec<ContentValue>),
    Map(BTreeMap<String, ContentValue>),
}

impl ContentValue {
    pub fn empty_map() -> Self {
        ContentValue::Map(BTreeMap::new())
    }

    /// Builds a map from key/value pairs. Later duplicates overwrite earlier ones.
    pub fn map<K, I>(entries: I) -> Self
    where
        K: Into<String>,
        I: IntoIterator<Item = (K, ContentValue)>,
    {
        ContentValue::Map(entries.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn list<I: IntoIterator<Item = ContentValue>>(items: I) -> Self {
        ContentValue::List(items.into_iter().collect())
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ContentValue::Null => "null",
            ContentValue::Bool(_) => "boolean",
            ContentValue::Int(_) => "integer",
            ContentValue::Float(_) => "number",
            ContentValue::String(_) => "string",
            ContentValue::List(_) => "list",
            ContentValue::Map(_) => "object",
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ContentValue::String(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            ContentValue::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ContentValue::Int(i) => Some(*i as f64),
            ContentValue::Float(f) => Some(*f),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            ContentValue::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[ContentValue]> {
        match self {
            ContentValue::List(l) => Some(l),
            _ => None,
        }
    }

    pub fn as_map(&self) -> Option<&BTreeMap<String, ContentValue>> {
        match self {
            ContentValue::Map(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_map_mut(&mut self) -> Option<&mut BTreeMap<String, ContentValue>> {
        match self {
            ContentValue::Map(m) => Some(m),
            _ => None,
        }
    }

    /// Map field lookup; `None` for non-maps and absent keys.
    pub fn get(&self, key: &str) -> Option<&ContentValue> {
        self.as_map().and_then(|m| m.get(key))
    }

    /// Resolves a dotted path such as `my_flexibility.then_change_text`.
    pub fn get_path(&self, path: &str) -> Option<&ContentValue> {
        path.split('.').try_fold(self, |v, seg| v.get(seg))
    }

    /// Replaces the value at a dotted path, creating intermediate maps.
    /// Returns `false` if a non-map value sits on the path.
    pub fn set_path(&mut self, path: &str, value: ContentValue) -> bool {
        let mut segments: Vec<&str> = path.split('.').collect();
        let last = match segments.pop() {
            Some(l) => l,
            None => return false,
        };
        let mut cur = self;
        for seg in segments {
            let map = match cur.as_map_mut() {
                Some(m) => m,
                None => return false,
            };
            cur = map
                .entry(seg.to_string())
                .or_insert_with(ContentValue::empty_map);
        }
        match cur.as_map_mut() {
            Some(m) => {
                m.insert(last.to_string(), value);
                true
            }
            None => false,
        }
    }

    /// True when every number in the tree is finite.
    pub fn is_finite(&self) -> bool {
        match self {
            ContentValue::Float(f) => f.is_finite(),
            ContentValue::List(l) => l.iter().all(ContentValue::is_finite),
            ContentValue::Map(m) => m.values().all(ContentValue::is_finite),
            _ => true,
        }
    }
}

impl fmt::Display for ContentValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match super::canonical::canonical_string(self) {
            Ok(s) => f.write_str(&s),
            Err(_) => write!(f, "{self:?}"),
        }
    }
}

impl From<&str> for ContentValue {
    fn from(s: &str) -> Self {
        ContentValue::String(s.to_string())
    }
}

impl From<String> for ContentValue {
    fn from(s: String) -> Self {
        ContentValue::String(s)
    }
}

impl From<i64> for ContentValue {
    fn from(i: i64) -> Self {
        ContentValue::Int(i)
    }
}

impl From<f64> for ContentValue {
    fn from(f: f64) -> Self {
        ContentValue::Float(f)
    }
}

impl From<bool> for ContentValue {
    fn from(b: bool) -> Self {
        ContentValue::Bool(b)
    }
}

impl<T: Into<ContentValue>> From<Vec<T>> for ContentValue {
    fn from(v: Vec<T>) -> Self {
        ContentValue::List(v.into_iter().map(Into::into).collect())
    }
}

impl From<BTreeMap<String, ContentValue>> for ContentValue {
    fn from(m: BTreeMap<String, ContentValue>) -> Self {
        ContentValue::Map(m)
    }
}

/// Conversion from parsed JSON. Unsigned integers above `i64::MAX` are rejected.
impl TryFrom<serde_json::Value> for ContentValue {
    type Error = String;

    fn try_from(v: serde_json::Value) -> Result<Self, Self::Error> {
        use serde_json::Value;
        Ok(match v {
            Value::Null => ContentValue::Null,
            Value::Bool(b) => ContentValue::Bool(b),
            Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    ContentValue::Int(i)
                } else if n.is_u64() {
                    return Err(format!("integer {n} exceeds 64-bit signed range"));
                } else {
                    ContentValue::Float(n.as_f64().ok_or_else(|| format!("bad number {n}"))?)
                }
            }
            Value::String(s) => ContentValue::String(s),
            Value::Array(a) => ContentValue::List(
                a.into_iter()
                    .map(ContentValue::try_from)
                    .collect::<Result<_, _>>()?,
            ),
            Value::Object(o) => ContentValue::Map(
                o.into_iter()
                    .map(|(k, v)| Ok((k, ContentValue::try_from(v)?)))
                    .collect::<Result<_, String>>()?,
            ),
        })
    }
}

impl From<&ContentValue> for serde_json::Value {
    fn from(v: &ContentValue) -> Self {
        use serde_json::Value;
        match v {
            ContentValue::Null => Value::Null,
            ContentValue::Bool(b) => Value::Bool(*b),
            ContentValue::Int(i) => Value::from(*i),
            ContentValue::Float(f) => serde_json::Number::from_f64(*f)
                .map(Value::Number)
                .unwrap_or(Value::Null),
            ContentValue::String(s) => Value::String(s.clone()),
            ContentValue::List(l) => Value::Array(l.iter().map(Into::into).collect()),
            ContentValue::Map(m) => {
                Value::Object(m.iter().map(|(k, v)| (k.clone(), v.into())).collect())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_read_and_write() {
        let mut v = ContentValue::map([(
            "my_flexibility",
            ContentValue::map([("then_change_text", "x".into())]),
        )]);
        assert_eq!(
            v.get_path("my_flexibility.then_change_text"),
            Some(&ContentValue::from("x"))
        );
        assert!(v.set_path("my_flexibility.then_change_text", "y".into()));
        assert_eq!(v.get_path("my_flexibility.then_change_text").and_then(|v| v.as_str()), Some("y"));
        assert!(v.set_path("a.b.c", ContentValue::Int(1)));
        assert_eq!(v.get_path("a.b.c"), Some(&ContentValue::Int(1)));
        assert!(!v.set_path("a.b.c.d", ContentValue::Null));
    }

    #[test]
    fn oversized_unsigned_rejected() {
        let j: serde_json::Value = serde_json::from_str("18446744073709551615").unwrap();
        assert!(ContentValue::try_from(j).is_err());
    }
}
