use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use regex::Regex;

use crate::wire::{canonicalize, parse_text, ContentValue};

use super::{ContextError, ContextUrn};

/// Format tag accepted on string fields.
pub const DATE_FORMAT: &str = "yyyy-mm-dd";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueKind {
    String,
    Number,
    Integer,
    Boolean,
    Object,
    List,
    /// Reserved for vector-valued fields; validated as a list of numbers.
    Embedding,
}

impl ValueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::String => "string",
            ValueKind::Number => "number",
            ValueKind::Integer => "integer",
            ValueKind::Boolean => "boolean",
            ValueKind::Object => "object",
            ValueKind::List => "list",
            ValueKind::Embedding => "embedding",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "string" => ValueKind::String,
            "number" => ValueKind::Number,
            "integer" => ValueKind::Integer,
            "boolean" => ValueKind::Boolean,
            "object" => ValueKind::Object,
            "list" => ValueKind::List,
            "embedding" => ValueKind::Embedding,
            _ => return None,
        })
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Compiled string pattern; equality is by source text.
#[derive(Debug, Clone)]
pub struct Pattern {
    source: String,
    regex: Regex,
}

impl Pattern {
    pub fn new(source: &str) -> Result<Self, ContextError> {
        let regex = Regex::new(source)
            .map_err(|e| ContextError::InvalidDocument(format!("bad pattern {source:?}: {e}")))?;
        Ok(Pattern {
            source: source.to_string(),
            regex,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn is_match(&self, s: &str) -> bool {
        self.regex.is_match(s)
    }
}

impl PartialEq for Pattern {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Constraints {
    pub enumeration: Option<Vec<String>>,
    pub pattern: Option<Pattern>,
    pub min: Option<ContentValue>,
    pub max: Option<ContentValue>,
    pub date_format: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    pub name: String,
    pub kind: ValueKind,
    pub required: bool,
    pub description: Option<String>,
    pub constraints: Constraints,
}

impl FieldSpec {
    pub fn new(name: impl Into<String>, kind: ValueKind, required: bool) -> Self {
        FieldSpec {
            name: name.into(),
            kind,
            required,
            description: None,
            constraints: Constraints::default(),
        }
    }

    pub fn with_enum<I: IntoIterator<Item = S>, S: Into<String>>(mut self, values: I) -> Self {
        self.constraints.enumeration = Some(values.into_iter().map(Into::into).collect());
        self
    }

    pub fn enumeration(&self) -> Option<&[String]> {
        self.constraints.enumeration.as_deref()
    }

    fn check(&self) -> Result<(), ContextError> {
        let bad = |m: &str| Err(ContextError::InvalidDocument(format!("field {}: {m}", self.name)));
        let c = &self.constraints;
        let stringy = self.kind == ValueKind::String;
        if c.enumeration.is_some() && !stringy {
            return bad("enum only allowed on string fields");
        }
        if c.date_format && !stringy {
            return bad("date format only allowed on string fields");
        }
        if c.pattern.is_some() && !stringy {
            return bad("pattern only allowed on string fields");
        }
        let numeric = matches!(self.kind, ValueKind::Number | ValueKind::Integer);
        if (c.min.is_some() || c.max.is_some()) && !numeric {
            return bad("min/max only allowed on numeric fields");
        }
        if let (Some(lo), Some(hi)) = (
            c.min.as_ref().and_then(ContentValue::as_f64),
            c.max.as_ref().and_then(ContentValue::as_f64),
        ) {
            if lo > hi {
                return bad("min exceeds max");
            }
        }
        if self.name.is_empty() {
            return bad("empty name");
        }
        Ok(())
    }

    fn from_document(v: &ContentValue) -> Result<Self, ContextError> {
        let m = v
            .as_map()
            .ok_or_else(|| ContextError::InvalidDocument("field spec must be an object".into()))?;
        let bad = |m: String| ContextError::InvalidDocument(m);
        let name = m
            .get("name")
            .and_then(ContentValue::as_str)
            .ok_or_else(|| bad("field spec needs a name".into()))?
            .to_string();
        let kind_text = m
            .get("kind")
            .and_then(ContentValue::as_str)
            .ok_or_else(|| bad(format!("field {name} needs a kind")))?;
        let kind = ValueKind::parse(kind_text)
            .ok_or_else(|| bad(format!("field {name}: unknown kind {kind_text}")))?;
        let required = m
            .get("required")
            .and_then(ContentValue::as_bool)
            .ok_or_else(|| bad(format!("field {name} needs required: bool")))?;
        let description = match m.get("description") {
            None => None,
            Some(ContentValue::String(s)) => Some(s.clone()),
            Some(_) => return Err(bad(format!("field {name}: description must be a string"))),
        };
        let enumeration = match m.get("enum") {
            None => None,
            Some(ContentValue::List(items)) => Some(
                items
                    .iter()
                    .map(|i| {
                        i.as_str()
                            .map(String::from)
                            .ok_or_else(|| bad(format!("field {name}: enum values must be strings")))
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            Some(_) => return Err(bad(format!("field {name}: enum must be a list"))),
        };
        let pattern = match m.get("pattern") {
            None => None,
            Some(ContentValue::String(s)) => Some(Pattern::new(s)?),
            Some(_) => return Err(bad(format!("field {name}: pattern must be a string"))),
        };
        let bound = |key: &str| match m.get(key) {
            None => Ok(None),
            Some(v @ (ContentValue::Int(_) | ContentValue::Float(_))) => Ok(Some(v.clone())),
            Some(_) => Err(bad(format!("field {name}: {key} must be a number"))),
        };
        let min = bound("min")?;
        let max = bound("max")?;
        let date_format = match m.get("format") {
            None => false,
            Some(ContentValue::String(s)) if s == DATE_FORMAT => true,
            Some(other) => return Err(bad(format!("field {name}: unknown format {other}"))),
        };
        const KNOWN: [&str; 9] = [
            "name", "kind", "required", "description", "enum", "pattern", "min", "max", "format",
        ];
        if let Some(extra) = m.keys().find(|k| !KNOWN.contains(&k.as_str())) {
            return Err(bad(format!("field {name}: unknown attribute {extra}")));
        }
        let spec = FieldSpec {
            name,
            kind,
            required,
            description,
            constraints: Constraints {
                enumeration,
                pattern,
                min,
                max,
                date_format,
            },
        };
        spec.check()?;
        Ok(spec)
    }

    fn to_document(&self) -> ContentValue {
        let mut m = BTreeMap::new();
        m.insert("name".into(), self.name.as_str().into());
        m.insert("kind".into(), self.kind.as_str().into());
        m.insert("required".into(), self.required.into());
        if let Some(d) = &self.description {
            m.insert("description".into(), d.as_str().into());
        }
        let c = &self.constraints;
        if let Some(e) = &c.enumeration {
            m.insert("enum".into(), ContentValue::list(e.iter().map(|s| s.as_str().into())));
        }
        if let Some(p) = &c.pattern {
            m.insert("pattern".into(), p.source().into());
        }
        if let Some(v) = &c.min {
            m.insert("min".into(), v.clone());
        }
        if let Some(v) = &c.max {
            m.insert("max".into(), v.clone());
        }
        if c.date_format {
            m.insert("format".into(), DATE_FORMAT.into());
        }
        ContentValue::Map(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskDef {
    pub name: String,
    /// Declaration order is significant for grounding.
    pub params: Vec<FieldSpec>,
}

impl TaskDef {
    pub fn param(&self, name: &str) -> Option<&FieldSpec> {
        self.params.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConceptDef {
    pub name: String,
    pub properties: Vec<FieldSpec>,
}

impl ConceptDef {
    pub fn property(&self, name: &str) -> Option<&FieldSpec> {
        self.properties.iter().find(|p| p.name == name)
    }
}

/// Surface string that maps onto enumeration values of a named field.
#[derive(Debug, Clone, PartialEq)]
pub struct Alias {
    pub field: String,
    pub surface: String,
    pub candidates: Vec<String>,
}

/// A versioned, machine-readable schema of tasks, concepts and their fields.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedContext {
    pub urn: ContextUrn,
    pub authority_id: String,
    pub tasks: BTreeMap<String, TaskDef>,
    pub concepts: BTreeMap<String, ConceptDef>,
    pub aliases: Vec<Alias>,
}

impl SharedContext {
    pub fn task(&self, name: &str) -> Option<&TaskDef> {
        self.tasks.get(name)
    }

    pub fn concept(&self, name: &str) -> Option<&ConceptDef> {
        self.concepts.get(name)
    }

    pub fn alias(&self, field: &str, surface: &str) -> Option<&[String]> {
        self.aliases
            .iter()
            .find(|a| a.field == field && a.surface == surface)
            .map(|a| a.candidates.as_slice())
    }

    /// All field specs with this name, across tasks and concepts.
    pub fn fields_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a FieldSpec> + 'a {
        self.tasks
            .values()
            .flat_map(|t| t.params.iter())
            .chain(self.concepts.values().flat_map(|c| c.properties.iter()))
            .filter(move |f| f.name == name)
    }

    /// First task parameter with this name.
    pub fn task_param(&self, name: &str) -> Option<&FieldSpec> {
        self.tasks.values().find_map(|t| t.param(name))
    }

    pub fn check(&self) -> Result<(), ContextError> {
        let bad = |m: String| Err(ContextError::InvalidDocument(m));
        for (name, task) in &self.tasks {
            if self.concepts.contains_key(name) {
                return bad(format!("{name} is both a task and a concept"));
            }
            if &task.name != name {
                return bad(format!("task key {name} does not match name {}", task.name));
            }
            unique_names(&task.params, name)?;
        }
        for (name, concept) in &self.concepts {
            if &concept.name != name {
                return bad(format!("concept key {name} does not match name {}", concept.name));
            }
            if concept.property("concept_type").is_some() {
                return bad(format!("concept {name} redefines concept_type"));
            }
            unique_names(&concept.properties, name)?;
        }
        let mut seen = BTreeSet::new();
        for a in &self.aliases {
            if !seen.insert((a.field.as_str(), a.surface.as_str())) {
                return bad(format!("duplicate alias ({}, {})", a.field, a.surface));
            }
            if a.candidates.is_empty() {
                return bad(format!("alias ({}, {}) has no candidates", a.field, a.surface));
            }
            let mut targets = self.fields_named(&a.field).peekable();
            if targets.peek().is_none() {
                return bad(format!("alias targets unknown field {}", a.field));
            }
            for f in targets {
                let allowed = match f.enumeration() {
                    Some(e) => e,
                    None => return bad(format!("alias target {} has no enumeration", a.field)),
                };
                if let Some(c) = a.candidates.iter().find(|c| !allowed.contains(c)) {
                    return bad(format!("alias candidate {c} outside enumeration of {}", a.field));
                }
            }
        }
        Ok(())
    }

    pub fn from_document(doc: &ContentValue) -> Result<Self, ContextError> {
        let bad = |m: &str| ContextError::InvalidDocument(m.to_string());
        let m = doc.as_map().ok_or_else(|| bad("context document must be an object"))?;
        let urn: ContextUrn = m
            .get("urn")
            .and_then(ContentValue::as_str)
            .ok_or_else(|| bad("missing urn"))?
            .parse()?;
        let authority_id = m
            .get("authority_id")
            .and_then(ContentValue::as_str)
            .ok_or_else(|| bad("missing authority_id"))?
            .to_string();
        let fields = |v: &ContentValue, what: &str| -> Result<Vec<FieldSpec>, ContextError> {
            v.as_list()
                .ok_or_else(|| ContextError::InvalidDocument(format!("{what} must be a list")))?
                .iter()
                .map(FieldSpec::from_document)
                .collect()
        };
        let mut tasks = BTreeMap::new();
        for (name, body) in m.get("tasks").and_then(ContentValue::as_map).ok_or_else(|| bad("missing tasks"))? {
            let params = body.get("params").ok_or_else(|| bad("task needs params"))?;
            tasks.insert(
                name.clone(),
                TaskDef {
                    name: name.clone(),
                    params: fields(params, "params")?,
                },
            );
        }
        let mut concepts = BTreeMap::new();
        for (name, body) in m
            .get("concepts")
            .and_then(ContentValue::as_map)
            .ok_or_else(|| bad("missing concepts"))?
        {
            let props = body.get("properties").ok_or_else(|| bad("concept needs properties"))?;
            concepts.insert(
                name.clone(),
                ConceptDef {
                    name: name.clone(),
                    properties: fields(props, "properties")?,
                },
            );
        }
        let mut aliases = Vec::new();
        for a in m
            .get("aliases")
            .and_then(ContentValue::as_list)
            .ok_or_else(|| bad("missing aliases"))?
        {
            let s = |k: &str| {
                a.get(k)
                    .and_then(ContentValue::as_str)
                    .map(String::from)
                    .ok_or_else(|| ContextError::InvalidDocument(format!("alias needs {k}")))
            };
            let candidates = a
                .get("candidates")
                .and_then(ContentValue::as_list)
                .ok_or_else(|| bad("alias needs candidates"))?
                .iter()
                .map(|c| c.as_str().map(String::from).ok_or_else(|| bad("alias candidates must be strings")))
                .collect::<Result<_, _>>()?;
            aliases.push(Alias {
                field: s("field")?,
                surface: s("surface")?,
                candidates,
            });
        }
        if let Some(extra) = m
            .keys()
            .find(|k| !["urn", "authority_id", "tasks", "concepts", "aliases"].contains(&k.as_str()))
        {
            return Err(ContextError::InvalidDocument(format!("unknown header field {extra}")));
        }
        let ctx = SharedContext {
            urn,
            authority_id,
            tasks,
            concepts,
            aliases,
        };
        ctx.check()?;
        Ok(ctx)
    }

    pub fn to_document(&self) -> ContentValue {
        let field_list = |fs: &[FieldSpec]| ContentValue::list(fs.iter().map(FieldSpec::to_document));
        ContentValue::map([
            ("urn", self.urn.to_string().into()),
            ("authority_id", self.authority_id.as_str().into()),
            (
                "tasks",
                ContentValue::map(
                    self.tasks
                        .iter()
                        .map(|(k, t)| (k.as_str(), ContentValue::map([("params", field_list(&t.params))]))),
                ),
            ),
            (
                "concepts",
                ContentValue::map(self.concepts.iter().map(|(k, c)| {
                    (k.as_str(), ContentValue::map([("properties", field_list(&c.properties))]))
                })),
            ),
            (
                "aliases",
                ContentValue::list(self.aliases.iter().map(|a| {
                    ContentValue::map([
                        ("field", a.field.as_str().into()),
                        ("surface", a.surface.as_str().into()),
                        (
                            "candidates",
                            ContentValue::list(a.candidates.iter().map(|c| c.as_str().into())),
                        ),
                    ])
                })),
            ),
        ])
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ContextError> {
        let doc = parse_text(bytes).map_err(|e| ContextError::InvalidDocument(e.to_string()))?;
        SharedContext::from_document(&doc)
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonicalize(&self.to_document()).expect("context documents hold only finite numbers")
    }
}

fn unique_names(fields: &[FieldSpec], owner: &str) -> Result<(), ContextError> {
    let mut seen = BTreeSet::new();
    for f in fields {
        if !seen.insert(f.name.as_str()) {
            return Err(ContextError::InvalidDocument(format!(
                "{owner} declares {} twice",
                f.name
            )));
        }
    }
    Ok(())
}
