use std::fmt;

use crate::snl::{is_handshake, SnlMessage, CONTROL_CONCEPTS};
use crate::wire::{ContentValue, Envelope};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    L8,
    L9,
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layer::L8 => "L8",
            Layer::L9 => "L9",
        })
    }
}

/// One trace line: `ts | edge | layer | performative | verdicts | summary`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub ts: u64,
    pub edge: String,
    pub layer: Layer,
    pub performative: String,
    pub verdicts: Vec<String>,
    pub summary: String,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdicts = if self.verdicts.is_empty() {
            "-".to_string()
        } else {
            self.verdicts.join(",")
        };
        write!(
            f,
            "{} | {} | {} | {} | {} | {}",
            self.ts, self.edge, self.layer, self.performative, verdicts, self.summary
        )
    }
}

pub fn layer_of(env: &Envelope) -> Layer {
    if is_handshake(&env.content) || control_concept(&env.content).is_some() {
        Layer::L9
    } else {
        Layer::L8
    }
}

fn control_concept(c: &ContentValue) -> Option<&str> {
    c.get("concept")
        .and_then(ContentValue::as_str)
        .filter(|s| CONTROL_CONCEPTS.contains(s))
}

/// Short, deterministic description of an envelope's content.
pub fn summarize(env: &Envelope) -> String {
    let c = &env.content;
    if is_handshake(c) {
        return match SnlMessage::from_content(c) {
            Ok(SnlMessage::Hello(h)) => format!(
                "snl hello [{}]",
                h.supported.iter().map(|u| u.to_string()).collect::<Vec<_>>().join(" ")
            ),
            Ok(SnlMessage::Select(s)) => format!("snl select {}", s.chosen),
            Ok(SnlMessage::Lock(l)) => format!("snl lock {} {}", l.urn, &l.context_hash.to_hex()[..16]),
            Ok(SnlMessage::Abort(a)) => format!("snl abort {}", a.reason),
            Err(_) => "snl malformed".to_string(),
        };
    }
    if let Some(concept) = control_concept(c) {
        let param = c.get("parameter").and_then(ContentValue::as_str).unwrap_or("");
        let detail = match (c.get("value"), c.get("options"), c.get("reason")) {
            (Some(v), _, _) => v.to_string(),
            (_, Some(o), _) => o.to_string(),
            (_, _, Some(r)) => r.to_string(),
            _ => String::new(),
        };
        return format!("{concept} {param} {detail}").trim_end().to_string();
    }
    if let Some(task) = c.get("task").and_then(ContentValue::as_str) {
        let params = c.get("params").map(|p| p.to_string()).unwrap_or_default();
        return format!("task {task} {params}");
    }
    match c.as_map() {
        Some(m) if m.is_empty() => "empty".to_string(),
        Some(m) => m
            .iter()
            .map(|(k, v)| match v.get("concept_type").and_then(ContentValue::as_str) {
                Some(t) => format!("{k}:{t}"),
                None => k.clone(),
            })
            .collect::<Vec<_>>()
            .join(" "),
        None => c.kind_name().to_string(),
    }
}
