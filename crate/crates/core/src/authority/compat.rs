use std::fmt;

use crate::context::{FieldSpec, SharedContext};

use super::AuthorityError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Compatibility {
    Compatible,
    /// Human-readable list of breaking differences.
    Breaking(Vec<String>),
}

impl fmt::Display for Compatibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Compatibility::Compatible => f.write_str("Compatible"),
            Compatibility::Breaking(why) => write!(f, "Breaking({})", why.join("; ")),
        }
    }
}

/// Compatible iff `new` only adds optional fields, tasks, concepts or aliases.
pub fn check_version_compat(old: &SharedContext, new: &SharedContext) -> Result<Compatibility, AuthorityError> {
    if old.urn.domain() != new.urn.domain() {
        return Err(AuthorityError::DomainMismatch(
            old.urn.domain().to_string(),
            new.urn.domain().to_string(),
        ));
    }
    let mut breaks = Vec::new();
    for (name, task) in &old.tasks {
        match new.task(name) {
            Some(t) => diff_fields(&format!("task {name}"), &task.params, &t.params, &mut breaks),
            None => breaks.push(format!("task {name} removed")),
        }
    }
    for (name, concept) in &old.concepts {
        match new.concept(name) {
            Some(c) => diff_fields(&format!("concept {name}"), &concept.properties, &c.properties, &mut breaks),
            None => breaks.push(format!("concept {name} removed")),
        }
    }
    for alias in &old.aliases {
        if new.alias(&alias.field, &alias.surface) != Some(alias.candidates.as_slice()) {
            breaks.push(format!("alias ({}, {}) changed", alias.field, alias.surface));
        }
    }
    Ok(if breaks.is_empty() {
        Compatibility::Compatible
    } else {
        Compatibility::Breaking(breaks)
    })
}

fn diff_fields(owner: &str, old: &[FieldSpec], new: &[FieldSpec], breaks: &mut Vec<String>) {
    for f in old {
        match new.iter().find(|n| n.name == f.name) {
            Some(n) if n == f => {}
            Some(_) => breaks.push(format!("{owner}: field {} redefined", f.name)),
            None => breaks.push(format!("{owner}: field {} removed", f.name)),
        }
    }
    for n in new {
        if n.required && !old.iter().any(|f| f.name == n.name) {
            breaks.push(format!("{owner}: new required field {}", n.name));
        }
    }
}

/// Enforces the lifecycle rule: a release must raise the version, and any
/// breaking change must raise the major version.
pub fn check_release(old: &SharedContext, new: &SharedContext) -> Result<Compatibility, AuthorityError> {
    let compat = check_version_compat(old, new)?;
    if new.urn.version() <= old.urn.version() {
        return Err(AuthorityError::VersionNotRaised(old.urn.clone(), new.urn.clone()));
    }
    if matches!(compat, Compatibility::Breaking(_)) && new.urn.major() == old.urn.major() {
        return Err(AuthorityError::MajorBumpRequired(new.urn.clone()));
    }
    Ok(compat)
}
