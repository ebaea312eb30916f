use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDate;

use crate::wire::ContentValue;

use super::schema::{FieldSpec, SharedContext, TaskDef, ValueKind};

/// Key that tags each top-level entry of coordinative content with its concept.
pub const CONCEPT_TYPE: &str = "concept_type";

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationReason {
    UnknownConcept(String),
    MissingConceptType,
    MissingRequiredField(String),
    KindMismatch { expected: ValueKind, found: &'static str },
    ConstraintViolation(String),
    UnknownField(String),
}

impl fmt::Display for ViolationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationReason::UnknownConcept(c) => write!(f, "UnknownConcept({c})"),
            ViolationReason::MissingConceptType => f.write_str("MissingConceptType"),
            ViolationReason::MissingRequiredField(n) => write!(f, "MissingRequiredField({n})"),
            ViolationReason::KindMismatch { expected, found } => {
                write!(f, "KindMismatch(expected {expected}, found {found})")
            }
            ViolationReason::ConstraintViolation(m) => write!(f, "ConstraintViolation({m})"),
            ViolationReason::UnknownField(n) => write!(f, "UnknownField({n})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub reason: ViolationReason,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.reason)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, path: impl Into<String>, reason: ViolationReason) {
        self.violations.push(Violation {
            path: path.into(),
            reason,
        });
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }

    pub fn to_content(&self) -> ContentValue {
        ContentValue::list(self.violations.iter().map(|v| {
            ContentValue::map([
                ("path", v.path.as_str().into()),
                ("reason", v.reason.to_string().into()),
            ])
        }))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return f.write_str("Valid");
        }
        f.write_str("Invalid(")?;
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

/// Validates coordinative content: every top-level entry must be an object whose
/// `concept_type` names a defined concept and whose other fields satisfy it.
pub fn validate_content(ctx: &SharedContext, content: &ContentValue) -> ValidationReport {
    let mut report = ValidationReport::default();
    let map = match content.as_map() {
        Some(m) => m,
        None => {
            report.push(
                "",
                ViolationReason::KindMismatch {
                    expected: ValueKind::Object,
                    found: content.kind_name(),
                },
            );
            return report;
        }
    };
    for (key, entry) in map {
        let concept_type = match entry.get(CONCEPT_TYPE) {
            None => {
                report.push(key.as_str(), ViolationReason::MissingConceptType);
                continue;
            }
            Some(ContentValue::String(s)) => s,
            Some(other) => {
                report.push(
                    join(key, CONCEPT_TYPE),
                    ViolationReason::KindMismatch {
                        expected: ValueKind::String,
                        found: other.kind_name(),
                    },
                );
                continue;
            }
        };
        match ctx.concept(concept_type) {
            Some(def) => validate_fields(
                &def.properties,
                entry.as_map().expect("has concept_type, so is a map"),
                key,
                &[CONCEPT_TYPE],
                &mut report,
            ),
            None => report.push(key.as_str(), ViolationReason::UnknownConcept(concept_type.clone())),
        }
    }
    report
}

/// Validates a parameter map against a task definition.
pub fn validate_task_params(task: &TaskDef, params: &ContentValue, path: &str) -> ValidationReport {
    let mut report = ValidationReport::default();
    match params.as_map() {
        Some(m) => validate_fields(&task.params, m, path, &[], &mut report),
        None => report.push(
            path,
            ViolationReason::KindMismatch {
                expected: ValueKind::Object,
                found: params.kind_name(),
            },
        ),
    }
    report
}

/// Validates an object whose keys are exactly the given fields (plus `ignore`).
pub fn validate_object(
    fields: &[FieldSpec],
    value: &ContentValue,
    path: &str,
    ignore: &[&str],
) -> ValidationReport {
    let mut report = ValidationReport::default();
    match value.as_map() {
        Some(m) => validate_fields(fields, m, path, ignore, &mut report),
        None => report.push(
            path,
            ViolationReason::KindMismatch {
                expected: ValueKind::Object,
                found: value.kind_name(),
            },
        ),
    }
    report
}

fn validate_fields(
    fields: &[FieldSpec],
    map: &BTreeMap<String, ContentValue>,
    path: &str,
    ignore: &[&str],
    report: &mut ValidationReport,
) {
    for spec in fields {
        match map.get(&spec.name) {
            Some(v) => check_value(spec, v, &join(path, &spec.name), report),
            None if spec.required => report.push(
                join(path, &spec.name),
                ViolationReason::MissingRequiredField(spec.name.clone()),
            ),
            None => {}
        }
    }
    for key in map.keys() {
        if ignore.contains(&key.as_str()) || fields.iter().any(|f| &f.name == key) {
            continue;
        }
        report.push(join(path, key), ViolationReason::UnknownField(key.clone()));
    }
}

pub(crate) fn check_value(spec: &FieldSpec, v: &ContentValue, path: &str, report: &mut ValidationReport) {
    let kind_ok = match spec.kind {
        ValueKind::String => matches!(v, ContentValue::String(_)),
        ValueKind::Number => matches!(v, ContentValue::Int(_) | ContentValue::Float(_)),
        ValueKind::Integer => matches!(v, ContentValue::Int(_)),
        ValueKind::Boolean => matches!(v, ContentValue::Bool(_)),
        ValueKind::Object => matches!(v, ContentValue::Map(_)),
        ValueKind::List => matches!(v, ContentValue::List(_)),
        ValueKind::Embedding => v
            .as_list()
            .is_some_and(|l| l.iter().all(|x| x.as_f64().is_some())),
    };
    if !kind_ok {
        report.push(
            path,
            ViolationReason::KindMismatch {
                expected: spec.kind,
                found: v.kind_name(),
            },
        );
        return;
    }
    let c = &spec.constraints;
    if let Some(s) = v.as_str() {
        if let Some(allowed) = &c.enumeration {
            if !allowed.iter().any(|a| a == s) {
                report.push(
                    path,
                    ViolationReason::ConstraintViolation(format!("{s:?} not in enumeration")),
                );
            }
        }
        if let Some(p) = &c.pattern {
            if !p.is_match(s) {
                report.push(
                    path,
                    ViolationReason::ConstraintViolation(format!("{s:?} does not match {}", p.source())),
                );
            }
        }
        if c.date_format && !is_date(s) {
            report.push(
                path,
                ViolationReason::ConstraintViolation(format!("{s:?} is not a yyyy-mm-dd date")),
            );
        }
    }
    if let Some(x) = v.as_f64() {
        if let Some(lo) = c.min.as_ref().and_then(ContentValue::as_f64) {
            if x < lo {
                report.push(path, ViolationReason::ConstraintViolation(format!("{x} below minimum {lo}")));
            }
        }
        if let Some(hi) = c.max.as_ref().and_then(ContentValue::as_f64) {
            if x > hi {
                report.push(path, ViolationReason::ConstraintViolation(format!("{x} above maximum {hi}")));
            }
        }
    }
}

/// Strict `yyyy-mm-dd` calendar date.
pub fn is_date(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() == 10
        && b[4] == b'-'
        && b[7] == b'-'
        && b.iter()
            .enumerate()
            .all(|(i, c)| i == 4 || i == 7 || c.is_ascii_digit())
        && NaiveDate::parse_from_str(s, "%Y-%m-%d").is_ok()
}
