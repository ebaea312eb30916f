use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::context::{
    validate_content, validate_object, validate_task_params, ContextHash, ContextUrn, SharedContext,
    ValidationReport, ViolationReason, CONCEPT_TYPE,
};
use crate::fixtures;
use crate::wire::{ContentValue, Envelope, Performative};

use super::session::SemanticSession;
use super::{SnlError, SEMANTIC_REJECTION};

/// SNL control concepts, validated against the built-in meta-schema.
pub const CONTROL_CONCEPTS: [&str; 3] = [
    super::AMBIGUOUS_PARAMETER,
    super::PARAMETER_OPTIONS,
    SEMANTIC_REJECTION,
];

pub fn meta_context() -> &'static SharedContext {
    static META: OnceLock<SharedContext> = OnceLock::new();
    META.get_or_init(fixtures::snl_meta_v1_0)
}

/// What to do with semantically invalid inbound content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Disposition {
    /// Answer with a REFUSE carrying the report, when a REFUSE is legal.
    #[default]
    Reject,
    /// Ask once which value was meant, then reject.
    Disambiguate,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MessageKind {
    Control(String),
    Task {
        task: String,
        params: BTreeMap<String, ContentValue>,
    },
    /// entry key → concept type
    Coordinative(BTreeMap<String, String>),
}

/// Content that passed validation, handed on to the firewall and agent logic.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedMessage {
    pub envelope: Envelope,
    pub urn: ContextUrn,
    pub context_hash: ContextHash,
    pub kind: MessageKind,
}

impl ValidatedMessage {
    /// Concept names the message uses; task REQUESTs report their task name.
    pub fn concepts(&self) -> Vec<&str> {
        match &self.kind {
            MessageKind::Control(c) => vec![c.as_str()],
            MessageKind::Task { task, .. } => vec![task.as_str()],
            MessageKind::Coordinative(m) => {
                let mut v: Vec<&str> = m.values().map(String::as_str).collect();
                v.dedup();
                v
            }
        }
    }

    pub fn content(&self) -> &ContentValue {
        &self.envelope.content
    }
}

fn control_concept(content: &ContentValue) -> Option<&str> {
    content
        .get("concept")
        .and_then(ContentValue::as_str)
        .filter(|c| CONTROL_CONCEPTS.contains(c))
}

/// Classifies and validates content against a context, without session state.
pub fn validate_against(
    ctx: &SharedContext,
    performative: Performative,
    content: &ContentValue,
) -> Result<MessageKind, ValidationReport> {
    let (kind, report) = if let Some(concept) = control_concept(content) {
        let def = meta_context().concept(concept).expect("meta-schema defines every control concept");
        (
            MessageKind::Control(concept.to_string()),
            validate_object(&def.properties, content, "", &[]),
        )
    } else if performative == Performative::Request {
        validate_request(ctx, content)
    } else {
        let report = validate_content(ctx, content);
        let concepts = content
            .as_map()
            .map(|m| {
                m.iter()
                    .filter_map(|(k, v)| {
                        Some((k.clone(), v.get(CONCEPT_TYPE)?.as_str()?.to_string()))
                    })
                    .collect()
            })
            .unwrap_or_default();
        (MessageKind::Coordinative(concepts), report)
    };
    if report.is_valid() {
        Ok(kind)
    } else {
        Err(report)
    }
}

fn validate_request(ctx: &SharedContext, content: &ContentValue) -> (MessageKind, ValidationReport) {
    let mut report = ValidationReport::default();
    let task = content.get("task").and_then(ContentValue::as_str).unwrap_or("");
    let mut params = BTreeMap::new();
    match ctx.task(task) {
        None => report.push(
            "task",
            ViolationReason::ConstraintViolation(format!("unknown task {task:?}")),
        ),
        Some(def) => {
            let p = content.get("params").cloned().unwrap_or_else(ContentValue::empty_map);
            report.extend(validate_task_params(def, &p, "params"));
            if let ContentValue::Map(m) = p {
                params = m;
            }
        }
    }
    if let Some(m) = content.as_map() {
        for key in m.keys().filter(|k| !matches!(k.as_str(), "task" | "params")) {
            report.push(key.as_str(), ViolationReason::UnknownField(key.clone()));
        }
    }
    (
        MessageKind::Task {
            task: task.to_string(),
            params,
        },
        report,
    )
}

/// Checks an inbound envelope against the locked context.
pub fn validate_incoming(session: &mut SemanticSession, env: &Envelope) -> Result<ValidatedMessage, SnlError> {
    let locked = session.locked.as_ref().ok_or(SnlError::NotLocked)?;
    if env.context_urn.as_ref() != Some(&locked.urn) {
        return Err(SnlError::ContextMismatch {
            expected: locked.urn.clone(),
            found: env.context_urn.clone(),
        });
    }
    let kind = validate_against(&locked.context, env.performative, &env.content)
        .map_err(SnlError::SemanticallyInvalid)?;
    let msg = ValidatedMessage {
        envelope: env.clone(),
        urn: locked.urn.clone(),
        context_hash: locked.hash,
        kind,
    };
    session.validated_count += 1;
    Ok(msg)
}

/// `semantic_rejection` content for a REFUSE.
pub fn rejection_content(reason: &str, report: Option<&ValidationReport>) -> ContentValue {
    let mut m = BTreeMap::new();
    m.insert("concept".to_string(), SEMANTIC_REJECTION.into());
    m.insert("reason".to_string(), reason.into());
    if let Some(r) = report {
        m.insert("violations".to_string(), r.to_content());
    }
    ContentValue::Map(m)
}

/// Under [`Disposition::Disambiguate`], the first string task parameter that
/// failed validation but has alias candidates, as `(parameter, surface)`.
pub fn disambiguation_target(session: &SemanticSession, env: &Envelope) -> Option<(String, String)> {
    let ctx = &session.locked.as_ref()?.context;
    let task = ctx.task(env.content.get("task")?.as_str()?)?;
    let params = env.content.get("params")?;
    task.params.iter().find_map(|p| {
        let surface = params.get(&p.name)?.as_str()?;
        let allowed = p.enumeration()?;
        (!allowed.iter().any(|a| a == surface) && ctx.alias(&p.name, surface).is_some())
            .then(|| (p.name.clone(), surface.to_string()))
    })
}
