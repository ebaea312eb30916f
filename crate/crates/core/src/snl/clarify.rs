use std::collections::BTreeMap;

use crate::context::{ground_task, GroundingResult};
use crate::wire::{AgentId, ContentValue, Envelope, Performative};

use super::session::SemanticSession;
use super::{SnlError, AMBIGUOUS_PARAMETER, PARAMETER_OPTIONS};

/// Largest enumeration offered in full when a value has no alias entry.
pub const MAX_ENUM_OPTIONS: usize = 16;

/// Who a new outgoing envelope is from and to.
#[derive(Debug, Clone)]
pub struct Addressing {
    pub sender: AgentId,
    pub receiver: AgentId,
    pub message_id: String,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outgoing {
    /// A REQUEST `{task, params}` ready to send.
    Request(Envelope),
    /// A QUERY asking the peer to disambiguate `parameter`; nothing else is sent.
    Clarification {
        envelope: Envelope,
        parameter: String,
        surface: String,
    },
}

impl Outgoing {
    pub fn envelope(&self) -> &Envelope {
        match self {
            Outgoing::Request(e) => e,
            Outgoing::Clarification { envelope, .. } => envelope,
        }
    }
}

/// Grounds a task against the locked context, applying cached choices first.
pub fn ground_outgoing(
    session: &mut SemanticSession,
    task: &str,
    bindings: &BTreeMap<String, ContentValue>,
    addr: &Addressing,
) -> Result<Outgoing, SnlError> {
    let locked = session.locked.clone().ok_or(SnlError::NotLocked)?;
    let mut bound = bindings.clone();
    for (param, value) in bound.iter_mut() {
        if let ContentValue::String(surface) = value {
            if let Some(choice) = session.cached_choice(param, surface) {
                *value = choice.into();
            }
        }
    }
    let new = |performative, content| {
        Envelope::initiate(
            addr.sender.clone(),
            addr.message_id.clone(),
            vec![addr.receiver.clone()],
            performative,
            content,
            addr.timestamp,
        )
        .with_context(Some(locked.urn.clone()))
    };
    match ground_task(&locked.context, task, &bound)? {
        GroundingResult::Complete(params) => Ok(Outgoing::Request(new(
            Performative::Request,
            ContentValue::map([("task", task.into()), ("params", ContentValue::Map(params))]),
        ))),
        GroundingResult::Ambiguous { param, surface, .. } => {
            let envelope = new(
                Performative::Query,
                ContentValue::map([
                    ("concept", AMBIGUOUS_PARAMETER.into()),
                    ("parameter", param.as_str().into()),
                    ("value", surface.as_str().into()),
                ]),
            );
            session
                .pending_clarifications
                .insert(addr.message_id.clone(), (param.clone(), surface.clone()));
            Ok(Outgoing::Clarification {
                envelope,
                parameter: param,
                surface,
            })
        }
        GroundingResult::Missing(names) => Err(SnlError::MissingParams(names)),
        GroundingResult::Invalid(report) => Err(SnlError::InvalidParams(report)),
    }
}

/// The options a clarification should offer for `(parameter, value)`.
pub fn clarification_options(
    session: &SemanticSession,
    parameter: &str,
    value: &str,
) -> Result<Vec<String>, SnlError> {
    let locked = session.locked.as_ref().ok_or(SnlError::NotLocked)?;
    let ctx = &locked.context;
    let spec = ctx
        .task_param(parameter)
        .ok_or_else(|| SnlError::UnknownParameter(parameter.to_string()))?;
    if let Some(candidates) = ctx.alias(parameter, value) {
        return Ok(candidates.to_vec());
    }
    match spec.enumeration() {
        Some(all) if all.len() <= MAX_ENUM_OPTIONS => Ok(all.to_vec()),
        _ => Err(SnlError::NoOptions {
            parameter: parameter.to_string(),
            value: value.to_string(),
        }),
    }
}

/// Answers an `ambiguous_parameter` QUERY with an INFORM listing the options.
pub fn answer_clarification(
    session: &SemanticSession,
    query: &Envelope,
    message_id: impl Into<String>,
    timestamp: u64,
) -> Result<Envelope, SnlError> {
    let c = &query.content;
    if c.get("concept").and_then(ContentValue::as_str) != Some(AMBIGUOUS_PARAMETER) {
        return Err(SnlError::MalformedControl("expected an ambiguous_parameter query".into()));
    }
    let (Some(parameter), Some(value)) = (
        c.get("parameter").and_then(ContentValue::as_str),
        c.get("value").and_then(ContentValue::as_str),
    ) else {
        return Err(SnlError::MalformedControl("query needs parameter and value strings".into()));
    };
    let options = clarification_options(session, parameter, value)?;
    let me = query
        .receiver_ids
        .first()
        .cloned()
        .ok_or_else(|| SnlError::MalformedControl("query has no receiver".into()))?;
    Ok(query.reply(
        me,
        message_id,
        Performative::Inform,
        ContentValue::map([
            ("concept", PARAMETER_OPTIONS.into()),
            ("parameter", parameter.into()),
            ("options", ContentValue::list(options.into_iter().map(ContentValue::from))),
        ]),
        timestamp,
    ))
}

/// Records a `parameter_options` INFORM against the QUERY it answers.
/// Returns `(parameter, surface, options)`.
pub fn receive_options(
    session: &mut SemanticSession,
    inform: &Envelope,
) -> Result<(String, String, Vec<String>), SnlError> {
    let c = &inform.content;
    if c.get("concept").and_then(ContentValue::as_str) != Some(PARAMETER_OPTIONS) {
        return Err(SnlError::MalformedControl("expected parameter_options".into()));
    }
    let query_id = inform
        .in_reply_to
        .as_ref()
        .ok_or_else(|| SnlError::MalformedControl("options must answer a query".into()))?;
    let (parameter, surface) = session
        .pending_clarifications
        .get(query_id)
        .cloned()
        .ok_or_else(|| SnlError::MalformedControl(format!("no clarification {query_id} outstanding")))?;
    if c.get("parameter").and_then(ContentValue::as_str) != Some(parameter.as_str()) {
        return Err(SnlError::MalformedControl("options name a different parameter".into()));
    }
    let options = c
        .get("options")
        .and_then(ContentValue::as_list)
        .and_then(|l| l.iter().map(|o| o.as_str().map(String::from)).collect::<Option<Vec<_>>>())
        .ok_or_else(|| SnlError::MalformedControl("options must be strings".into()))?;
    session.pending_clarifications.remove(query_id);
    session
        .received_options
        .insert((parameter.clone(), surface.clone()), options.clone());
    Ok((parameter, surface, options))
}

/// Caches `choice` for `(parameter, surface)`; it must be one of the options
/// the peer offered.
pub fn resolve_choice(
    session: &mut SemanticSession,
    parameter: &str,
    surface: &str,
    choice: &str,
) -> Result<(), SnlError> {
    let key = (parameter.to_string(), surface.to_string());
    let offered = session.received_options.get(&key);
    if !offered.is_some_and(|o| o.iter().any(|c| c == choice)) {
        return Err(SnlError::ChoiceNotOffered {
            parameter: parameter.to_string(),
            choice: choice.to_string(),
        });
    }
    session.received_options.remove(&key);
    session.disambiguation_cache.insert(key, choice.to_string());
    Ok(())
}
