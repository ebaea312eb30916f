use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Read};

use crate::context::ContextUrn;

use super::canonical::{canonicalize, parse_text};
use super::performative::Performative;
use super::value::ContentValue;
use super::WireError;

pub const PROTOCOL_VERSION: &str = "A2A/1.0";
pub const TOPIC_PREFIX: &str = "topic:";

/// Frames larger than this are refused by [`read_frame`].
pub const MAX_FRAME_LEN: u32 = 16 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentId(String);

impl AgentId {
    pub fn new(id: impl Into<String>) -> Self {
        AgentId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_topic(&self) -> bool {
        self.0.starts_with(TOPIC_PREFIX)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AgentId {
    fn from(s: &str) -> Self {
        AgentId(s.to_string())
    }
}

impl From<String> for AgentId {
    fn from(s: String) -> Self {
        AgentId(s)
    }
}

impl std::borrow::Borrow<str> for AgentId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// The L8 message envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub protocol_version: String,
    pub message_id: String,
    pub conversation_id: String,
    pub sender_id: AgentId,
    pub receiver_ids: Vec<AgentId>,
    pub performative: Performative,
    pub context_urn: Option<ContextUrn>,
    pub in_reply_to: Option<String>,
    pub content: ContentValue,
    /// Milliseconds since the simulation epoch.
    pub timestamp: u64,
}

impl Envelope {
    /// Starts a new conversation; the conversation id is `<sender>/<message_id>`.
    pub fn initiate(
        sender: impl Into<AgentId>,
        message_id: impl Into<String>,
        receivers: Vec<AgentId>,
        performative: Performative,
        content: ContentValue,
        timestamp: u64,
    ) -> Self {
        let sender = sender.into();
        let message_id = message_id.into();
        Envelope {
            protocol_version: PROTOCOL_VERSION.to_string(),
            conversation_id: conversation_id_for(&sender, &message_id),
            message_id,
            sender_id: sender,
            receiver_ids: receivers,
            performative,
            context_urn: None,
            in_reply_to: None,
            content,
            timestamp,
        }
    }

    /// Builds a reply addressed to this envelope's sender in the same conversation.
    pub fn reply(
        &self,
        sender: impl Into<AgentId>,
        message_id: impl Into<String>,
        performative: Performative,
        content: ContentValue,
        timestamp: u64,
    ) -> Envelope {
        Envelope {
            protocol_version: self.protocol_version.clone(),
            message_id: message_id.into(),
            conversation_id: self.conversation_id.clone(),
            sender_id: sender.into(),
            receiver_ids: vec![self.sender_id.clone()],
            performative,
            context_urn: self.context_urn.clone(),
            in_reply_to: Some(self.message_id.clone()),
            content,
            timestamp,
        }
    }

    pub fn with_context(mut self, urn: Option<ContextUrn>) -> Self {
        self.context_urn = urn;
        self
    }

    pub fn check(&self) -> Result<(), WireError> {
        let invalid = |m: &str| Err(WireError::InvalidEnvelope(m.to_string()));
        if self.protocol_version.is_empty() {
            return invalid("empty protocol_version");
        }
        if self.message_id.is_empty() {
            return invalid("empty message_id");
        }
        if self.conversation_id.is_empty() {
            return invalid("empty conversation_id");
        }
        if self.sender_id.as_str().is_empty() || self.sender_id.is_topic() {
            return invalid("sender_id must name an agent");
        }
        if self.receiver_ids.is_empty() {
            return invalid("receiver_ids is empty");
        }
        for r in &self.receiver_ids {
            if r.as_str().is_empty() || r.as_str() == TOPIC_PREFIX {
                return invalid("empty receiver id");
            }
            if r.is_topic() && self.performative != Performative::Publish {
                return invalid("topic receivers are only valid for PUBLISH");
            }
        }
        if self.in_reply_to.as_deref() == Some(self.message_id.as_str()) {
            return invalid("message replies to itself");
        }
        if !self.content.is_finite() {
            return Err(WireError::NonCanonicalizable(f64::NAN));
        }
        Ok(())
    }

    pub fn to_document(&self) -> ContentValue {
        let mut m = BTreeMap::new();
        m.insert("protocol_version".into(), self.protocol_version.as_str().into());
        m.insert("message_id".into(), self.message_id.as_str().into());
        m.insert("conversation_id".into(), self.conversation_id.as_str().into());
        m.insert("sender_id".into(), self.sender_id.as_str().into());
        m.insert(
            "receiver_ids".into(),
            ContentValue::list(self.receiver_ids.iter().map(|r| r.as_str().into())),
        );
        m.insert("performative".into(), self.performative.as_str().into());
        if let Some(urn) = &self.context_urn {
            m.insert("context_urn".into(), urn.to_string().into());
        }
        if let Some(r) = &self.in_reply_to {
            m.insert("in_reply_to".into(), r.as_str().into());
        }
        m.insert("content".into(), self.content.clone());
        m.insert("timestamp".into(), ContentValue::Int(self.timestamp as i64));
        ContentValue::Map(m)
    }

    pub fn from_document(doc: ContentValue) -> Result<Self, WireError> {
        let invalid = |m: String| WireError::InvalidEnvelope(m);
        let mut map = match doc {
            ContentValue::Map(m) => m,
            other => return Err(invalid(format!("envelope is {}, not object", other.kind_name()))),
        };
        let take_str = |map: &mut BTreeMap<String, ContentValue>, key: &str, required: bool| {
            match map.remove(key) {
                Some(ContentValue::String(s)) => Ok(Some(s)),
                Some(other) => Err(invalid(format!("{key} is {}, not string", other.kind_name()))),
                None if required => Err(invalid(format!("missing {key}"))),
                None => Ok(None),
            }
        };
        let protocol_version = take_str(&mut map, "protocol_version", true)?.unwrap_or_default();
        let message_id = take_str(&mut map, "message_id", true)?.unwrap_or_default();
        let conversation_id = take_str(&mut map, "conversation_id", true)?.unwrap_or_default();
        let sender_id = AgentId(take_str(&mut map, "sender_id", true)?.unwrap_or_default());
        let performative: Performative = take_str(&mut map, "performative", true)?
            .unwrap_or_default()
            .parse()?;
        let context_urn = take_str(&mut map, "context_urn", false)?
            .map(|s| s.parse::<ContextUrn>())
            .transpose()
            .map_err(|e| invalid(e.to_string()))?;
        let in_reply_to = take_str(&mut map, "in_reply_to", false)?;
        let receiver_ids = match map.remove("receiver_ids") {
            Some(ContentValue::List(items)) => items
                .into_iter()
                .map(|v| match v {
                    ContentValue::String(s) => Ok(AgentId(s)),
                    other => Err(invalid(format!("receiver id is {}", other.kind_name()))),
                })
                .collect::<Result<Vec<_>, _>>()?,
            Some(other) => return Err(invalid(format!("receiver_ids is {}", other.kind_name()))),
            None => return Err(invalid("missing receiver_ids".into())),
        };
        let content = map
            .remove("content")
            .ok_or_else(|| invalid("missing content".into()))?;
        let timestamp = match map.remove("timestamp") {
            Some(ContentValue::Int(t)) if t >= 0 => t as u64,
            Some(other) => return Err(invalid(format!("bad timestamp {other}"))),
            None => return Err(invalid("missing timestamp".into())),
        };
        if let Some(extra) = map.keys().next() {
            return Err(invalid(format!("unknown envelope field {extra}")));
        }
        let env = Envelope {
            protocol_version,
            message_id,
            conversation_id,
            sender_id,
            receiver_ids,
            performative,
            context_urn,
            in_reply_to,
            content,
            timestamp,
        };
        env.check()?;
        Ok(env)
    }
}

pub fn conversation_id_for(initiator: &AgentId, first_message_id: &str) -> String {
    format!("{initiator}/{first_message_id}")
}

/// Canonical text of the envelope without framing.
pub fn envelope_text(env: &Envelope) -> Result<Vec<u8>, WireError> {
    env.check()?;
    canonicalize(&env.to_document())
}

/// Encodes one frame: 4-byte big-endian length followed by canonical envelope text.
pub fn encode_envelope(env: &Envelope) -> Result<Vec<u8>, WireError> {
    let body = envelope_text(env)?;
    let len = u32::try_from(body.len())
        .map_err(|_| WireError::InvalidEnvelope("envelope too large".into()))?;
    let mut out = Vec::with_capacity(body.len() + 4);
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(&body);
    Ok(out)
}

/// Decodes exactly one frame.
pub fn decode_envelope(bytes: &[u8]) -> Result<Envelope, WireError> {
    if bytes.len() < 4 {
        return Err(WireError::MalformedFrame(format!(
            "frame header needs 4 bytes, have {}",
            bytes.len()
        )));
    }
    let len = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as usize;
    let body = &bytes[4..];
    if body.len() != len {
        return Err(WireError::MalformedFrame(format!(
            "frame declares {len} bytes, carries {}",
            body.len()
        )));
    }
    Envelope::from_document(parse_text(body)?)
}

/// Reads one length-prefixed frame from a stream. `Ok(None)` on clean EOF.
pub fn read_frame<R: Read>(reader: &mut R) -> io::Result<Option<Vec<u8>>> {
    let mut header = [0u8; 4];
    match reader.read_exact(&mut header) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let len = u32::from_be_bytes(header);
    if len > MAX_FRAME_LEN {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "frame too large"));
    }
    let mut body = vec![0u8; len as usize];
    reader.read_exact(&mut body)?;
    let mut frame = header.to_vec();
    frame.extend_from_slice(&body);
    Ok(Some(frame))
}
