use std::collections::BTreeMap;

use crate::authority::SignedContext;
use crate::context::{ContextHash, ContextUrn};
use crate::wire::{ContentValue, Performative};

use super::SnlError;

/// Reserved content field marking handshake traffic.
pub const SNL_FIELD: &str = "snl";
pub const PHASE_FIELD: &str = "phase";

pub type Nonce = [u8; 16];
pub type MinVersions = BTreeMap<String, (u32, u32)>;

#[derive(Debug, Clone, PartialEq)]
pub struct SnlHello {
    pub supported: Vec<ContextUrn>,
    pub min_versions: MinVersions,
    pub nonce: Nonce,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnlSelect {
    pub chosen: ContextUrn,
    pub signed_context: SignedContext,
    pub responder_nonce: Nonce,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnlLock {
    pub urn: ContextUrn,
    pub context_hash: ContextHash,
}

/// Sent by whichever side gives up, so both ends fail with the same reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnlAbort {
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SnlMessage {
    Hello(SnlHello),
    Select(SnlSelect),
    Lock(SnlLock),
    Abort(SnlAbort),
}

impl SnlMessage {
    pub fn performative(&self) -> Performative {
        match self {
            SnlMessage::Hello(_) => Performative::Query,
            SnlMessage::Select(_) | SnlMessage::Lock(_) => Performative::Inform,
            SnlMessage::Abort(_) => Performative::Refuse,
        }
    }

    pub fn phase(&self) -> &'static str {
        match self {
            SnlMessage::Hello(_) => "hello",
            SnlMessage::Select(_) => "select",
            SnlMessage::Lock(_) => "lock",
            SnlMessage::Abort(_) => "abort",
        }
    }

    pub fn to_content(&self) -> ContentValue {
        let mut m = BTreeMap::new();
        m.insert(SNL_FIELD.to_string(), ContentValue::Bool(true));
        m.insert(PHASE_FIELD.to_string(), self.phase().into());
        match self {
            SnlMessage::Hello(h) => {
                m.insert(
                    "supported".into(),
                    ContentValue::list(h.supported.iter().map(|u| u.to_string().into())),
                );
                m.insert(
                    "min_versions".into(),
                    ContentValue::map(h.min_versions.iter().map(|(d, (maj, min))| {
                        (d.clone(), ContentValue::list([(*maj as i64).into(), (*min as i64).into()]))
                    })),
                );
                m.insert("nonce".into(), hex::encode(h.nonce).into());
            }
            SnlMessage::Select(s) => {
                m.insert("chosen".into(), s.chosen.to_string().into());
                m.insert("signed_context".into(), s.signed_context.to_document());
                m.insert("responder_nonce".into(), hex::encode(s.responder_nonce).into());
            }
            SnlMessage::Lock(l) => {
                m.insert("urn".into(), l.urn.to_string().into());
                m.insert("context_hash".into(), l.context_hash.to_hex().into());
            }
            SnlMessage::Abort(a) => {
                m.insert("reason".into(), a.reason.as_str().into());
            }
        }
        ContentValue::Map(m)
    }

    pub fn from_content(content: &ContentValue) -> Result<SnlMessage, SnlError> {
        if !is_handshake(content) {
            return Err(malformed("not an SNL handshake message"));
        }
        let field = |k: &str| content.get(k).ok_or_else(|| malformed(&format!("missing {k}")));
        let text = |k: &str| field(k)?.as_str().ok_or_else(|| malformed(&format!("{k} must be a string")));
        let urn = |k: &str| text(k)?.parse::<ContextUrn>().map_err(|e| malformed(&e.to_string()));
        match text(PHASE_FIELD)? {
            "hello" => {
                let supported = field("supported")?
                    .as_list()
                    .ok_or_else(|| malformed("supported must be a list"))?
                    .iter()
                    .map(|u| {
                        u.as_str()
                            .ok_or_else(|| malformed("supported entries must be strings"))?
                            .parse::<ContextUrn>()
                            .map_err(|e| malformed(&e.to_string()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let mut min_versions = MinVersions::new();
                for (domain, v) in field("min_versions")?
                    .as_map()
                    .ok_or_else(|| malformed("min_versions must be a map"))?
                {
                    let pair = match v.as_list() {
                        Some([a, b]) => a.as_i64().zip(b.as_i64()),
                        _ => None,
                    };
                    let (maj, min) = pair
                        .and_then(|(a, b)| Some((u32::try_from(a).ok()?, u32::try_from(b).ok()?)))
                        .ok_or_else(|| malformed("min_versions entries are [major, minor]"))?;
                    min_versions.insert(domain.clone(), (maj, min));
                }
                let hello = SnlHello {
                    supported,
                    min_versions,
                    nonce: nonce(text("nonce")?)?,
                };
                hello.check()?;
                Ok(SnlMessage::Hello(hello))
            }
            "select" => {
                let signed_context = SignedContext::from_document(field("signed_context")?)
                    .map_err(|e| malformed(&e.to_string()))?;
                Ok(SnlMessage::Select(SnlSelect {
                    chosen: urn("chosen")?,
                    signed_context,
                    responder_nonce: nonce(text("responder_nonce")?)?,
                }))
            }
            "lock" => Ok(SnlMessage::Lock(SnlLock {
                urn: urn("urn")?,
                context_hash: ContextHash::from_hex(text("context_hash")?)
                    .ok_or_else(|| malformed("context_hash must be 32 hex bytes"))?,
            })),
            "abort" => Ok(SnlMessage::Abort(SnlAbort {
                reason: text("reason")?.to_string(),
            })),
            other => Err(malformed(&format!("unknown phase {other:?}"))),
        }
    }
}

impl SnlHello {
    pub fn check(&self) -> Result<(), SnlError> {
        if self.supported.is_empty() {
            return Err(SnlError::EmptyCapabilities);
        }
        for domain in self.min_versions.keys() {
            if !self.supported.iter().any(|u| u.domain() == domain) {
                return Err(malformed(&format!("min_versions names unsupported domain {domain}")));
            }
        }
        Ok(())
    }
}

/// True for content carrying the reserved `snl: true` marker.
pub fn is_handshake(content: &ContentValue) -> bool {
    content.get(SNL_FIELD).and_then(ContentValue::as_bool) == Some(true)
}

fn nonce(text: &str) -> Result<Nonce, SnlError> {
    hex::decode(text)
        .ok()
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| malformed("nonce must be 16 hex bytes"))
}

fn malformed(m: &str) -> SnlError {
    SnlError::MalformedControl(m.to_string())
}
