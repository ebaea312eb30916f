//! L8 message layer: envelope, performatives, interaction patterns and the
//! canonical byte encoding shared by framing and signing.

mod canonical;
mod envelope;
mod pattern;
mod performative;
mod value;

use thiserror::Error;

pub use canonical::{canonical_string, canonicalize, parse_text};
pub use envelope::{
    conversation_id_for, decode_envelope, encode_envelope, envelope_text, read_frame, AgentId,
    Envelope, MAX_FRAME_LEN, PROTOCOL_VERSION, TOPIC_PREFIX,
};
pub use pattern::{legal_reply, Conversation, ConversationError, ConversationState, InteractionPattern};
pub use performative::{Performative, PerformativeClass};
pub use value::ContentValue;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WireError {
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
    #[error("invalid envelope: {0}")]
    InvalidEnvelope(String),
    #[error("unknown performative {0:?}")]
    UnknownPerformative(String),
    #[error("value {0} has no canonical form")]
    NonCanonicalizable(f64),
}
