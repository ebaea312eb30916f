//! Shared contexts: versioned schemas of tasks, concepts and parameters,
//! their URNs, content validation, grounding and content hashing.

mod ground;
mod schema;
mod urn;
mod validate;

use std::fmt;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use ground::{ground_task, GroundingResult};
pub use schema::{
    Alias, ConceptDef, Constraints, FieldSpec, Pattern, SharedContext, TaskDef, ValueKind, DATE_FORMAT,
};
pub use urn::{parse_urn, ContextUrn};
pub use validate::{
    is_date, validate_content, validate_object, validate_task_params, ValidationReport, Violation,
    ViolationReason, CONCEPT_TYPE,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContextError {
    #[error("invalid urn: {0}")]
    InvalidUrn(String),
    #[error("invalid context document: {0}")]
    InvalidDocument(String),
    #[error("unknown task {0}")]
    UnknownTask(String),
}

/// SHA-256 digest of a context's canonical document.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContextHash(pub [u8; 32]);

impl ContextHash {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let bytes = hex::decode(s).ok()?;
        Some(ContextHash(bytes.try_into().ok()?))
    }
}

impl fmt::Display for ContextHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for ContextHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContextHash({})", &self.to_hex()[..16])
    }
}

pub fn context_hash(ctx: &SharedContext) -> ContextHash {
    ContextHash(Sha256::digest(ctx.canonical_bytes()).into())
}
