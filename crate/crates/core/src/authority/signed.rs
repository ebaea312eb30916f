use ed25519_dalek::Signature;

use crate::context::{context_hash, ContextHash, SharedContext};
use crate::wire::{parse_text, ContentValue};

use super::AuthorityError;

#[derive(Debug, Clone, PartialEq)]
pub struct SignedContext {
    pub context: SharedContext,
    pub authority_id: String,
    pub signature: Signature,
}

impl SignedContext {
    pub fn hash(&self) -> ContextHash {
        context_hash(&self.context)
    }

    pub fn to_document(&self) -> ContentValue {
        ContentValue::map([
            ("authority_id", self.authority_id.as_str().into()),
            ("context", self.context.to_document()),
            ("signature", hex::encode(self.signature.to_bytes()).into()),
        ])
    }

    pub fn from_document(doc: &ContentValue) -> Result<Self, AuthorityError> {
        let bad = |m: &str| AuthorityError::BadDocument(m.to_string());
        let authority_id = doc
            .get("authority_id")
            .and_then(ContentValue::as_str)
            .ok_or_else(|| bad("missing authority_id"))?
            .to_string();
        let context = SharedContext::from_document(doc.get("context").ok_or_else(|| bad("missing context"))?)
            .map_err(|e| AuthorityError::BadDocument(e.to_string()))?;
        let signature = parse_signature(
            doc.get("signature")
                .and_then(ContentValue::as_str)
                .ok_or_else(|| bad("missing signature"))?,
        )?;
        Ok(SignedContext {
            context,
            authority_id,
            signature,
        })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, AuthorityError> {
        let doc = parse_text(bytes).map_err(|e| AuthorityError::BadDocument(e.to_string()))?;
        SignedContext::from_document(&doc)
    }

    pub fn to_pretty_json(&self) -> String {
        let json: serde_json::Value = (&self.to_document()).into();
        serde_json::to_string_pretty(&json).expect("documents serialize")
    }
}

pub(crate) fn parse_signature(hex_text: &str) -> Result<Signature, AuthorityError> {
    let bytes: [u8; 64] = hex::decode(hex_text)
        .ok()
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| AuthorityError::BadDocument("signature must be 64 hex-encoded bytes".into()))?;
    Ok(Signature::from_bytes(&bytes))
}
