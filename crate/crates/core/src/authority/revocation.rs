use ed25519_dalek::{Signature, Verifier};
use sha2::{Digest, Sha256};

use crate::context::ContextUrn;
use crate::wire::{canonicalize, parse_text, ContentValue};

use super::keys::{Authority, AuthorityIdentity};
use super::signed::parse_signature;
use super::AuthorityError;

/// Signed list of revoked context URNs issued by one authority.
#[derive(Debug, Clone, PartialEq)]
pub struct RevocationList {
    pub authority_id: String,
    pub issued_at: u64,
    /// Sorted by textual form, no duplicates.
    revoked: Vec<ContextUrn>,
    pub signature: Signature,
}

fn normalize(mut urns: Vec<ContextUrn>) -> Vec<ContextUrn> {
    urns.sort_by_key(|u| u.to_string());
    urns.dedup();
    urns
}

impl RevocationList {
    pub(crate) fn issue<I>(authority: &Authority, issued_at: u64, revoked: I) -> Self
    where
        I: IntoIterator<Item = ContextUrn>,
    {
        let revoked = normalize(revoked.into_iter().collect());
        let digest = body_digest(authority.id(), issued_at, &revoked);
        RevocationList {
            authority_id: authority.id().to_string(),
            issued_at,
            revoked,
            signature: authority.sign_digest(&digest),
        }
    }

    pub fn revoked(&self) -> &[ContextUrn] {
        &self.revoked
    }

    pub fn contains(&self, urn: &ContextUrn) -> bool {
        self.revoked.contains(urn)
    }

    pub fn verify(&self, identity: &AuthorityIdentity) -> Result<(), AuthorityError> {
        if identity.authority_id != self.authority_id {
            return Err(AuthorityError::BadRevocationList(format!(
                "list from {} checked against {}",
                self.authority_id, identity.authority_id
            )));
        }
        let digest = body_digest(&self.authority_id, self.issued_at, &self.revoked);
        identity
            .verification_key
            .verify(&digest, &self.signature)
            .map_err(|_| AuthorityError::BadRevocationList("signature does not verify".into()))
    }

    pub fn to_document(&self) -> ContentValue {
        let mut doc = body(&self.authority_id, self.issued_at, &self.revoked);
        doc.as_map_mut()
            .expect("body is a map")
            .insert("signature".into(), hex::encode(self.signature.to_bytes()).into());
        doc
    }

    pub fn from_document(doc: &ContentValue) -> Result<Self, AuthorityError> {
        let bad = |m: &str| AuthorityError::BadDocument(m.to_string());
        let authority_id = doc
            .get("authority_id")
            .and_then(ContentValue::as_str)
            .ok_or_else(|| bad("revocation list needs authority_id"))?
            .to_string();
        let issued_at = doc
            .get("issued_at")
            .and_then(ContentValue::as_i64)
            .filter(|t| *t >= 0)
            .ok_or_else(|| bad("revocation list needs issued_at"))? as u64;
        let revoked = doc
            .get("revoked")
            .and_then(ContentValue::as_list)
            .ok_or_else(|| bad("revocation list needs revoked"))?
            .iter()
            .map(|u| {
                u.as_str()
                    .ok_or_else(|| bad("revoked entries must be URN strings"))?
                    .parse::<ContextUrn>()
                    .map_err(|e| AuthorityError::BadDocument(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let signature = parse_signature(
            doc.get("signature")
                .and_then(ContentValue::as_str)
                .ok_or_else(|| bad("revocation list needs signature"))?,
        )?;
        Ok(RevocationList {
            authority_id,
            issued_at,
            revoked: normalize(revoked),
            signature,
        })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, AuthorityError> {
        let doc = parse_text(bytes).map_err(|e| AuthorityError::BadDocument(e.to_string()))?;
        RevocationList::from_document(&doc)
    }

    pub fn to_pretty_json(&self) -> String {
        let json: serde_json::Value = (&self.to_document()).into();
        serde_json::to_string_pretty(&json).expect("documents serialize")
    }
}

fn body(authority_id: &str, issued_at: u64, revoked: &[ContextUrn]) -> ContentValue {
    ContentValue::map([
        ("authority_id", authority_id.into()),
        ("issued_at", ContentValue::Int(issued_at as i64)),
        (
            "revoked",
            ContentValue::list(revoked.iter().map(|u| u.to_string().into())),
        ),
    ])
}

fn body_digest(authority_id: &str, issued_at: u64, revoked: &[ContextUrn]) -> [u8; 32] {
    let bytes = canonicalize(&body(authority_id, issued_at, revoked)).expect("body is finite");
    Sha256::digest(bytes).into()
}
