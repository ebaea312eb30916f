use ed25519_dalek::{Signer, SigningKey, VerifyingKey};

use crate::context::{context_hash, ContextUrn, SharedContext};
use crate::fixtures;

use super::revocation::RevocationList;
use super::signed::SignedContext;
use super::AuthorityError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthorityIdentity {
    pub authority_id: String,
    pub verification_key: VerifyingKey,
}

impl AuthorityIdentity {
    pub fn from_hex(authority_id: impl Into<String>, key_hex: &str) -> Result<Self, AuthorityError> {
        let bytes: [u8; 32] = hex::decode(key_hex.trim())
            .ok()
            .and_then(|b| b.try_into().ok())
            .ok_or_else(|| AuthorityError::BadKey("verification key must be 32 hex-encoded bytes".into()))?;
        let verification_key = VerifyingKey::from_bytes(&bytes)
            .map_err(|e| AuthorityError::BadKey(e.to_string()))?;
        Ok(AuthorityIdentity {
            authority_id: authority_id.into(),
            verification_key,
        })
    }

    pub fn key_hex(&self) -> String {
        hex::encode(self.verification_key.as_bytes())
    }
}

/// A schema authority holding its signing key.
#[derive(Clone)]
pub struct Authority {
    id: String,
    key: SigningKey,
}

impl std::fmt::Debug for Authority {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Authority").field("id", &self.id).finish_non_exhaustive()
    }
}

impl Authority {
    pub fn from_seed(id: impl Into<String>, seed: [u8; 32]) -> Self {
        Authority {
            id: id.into(),
            key: SigningKey::from_bytes(&seed),
        }
    }

    /// Key files hold a raw 32-byte seed, hex-encoded.
    pub fn from_seed_hex(id: impl Into<String>, seed_hex: &str) -> Result<Self, AuthorityError> {
        let seed: [u8; 32] = hex::decode(seed_hex.trim())
            .ok()
            .and_then(|b| b.try_into().ok())
            .ok_or_else(|| AuthorityError::BadKey("key file must hold 32 hex-encoded bytes".into()))?;
        Ok(Authority::from_seed(id, seed))
    }

    /// One of the shipped test authorities.
    pub fn fixture(id: &str) -> Option<Self> {
        fixtures::authority_seed_hex(id).map(|s| Authority::from_seed_hex(id, s).expect("fixture seed"))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn identity(&self) -> AuthorityIdentity {
        AuthorityIdentity {
            authority_id: self.id.clone(),
            verification_key: self.key.verifying_key(),
        }
    }

    pub(crate) fn sign_digest(&self, digest: &[u8; 32]) -> ed25519_dalek::Signature {
        self.key.sign(digest)
    }

    /// Ed25519 over the context hash; deterministic for a fixed key and context.
    pub fn sign_context(&self, ctx: &SharedContext) -> SignedContext {
        let digest = context_hash(ctx);
        SignedContext {
            context: ctx.clone(),
            authority_id: self.id.clone(),
            signature: self.sign_digest(&digest.0),
        }
    }

    pub fn revocation_list<I>(&self, issued_at: u64, revoked: I) -> RevocationList
    where
        I: IntoIterator<Item = ContextUrn>,
    {
        RevocationList::issue(self, issued_at, revoked)
    }
}

pub fn sign_context(ctx: &SharedContext, authority: &Authority) -> SignedContext {
    authority.sign_context(ctx)
}
