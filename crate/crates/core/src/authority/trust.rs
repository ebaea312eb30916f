use std::collections::BTreeMap;

use ed25519_dalek::Verifier;

use crate::fixtures;
use crate::wire::{parse_text, ContentValue};

use super::keys::{Authority, AuthorityIdentity};
use super::revocation::RevocationList;
use super::signed::SignedContext;
use super::{AuthorityError, VerifyError};

/// Revocation lists older than this (simulated time) are stale.
pub const REVOCATION_MAX_AGE_MS: u64 = 24 * 60 * 60 * 1000;

/// Trusted schema-authority roots plus the revocation lists they issued.
///
/// Mutated only between simulation steps; verification takes `&self`.
#[derive(Debug, Clone, Default)]
pub struct TrustStore {
    roots: BTreeMap<String, AuthorityIdentity>,
    revocations: BTreeMap<String, Vec<RevocationList>>,
}

impl TrustStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Roots for every shipped authority except the rogue one.
    pub fn fixture_default() -> Self {
        let mut store = TrustStore::new();
        for id in fixtures::TRUSTED_AUTHORITIES {
            let identity = Authority::fixture(id).expect("fixture authority").identity();
            store.add_root(identity).expect("fixture ids are unique");
        }
        store
    }

    pub fn add_root(&mut self, identity: AuthorityIdentity) -> Result<(), AuthorityError> {
        match self.roots.get(&identity.authority_id) {
            Some(existing) if existing == &identity => Ok(()),
            Some(_) => Err(AuthorityError::DuplicateAuthority(identity.authority_id)),
            None => {
                self.roots.insert(identity.authority_id.clone(), identity);
                Ok(())
            }
        }
    }

    pub fn root(&self, authority_id: &str) -> Option<&AuthorityIdentity> {
        self.roots.get(authority_id)
    }

    pub fn roots(&self) -> impl Iterator<Item = &AuthorityIdentity> {
        self.roots.values()
    }

    /// Adds a signed revocation list from a known root. Lists accumulate:
    /// a URN revoked by any list stays revoked.
    pub fn add_revocations(&mut self, list: RevocationList) -> Result<(), AuthorityError> {
        let root = self
            .roots
            .get(&list.authority_id)
            .ok_or_else(|| AuthorityError::UnknownAuthority(list.authority_id.clone()))?;
        list.verify(root)?;
        self.revocations
            .entry(list.authority_id.clone())
            .or_default()
            .push(list);
        Ok(())
    }

    pub fn revocation_lists(&self) -> impl Iterator<Item = &RevocationList> {
        self.revocations.values().flatten()
    }

    /// Ok iff the authority is a root, the signature covers the context hash,
    /// the URN is not revoked, and the newest revocation list (if any) is fresh.
    pub fn verify(&self, sc: &SignedContext, now: u64) -> Result<(), VerifyError> {
        let root = self
            .roots
            .get(&sc.authority_id)
            .ok_or_else(|| VerifyError::UntrustedAuthority(sc.authority_id.clone()))?;
        if sc.context.authority_id != sc.authority_id {
            return Err(VerifyError::UntrustedAuthority(format!(
                "{} signed a context issued by {}",
                sc.authority_id, sc.context.authority_id
            )));
        }
        let digest = sc.hash();
        root.verification_key
            .verify(&digest.0, &sc.signature)
            .map_err(|_| VerifyError::BadSignature)?;
        if let Some(lists) = self.revocations.get(&sc.authority_id) {
            if lists.iter().any(|l| l.contains(&sc.context.urn)) {
                return Err(VerifyError::Revoked(sc.context.urn.clone()));
            }
            let newest = lists.iter().map(|l| l.issued_at).max().unwrap_or(0);
            let age = now.saturating_sub(newest);
            if age > REVOCATION_MAX_AGE_MS {
                return Err(VerifyError::StaleRevocation {
                    authority_id: sc.authority_id.clone(),
                    age_ms: age,
                });
            }
        }
        Ok(())
    }

    pub fn to_document(&self) -> ContentValue {
        ContentValue::map([
            (
                "roots",
                ContentValue::list(self.roots.values().map(|r| {
                    ContentValue::map([
                        ("authority_id", r.authority_id.as_str().into()),
                        ("verification_key", r.key_hex().into()),
                    ])
                })),
            ),
            (
                "revocations",
                ContentValue::list(self.revocation_lists().map(RevocationList::to_document)),
            ),
        ])
    }

    pub fn from_document(doc: &ContentValue) -> Result<Self, AuthorityError> {
        let bad = |m: &str| AuthorityError::BadDocument(m.to_string());
        let mut store = TrustStore::new();
        for r in doc
            .get("roots")
            .and_then(ContentValue::as_list)
            .ok_or_else(|| bad("trust store needs roots"))?
        {
            let id = r
                .get("authority_id")
                .and_then(ContentValue::as_str)
                .ok_or_else(|| bad("root needs authority_id"))?;
            let key = r
                .get("verification_key")
                .and_then(ContentValue::as_str)
                .ok_or_else(|| bad("root needs verification_key"))?;
            store.add_root(AuthorityIdentity::from_hex(id, key)?)?;
        }
        if let Some(lists) = doc.get("revocations") {
            for l in lists.as_list().ok_or_else(|| bad("revocations must be a list"))? {
                store.add_revocations(RevocationList::from_document(l)?)?;
            }
        }
        Ok(store)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, AuthorityError> {
        let doc = parse_text(bytes).map_err(|e| AuthorityError::BadDocument(e.to_string()))?;
        TrustStore::from_document(&doc)
    }

    pub fn to_pretty_json(&self) -> String {
        let json: serde_json::Value = (&self.to_document()).into();
        serde_json::to_string_pretty(&json).expect("documents serialize")
    }
}

pub fn verify_signed_context(store: &TrustStore, sc: &SignedContext, now: u64) -> Result<(), VerifyError> {
    store.verify(sc, now)
}
