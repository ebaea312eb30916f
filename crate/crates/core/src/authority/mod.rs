//! Schema-authority toolchain: signing contexts, verifying them against a
//! trust store, revocation lists, and version-compatibility checks.

mod compat;
mod keys;
mod repo;
mod revocation;
mod signed;
mod trust;

use thiserror::Error;

use crate::context::ContextUrn;

pub use compat::{check_release, check_version_compat, Compatibility};
pub use keys::{sign_context, Authority, AuthorityIdentity};
pub use repo::{sign_with_fixture_key, ContextRepo};
pub use revocation::RevocationList;
pub use signed::SignedContext;
pub use trust::{verify_signed_context, TrustStore, REVOCATION_MAX_AGE_MS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("authority {0} is not trusted")]
    UntrustedAuthority(String),
    #[error("signature does not match the context")]
    BadSignature,
    #[error("{0} has been revoked")]
    Revoked(ContextUrn),
    #[error("revocation list from {authority_id} is {age_ms} ms old")]
    StaleRevocation { authority_id: String, age_ms: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuthorityError {
    #[error("bad key: {0}")]
    BadKey(String),
    #[error("bad document: {0}")]
    BadDocument(String),
    #[error("authority {0} already present with a different key")]
    DuplicateAuthority(String),
    #[error("unknown authority {0}")]
    UnknownAuthority(String),
    #[error("bad revocation list: {0}")]
    BadRevocationList(String),
    #[error("domains differ: {0} vs {1}")]
    DomainMismatch(String, String),
    #[error("{1} does not raise the version of {0}")]
    VersionNotRaised(ContextUrn, ContextUrn),
    #[error("{0} breaks compatibility without a major version bump")]
    MajorBumpRequired(ContextUrn),
}
