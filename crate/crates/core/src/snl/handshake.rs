use std::sync::Arc;

use crate::authority::{ContextRepo, SignedContext, TrustStore};
use crate::context::ContextUrn;
use crate::wire::AgentId;

use super::messages::{MinVersions, Nonce, SnlAbort, SnlHello, SnlLock, SnlSelect};
use super::session::{LockedContext, Role, SemanticSession, SessionState};
use super::SnlError;

/// Order-preserving dedup; keeps the first occurrence of each URN.
pub fn dedup_preserving_order(urns: &[ContextUrn]) -> Vec<ContextUrn> {
    let mut out: Vec<ContextUrn> = Vec::with_capacity(urns.len());
    for u in urns {
        if !out.contains(u) {
            out.push(u.clone());
        }
    }
    out
}

/// Starts a handshake towards `peer`. Floors for domains we do not
/// advertise are dropped.
pub fn begin_handshake(
    peer: AgentId,
    supported: &[ContextUrn],
    min_versions: &MinVersions,
    nonce: Nonce,
    now: u64,
) -> Result<(SnlHello, SemanticSession), SnlError> {
    let supported = dedup_preserving_order(supported);
    if supported.is_empty() {
        return Err(SnlError::EmptyCapabilities);
    }
    let min_versions: MinVersions = min_versions
        .iter()
        .filter(|(d, _)| supported.iter().any(|u| u.domain() == d.as_str()))
        .map(|(d, v)| (d.clone(), *v))
        .collect();
    let mut session = SemanticSession::new(peer, Role::Initiator, now);
    session.offered = supported.clone();
    session.min_versions = min_versions.clone();
    session.state = SessionState::HelloSent;
    Ok((
        SnlHello {
            supported,
            min_versions,
            nonce,
        },
        session,
    ))
}

/// Responder selection, a pure function of its inputs.
///
/// The domain is that of the first responder-preferred URN the peer also
/// lists. Within that domain the highest shared version at or above both
/// floors wins; if none qualifies the handshake is refused rather than moved
/// to another domain.
pub fn choose_context(
    local_supported: &[ContextUrn],
    local_min: &MinVersions,
    hello: &SnlHello,
) -> Result<ContextUrn, SnlError> {
    let shared: Vec<&ContextUrn> = local_supported
        .iter()
        .filter(|u| hello.supported.contains(u))
        .collect();
    let first = shared.first().ok_or(SnlError::NoCommonContext)?;
    let domain = first.domain();
    let floor = [local_min.get(domain), hello.min_versions.get(domain)]
        .into_iter()
        .flatten()
        .copied()
        .max()
        .unwrap_or((0, 0));
    shared
        .iter()
        .filter(|u| u.domain() == domain && u.version() >= floor)
        .max_by_key(|u| u.version())
        .map(|u| (*u).clone())
        .ok_or_else(|| SnlError::DowngradeRefused {
            domain: domain.to_string(),
            floor,
        })
}

/// Answers a hello with the selected context and its signed copy, which must
/// verify against `store`.
pub fn handle_hello(
    local_supported: &[ContextUrn],
    local_min: &MinVersions,
    hello: &SnlHello,
    store: &TrustStore,
    repo: &ContextRepo,
    responder_nonce: Nonce,
    now: u64,
) -> Result<SnlSelect, SnlError> {
    hello.check()?;
    let chosen = choose_context(local_supported, local_min, hello)?;
    let signed = repo
        .get(&chosen)
        .ok_or_else(|| SnlError::UnknownContext(chosen.clone()))?;
    store.verify(signed, now).map_err(SnlError::UntrustedContext)?;
    Ok(SnlSelect {
        chosen,
        signed_context: signed.clone(),
        responder_nonce,
    })
}

/// Responder side of [`handle_hello`]: Idle → Selected, or Failed.
#[allow(clippy::too_many_arguments)]
pub fn accept_hello(
    session: &mut SemanticSession,
    local_supported: &[ContextUrn],
    local_min: &MinVersions,
    hello: &SnlHello,
    store: &TrustStore,
    repo: &ContextRepo,
    responder_nonce: Nonce,
    now: u64,
) -> Result<SnlSelect, SnlError> {
    expect_state(session, Role::Responder, &SessionState::Idle)?;
    session.offered = dedup_preserving_order(local_supported);
    session.min_versions = local_min.clone();
    match handle_hello(local_supported, local_min, hello, store, repo, responder_nonce, now) {
        Ok(select) => {
            session.candidate = Some(locked_context(&select.signed_context));
            session.state = SessionState::Selected;
            session.phase_started = now;
            Ok(select)
        }
        Err(e) => {
            fail_with(session, &e);
            Err(e)
        }
    }
}

/// Initiator: verifies the select and locks. HelloSent → Locked, or Failed.
pub fn handle_select(
    session: &mut SemanticSession,
    select: &SnlSelect,
    store: &TrustStore,
    now: u64,
) -> Result<SnlLock, SnlError> {
    expect_state(session, Role::Initiator, &SessionState::HelloSent)?;
    let result = check_select(session, select, store, now);
    match result {
        Ok(locked) => {
            let lock = SnlLock {
                urn: locked.urn.clone(),
                context_hash: locked.hash,
            };
            session.lock(locked, now);
            Ok(lock)
        }
        Err(e) => {
            fail_with(session, &e);
            Err(e)
        }
    }
}

fn check_select(
    session: &SemanticSession,
    select: &SnlSelect,
    store: &TrustStore,
    now: u64,
) -> Result<LockedContext, SnlError> {
    let chosen = &select.chosen;
    if !session.offered.contains(chosen) {
        return Err(SnlError::NotOffered(chosen.clone()));
    }
    if let Some(floor) = session.min_versions.get(chosen.domain()) {
        if chosen.version() < *floor {
            return Err(SnlError::DowngradeRefused {
                domain: chosen.domain().to_string(),
                floor: *floor,
            });
        }
    }
    if &select.signed_context.context.urn != chosen {
        return Err(SnlError::UntrustedContext(crate::authority::VerifyError::BadSignature));
    }
    store
        .verify(&select.signed_context, now)
        .map_err(SnlError::UntrustedContext)?;
    Ok(locked_context(&select.signed_context))
}

/// Responder: the lock must echo the selected URN and hash. Selected → Locked.
pub fn handle_lock(session: &mut SemanticSession, lock: &SnlLock, now: u64) -> Result<(), SnlError> {
    expect_state(session, Role::Responder, &SessionState::Selected)?;
    let candidate = session.candidate.clone().expect("Selected sessions hold a candidate");
    if candidate.urn != lock.urn || candidate.hash != lock.context_hash {
        let e = SnlError::HashMismatch;
        fail_with(session, &e);
        return Err(e);
    }
    session.lock(candidate, now);
    Ok(())
}

/// Peer gave up; adopt its reason so both ends agree.
pub fn handle_abort(session: &mut SemanticSession, abort: &SnlAbort) {
    let reason = abort
        .reason
        .parse()
        .unwrap_or(super::FailureReason::Malformed);
    session.fail(reason);
}

fn locked_context(sc: &SignedContext) -> LockedContext {
    LockedContext {
        urn: sc.context.urn.clone(),
        hash: sc.hash(),
        context: Arc::new(sc.context.clone()),
    }
}

fn expect_state(session: &SemanticSession, role: Role, state: &SessionState) -> Result<(), SnlError> {
    if session.role != role || &session.state != state {
        return Err(SnlError::WrongState {
            expected: state.name(),
            found: session.state.name(),
        });
    }
    Ok(())
}

fn fail_with(session: &mut SemanticSession, e: &SnlError) {
    if let Some(reason) = e.failure_reason() {
        session.fail(reason);
    }
}
