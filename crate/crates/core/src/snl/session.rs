use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::context::{ContextHash, ContextUrn, SharedContext};
use crate::wire::AgentId;

use super::messages::MinVersions;

/// Per-phase handshake timeout in simulated milliseconds.
pub const HANDSHAKE_TIMEOUT_MS: u64 = 5_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FailureReason {
    NoCommonContext,
    DowngradeRefused,
    UntrustedContext,
    NotOffered,
    HashMismatch,
    Malformed,
    Timeout,
}

impl FailureReason {
    pub const ALL: [FailureReason; 7] = [
        FailureReason::NoCommonContext,
        FailureReason::DowngradeRefused,
        FailureReason::UntrustedContext,
        FailureReason::NotOffered,
        FailureReason::HashMismatch,
        FailureReason::Malformed,
        FailureReason::Timeout,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FailureReason::NoCommonContext => "NoCommonContext",
            FailureReason::DowngradeRefused => "DowngradeRefused",
            FailureReason::UntrustedContext => "UntrustedContext",
            FailureReason::NotOffered => "NotOffered",
            FailureReason::HashMismatch => "HashMismatch",
            FailureReason::Malformed => "Malformed",
            FailureReason::Timeout => "Timeout",
        }
    }
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FailureReason {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FailureReason::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown failure reason {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Initiator,
    Responder,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SessionState {
    Idle,
    HelloSent,
    Selected,
    Locked,
    Failed(FailureReason),
}

impl SessionState {
    pub fn name(&self) -> &'static str {
        match self {
            SessionState::Idle => "Idle",
            SessionState::HelloSent => "HelloSent",
            SessionState::Selected => "Selected",
            SessionState::Locked => "Locked",
            SessionState::Failed(_) => "Failed",
        }
    }
}

/// The context both ends bound to. Fixed once set.
#[derive(Debug, Clone, PartialEq)]
pub struct LockedContext {
    pub urn: ContextUrn,
    pub hash: ContextHash,
    pub context: Arc<SharedContext>,
}

/// Sessions are cached under `(peer, urn, hash)`; a new hash means a new session.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SessionKey {
    pub peer: AgentId,
    pub urn: ContextUrn,
    pub hash: ContextHash,
}

/// Negotiation state between this agent and one peer.
#[derive(Debug, Clone)]
pub struct SemanticSession {
    pub(crate) peer: AgentId,
    pub(crate) role: Role,
    pub(crate) state: SessionState,
    /// What this side advertised (initiator) and its floors.
    pub(crate) offered: Vec<ContextUrn>,
    pub(crate) min_versions: MinVersions,
    pub(crate) candidate: Option<LockedContext>,
    pub(crate) locked: Option<LockedContext>,
    pub(crate) established_at: Option<u64>,
    pub(crate) phase_started: u64,
    pub(crate) validated_count: u64,
    pub(crate) disambiguation_cache: BTreeMap<(String, String), String>,
    /// Options received for a `(parameter, surface)` but not yet chosen from.
    pub(crate) received_options: BTreeMap<(String, String), Vec<String>>,
    /// Outstanding clarification QUERY ids and what they asked about.
    pub(crate) pending_clarifications: BTreeMap<String, (String, String)>,
}

impl SemanticSession {
    pub fn new(peer: AgentId, role: Role, now: u64) -> Self {
        SemanticSession {
            peer,
            role,
            state: SessionState::Idle,
            offered: Vec::new(),
            min_versions: MinVersions::new(),
            candidate: None,
            locked: None,
            established_at: None,
            phase_started: now,
            validated_count: 0,
            disambiguation_cache: BTreeMap::new(),
            received_options: BTreeMap::new(),
            pending_clarifications: BTreeMap::new(),
        }
    }

    pub fn peer(&self) -> &AgentId {
        &self.peer
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn is_locked(&self) -> bool {
        self.state == SessionState::Locked
    }

    pub fn failure(&self) -> Option<FailureReason> {
        match self.state {
            SessionState::Failed(r) => Some(r),
            _ => None,
        }
    }

    pub fn offered(&self) -> &[ContextUrn] {
        &self.offered
    }

    pub fn min_versions(&self) -> &MinVersions {
        &self.min_versions
    }

    pub fn locked(&self) -> Option<&LockedContext> {
        self.locked.as_ref()
    }

    pub fn urn(&self) -> Option<&ContextUrn> {
        self.locked.as_ref().map(|l| &l.urn)
    }

    pub fn context_hash(&self) -> Option<ContextHash> {
        self.locked.as_ref().map(|l| l.hash)
    }

    pub fn key(&self) -> Option<SessionKey> {
        self.locked.as_ref().map(|l| SessionKey {
            peer: self.peer.clone(),
            urn: l.urn.clone(),
            hash: l.hash,
        })
    }

    pub fn established_at(&self) -> Option<u64> {
        self.established_at
    }

    pub fn validated_count(&self) -> u64 {
        self.validated_count
    }

    pub fn disambiguation_cache(&self) -> &BTreeMap<(String, String), String> {
        &self.disambiguation_cache
    }

    pub fn cached_choice(&self, parameter: &str, surface: &str) -> Option<&str> {
        self.disambiguation_cache
            .get(&(parameter.to_string(), surface.to_string()))
            .map(String::as_str)
    }

    pub fn received_options(&self, parameter: &str, surface: &str) -> Option<&[String]> {
        self.received_options
            .get(&(parameter.to_string(), surface.to_string()))
            .map(Vec::as_slice)
    }

    /// Moves to `Failed`; a session that already failed keeps its first reason.
    pub fn fail(&mut self, reason: FailureReason) {
        if self.failure().is_none() {
            self.state = SessionState::Failed(reason);
        }
    }

    /// Fails a handshake that has waited too long in one phase.
    pub fn check_timeout(&mut self, now: u64) -> bool {
        let waiting = matches!(self.state, SessionState::HelloSent | SessionState::Selected);
        if waiting && now.saturating_sub(self.phase_started) >= HANDSHAKE_TIMEOUT_MS {
            self.fail(FailureReason::Timeout);
            return true;
        }
        false
    }

    pub(crate) fn lock(&mut self, locked: LockedContext, now: u64) {
        debug_assert!(self.locked.is_none());
        self.locked = Some(locked);
        self.candidate = None;
        self.established_at = Some(now);
        self.state = SessionState::Locked;
        self.phase_started = now;
    }
}
