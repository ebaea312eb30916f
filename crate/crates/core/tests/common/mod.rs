//! Shared oracles for the integration targets.
#![allow(dead_code)]

use agentwire::authority::{ContextRepo, TrustStore};
use agentwire::context::ContextUrn;
use agentwire::snl::{accept_hello, begin_handshake, handle_lock, handle_select, MinVersions, Role, SemanticSession};
use agentwire::wire::{AgentId, InteractionPattern};

/// Hand-enumerated legal (received, reply) pairs per pattern.
pub const REQUEST_REPLY: &[(&str, &str)] = &[
    ("REQUEST", "AGREE"),
    ("REQUEST", "REFUSE"),
    ("PROPOSE", "ACCEPT"),
    ("PROPOSE", "REJECT"),
    ("PROPOSE", "COUNTER_PROPOSE"),
    ("COUNTER_PROPOSE", "ACCEPT"),
    ("COUNTER_PROPOSE", "REJECT"),
    ("COUNTER_PROPOSE", "COUNTER_PROPOSE"),
    ("QUERY", "INFORM"),
    ("QUERY", "REFUSE"),
];

pub const PUBLISH_SUBSCRIBE: &[(&str, &str)] = &[("SUBSCRIBE", "AGREE"), ("SUBSCRIBE", "REFUSE")];

pub const AGGREGATION: &[(&str, &str)] = &[
    ("REQUEST", "AGREE"),
    ("REQUEST", "REFUSE"),
    ("QUERY", "INFORM"),
    ("QUERY", "REFUSE"),
];

pub const COLLABORATION_GROUP: &[(&str, &str)] = &[
    ("REQUEST", "AGREE"),
    ("REQUEST", "REFUSE"),
    ("SUBSCRIBE", "AGREE"),
    ("SUBSCRIBE", "REFUSE"),
    ("PROPOSE", "ACCEPT"),
    ("PROPOSE", "REJECT"),
    ("PROPOSE", "COUNTER_PROPOSE"),
    ("COUNTER_PROPOSE", "ACCEPT"),
    ("COUNTER_PROPOSE", "REJECT"),
    ("COUNTER_PROPOSE", "COUNTER_PROPOSE"),
    ("QUERY", "INFORM"),
    ("QUERY", "REFUSE"),
];

pub fn legal_pairs(pattern: InteractionPattern) -> &'static [(&'static str, &'static str)] {
    match pattern {
        InteractionPattern::RequestReply => REQUEST_REPLY,
        InteractionPattern::PublishSubscribe => PUBLISH_SUBSCRIBE,
        InteractionPattern::Aggregation => AGGREGATION,
        InteractionPattern::CollaborationGroup => COLLABORATION_GROUP,
    }
}

/// Runs the three-message handshake in memory; returns (initiator, responder).
pub fn locked_pair(urn: &ContextUrn) -> (SemanticSession, SemanticSession) {
    let store = TrustStore::fixture_default();
    let repo = ContextRepo::builtin();
    let none = MinVersions::new();
    let offer = [urn.clone()];
    let (hello, mut a) = begin_handshake(AgentId::new("b"), &offer, &none, [1; 16], 0).unwrap();
    let mut b = SemanticSession::new(AgentId::new("a"), Role::Responder, 10);
    let select = accept_hello(&mut b, &offer, &none, &hello, &store, &repo, [2; 16], 10).unwrap();
    let lock = handle_select(&mut a, &select, &store, 20).unwrap();
    handle_lock(&mut b, &lock, 30).unwrap();
    (a, b)
}
