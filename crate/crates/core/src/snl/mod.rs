//! Semantic negotiation: the HELLO/SELECT/LOCK handshake, outbound grounding
//! with clarification, and inbound validation against the locked context.

mod clarify;
mod handshake;
mod inbound;
mod messages;
mod session;

use thiserror::Error;

use crate::authority::VerifyError;
use crate::context::{ContextError, ContextUrn, ValidationReport};

pub use clarify::{
    answer_clarification, clarification_options, ground_outgoing, receive_options, resolve_choice,
    Addressing, Outgoing, MAX_ENUM_OPTIONS,
};
pub use handshake::{
    accept_hello, begin_handshake, choose_context, dedup_preserving_order, handle_abort, handle_hello,
    handle_lock, handle_select,
};
pub use inbound::{
    disambiguation_target, meta_context, rejection_content, validate_against, validate_incoming,
    Disposition, MessageKind, ValidatedMessage, CONTROL_CONCEPTS,
};
pub use messages::{
    is_handshake, MinVersions, Nonce, SnlAbort, SnlHello, SnlLock, SnlMessage, SnlSelect, PHASE_FIELD,
    SNL_FIELD,
};
pub use session::{
    FailureReason, LockedContext, Role, SemanticSession, SessionKey, SessionState, HANDSHAKE_TIMEOUT_MS,
};

pub const AMBIGUOUS_PARAMETER: &str = "ambiguous_parameter";
pub const PARAMETER_OPTIONS: &str = "parameter_options";
pub const SEMANTIC_REJECTION: &str = "semantic_rejection";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SnlError {
    #[error("no contexts to offer")]
    EmptyCapabilities,
    #[error("no common context")]
    NoCommonContext,
    #[error("only versions below {}.{} of {domain} are shared", floor.0, floor.1)]
    DowngradeRefused { domain: String, floor: (u32, u32) },
    #[error("context not trusted: {0}")]
    UntrustedContext(VerifyError),
    #[error("no signed copy of {0}")]
    UnknownContext(ContextUrn),
    #[error("{0} was never offered")]
    NotOffered(ContextUrn),
    #[error("lock does not match the selected context")]
    HashMismatch,
    #[error("session is {found}, expected {expected}")]
    WrongState {
        expected: &'static str,
        found: &'static str,
    },
    #[error("session is not locked")]
    NotLocked,
    #[error("malformed SNL message: {0}")]
    MalformedControl(String),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error("missing parameters: {}", .0.join(", "))]
    MissingParams(Vec<String>),
    #[error("invalid parameters: {0}")]
    InvalidParams(ValidationReport),
    #[error("unknown parameter {0}")]
    UnknownParameter(String),
    #[error("no options for {parameter} = {value:?}")]
    NoOptions { parameter: String, value: String },
    #[error("{choice:?} was not offered for {parameter}")]
    ChoiceNotOffered { parameter: String, choice: String },
    #[error("message context {found:?} does not match locked {expected}")]
    ContextMismatch {
        expected: ContextUrn,
        found: Option<ContextUrn>,
    },
    #[error("semantically invalid: {0}")]
    SemanticallyInvalid(ValidationReport),
}

impl SnlError {
    /// The session failure this error causes during a handshake, if any.
    pub fn failure_reason(&self) -> Option<FailureReason> {
        match self {
            SnlError::NoCommonContext => Some(FailureReason::NoCommonContext),
            SnlError::DowngradeRefused { .. } => Some(FailureReason::DowngradeRefused),
            SnlError::UntrustedContext(_) | SnlError::UnknownContext(_) => {
                Some(FailureReason::UntrustedContext)
            }
            SnlError::NotOffered(_) => Some(FailureReason::NotOffered),
            SnlError::HashMismatch => Some(FailureReason::HashMismatch),
            SnlError::MalformedControl(_) | SnlError::EmptyCapabilities => Some(FailureReason::Malformed),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::authority::{sign_with_fixture_key, ContextRepo, TrustStore};
    use crate::context::context_hash;
    use crate::fixtures;
    use crate::wire::{AgentId, ContentValue, Envelope, Performative};

    fn urn(s: &str) -> ContextUrn {
        format!("urn:contexts:{s}").parse().unwrap()
    }

    fn hello(supported: &[&str], min: &[(&str, (u32, u32))]) -> SnlHello {
        SnlHello {
            supported: supported.iter().map(|s| urn(s)).collect(),
            min_versions: min.iter().map(|(d, v)| (d.to_string(), *v)).collect(),
            nonce: [1; 16],
        }
    }

    fn urns(list: &[&str]) -> Vec<ContextUrn> {
        list.iter().map(|s| urn(s)).collect()
    }

    /// Runs a full handshake and returns (initiator, responder) sessions.
    fn locked_pair(ctx: &str) -> (SemanticSession, SemanticSession) {
        let store = TrustStore::fixture_default();
        let repo = ContextRepo::builtin();
        let (h, mut a) =
            begin_handshake(AgentId::new("b"), &urns(&[ctx]), &MinVersions::new(), [0; 16], 0).unwrap();
        let mut b = SemanticSession::new(AgentId::new("a"), Role::Responder, 0);
        let sel = accept_hello(&mut b, &urns(&[ctx]), &MinVersions::new(), &h, &store, &repo, [2; 16], 10)
            .unwrap();
        let lock = handle_select(&mut a, &sel, &store, 20).unwrap();
        handle_lock(&mut b, &lock, 30).unwrap();
        (a, b)
    }

    fn addr(id: &str) -> Addressing {
        Addressing {
            sender: AgentId::new("agent-travel-7"),
            receiver: AgentId::new("agent-booking-4"),
            message_id: id.to_string(),
            timestamp: 100,
        }
    }

    fn new_york_bindings() -> BTreeMap<String, ContentValue> {
        BTreeMap::from([
            ("origin_code".to_string(), "LAX".into()),
            ("dest_code".to_string(), "New York".into()),
            ("date".to_string(), "2025-11-04".into()),
        ])
    }

    #[test]
    fn hello_lists_in_preference_order() {
        let (h, s) = begin_handshake(
            AgentId::new("b"),
            &urns(&["travel:v2.1", "supplyChain:v1.0"]),
            &MinVersions::new(),
            [0; 16],
            0,
        )
        .unwrap();
        assert_eq!(h.supported, urns(&["travel:v2.1", "supplyChain:v1.0"]));
        assert_eq!(s.state(), &SessionState::HelloSent);
        let back = SnlMessage::from_content(&SnlMessage::Hello(h.clone()).to_content()).unwrap();
        assert_eq!(back, SnlMessage::Hello(h));
    }

    #[test]
    fn empty_capabilities() {
        assert_eq!(
            begin_handshake(AgentId::new("b"), &[], &MinVersions::new(), [0; 16], 0).unwrap_err(),
            SnlError::EmptyCapabilities
        );
    }

    #[test]
    fn duplicates_removed_keeping_first() {
        let (h, _) = begin_handshake(
            AgentId::new("b"),
            &urns(&["payment:v2.0", "travel:v2.1", "payment:v2.0", "travel:v2.1"]),
            &MinVersions::from([("payment".into(), (2, 0)), ("weather".into(), (1, 0))]),
            [0; 16],
            0,
        )
        .unwrap();
        assert_eq!(h.supported, urns(&["payment:v2.0", "travel:v2.1"]));
        assert_eq!(h.min_versions.keys().collect::<Vec<_>>(), ["payment"]);
    }

    #[test]
    fn responder_picks_shared_supply_chain() {
        let h = hello(&["travel:v2.1", "supplyChain:v1.0"], &[]);
        let sel = handle_hello(
            &urns(&["supplyChain:v1.0"]),
            &MinVersions::new(),
            &h,
            &TrustStore::fixture_default(),
            &ContextRepo::builtin(),
            [0; 16],
            0,
        )
        .unwrap();
        assert_eq!(sel.chosen, urn("supplyChain:v1.0"));
        assert_eq!(sel.signed_context.context.urn, sel.chosen);
    }

    #[test]
    fn disjoint_lists() {
        let h = hello(&["travel:v2.1"], &[]);
        assert_eq!(
            choose_context(&urns(&["supplyChain:v1.0"]), &MinVersions::new(), &h),
            Err(SnlError::NoCommonContext)
        );
    }

    #[test]
    fn stripped_hello_is_refused() {
        let h = hello(&["payment:v1.0"], &[]);
        let local = urns(&["payment:v2.0", "payment:v1.0"]);
        let min = MinVersions::from([("payment".into(), (2, 0))]);
        assert!(matches!(
            choose_context(&local, &min, &h),
            Err(SnlError::DowngradeRefused { .. })
        ));
        let mut b = SemanticSession::new(AgentId::new("a"), Role::Responder, 0);
        let r = accept_hello(
            &mut b,
            &local,
            &min,
            &h,
            &TrustStore::fixture_default(),
            &ContextRepo::builtin(),
            [0; 16],
            0,
        );
        assert!(r.is_err());
        assert_eq!(b.failure(), Some(FailureReason::DowngradeRefused));
    }

    #[test]
    fn highest_shared_version_in_domain() {
        let h = hello(&["payment:v1.0", "payment:v2.0"], &[]);
        let local = urns(&["payment:v1.0", "payment:v2.0"]);
        assert_eq!(choose_context(&local, &MinVersions::new(), &h), Ok(urn("payment:v2.0")));
        // the peer's floor binds the responder too
        let h = hello(&["payment:v1.0", "payment:v2.0"], &[("payment", (2, 0))]);
        assert_eq!(choose_context(&urns(&["payment:v1.0"]), &MinVersions::new(), &h).unwrap_err(),
            SnlError::DowngradeRefused { domain: "payment".into(), floor: (2, 0) });
    }

    #[test]
    fn full_handshake_locks_identical_hash() {
        let (a, b) = locked_pair("supplyChain:v1.0");
        assert!(a.is_locked() && b.is_locked());
        assert_eq!(a.key().unwrap().hash, context_hash(&fixtures::supply_chain_v1_0()));
        assert_eq!(a.urn(), b.urn());
        assert_eq!(a.context_hash(), b.context_hash());
        assert_eq!(a.established_at(), Some(20));
        assert_eq!(b.established_at(), Some(30));
    }

    #[test]
    fn select_not_offered() {
        let store = TrustStore::fixture_default();
        let (_, mut a) =
            begin_handshake(AgentId::new("b"), &urns(&["travel:v2.1"]), &MinVersions::new(), [0; 16], 0)
                .unwrap();
        let sel = SnlSelect {
            chosen: urn("payment:v2.0"),
            signed_context: sign_with_fixture_key(&fixtures::payment_v2_0()),
            responder_nonce: [0; 16],
        };
        assert_eq!(
            handle_select(&mut a, &sel, &store, 0),
            Err(SnlError::NotOffered(urn("payment:v2.0")))
        );
        assert_eq!(a.failure(), Some(FailureReason::NotOffered));
    }

    #[test]
    fn tampered_select_untrusted() {
        let store = TrustStore::fixture_default();
        let (_, mut a) =
            begin_handshake(AgentId::new("b"), &urns(&["payment:v1.0"]), &MinVersions::new(), [0; 16], 0)
                .unwrap();
        let mut sc = sign_with_fixture_key(&fixtures::payment_v1_0());
        sc.context = fixtures::payment_v1_0_poisoned();
        let sel = SnlSelect {
            chosen: urn("payment:v1.0"),
            signed_context: sc,
            responder_nonce: [0; 16],
        };
        assert!(matches!(handle_select(&mut a, &sel, &store, 0), Err(SnlError::UntrustedContext(_))));
        assert_eq!(a.failure(), Some(FailureReason::UntrustedContext));
        assert!(a.locked().is_none());
    }

    #[test]
    fn initiator_refuses_downgrade() {
        let store = TrustStore::fixture_default();
        let (_, mut a) = begin_handshake(
            AgentId::new("b"),
            &urns(&["payment:v2.0", "payment:v1.0"]),
            &MinVersions::from([("payment".into(), (2, 0))]),
            [0; 16],
            0,
        )
        .unwrap();
        let sel = SnlSelect {
            chosen: urn("payment:v1.0"),
            signed_context: sign_with_fixture_key(&fixtures::payment_v1_0()),
            responder_nonce: [0; 16],
        };
        assert!(matches!(handle_select(&mut a, &sel, &store, 0), Err(SnlError::DowngradeRefused { .. })));
    }

    #[test]
    fn wrong_state_leaves_session_alone() {
        let (mut a, _) = locked_pair("travel:v2.1");
        let sel = SnlSelect {
            chosen: urn("travel:v2.1"),
            signed_context: sign_with_fixture_key(&fixtures::travel_v2_1()),
            responder_nonce: [0; 16],
        };
        assert!(matches!(
            handle_select(&mut a, &sel, &TrustStore::fixture_default(), 0),
            Err(SnlError::WrongState { .. })
        ));
        assert!(a.is_locked());
    }

    #[test]
    fn lock_hash_mismatch() {
        let store = TrustStore::fixture_default();
        let repo = ContextRepo::builtin();
        let h = hello(&["travel:v2.1"], &[]);
        let mut b = SemanticSession::new(AgentId::new("a"), Role::Responder, 0);
        accept_hello(&mut b, &urns(&["travel:v2.1"]), &MinVersions::new(), &h, &store, &repo, [0; 16], 0)
            .unwrap();
        let lock = SnlLock {
            urn: urn("travel:v2.1"),
            context_hash: context_hash(&fixtures::travel_v2_0()),
        };
        assert_eq!(handle_lock(&mut b, &lock, 0), Err(SnlError::HashMismatch));
        assert_eq!(b.failure(), Some(FailureReason::HashMismatch));
    }

    #[test]
    fn phase_timeout() {
        let (_, mut a) =
            begin_handshake(AgentId::new("b"), &urns(&["travel:v2.1"]), &MinVersions::new(), [0; 16], 100)
                .unwrap();
        assert!(!a.check_timeout(100 + HANDSHAKE_TIMEOUT_MS - 1));
        assert!(a.check_timeout(100 + HANDSHAKE_TIMEOUT_MS));
        assert_eq!(a.failure(), Some(FailureReason::Timeout));
    }

    #[test]
    fn abort_adopts_reason() {
        let (_, mut a) =
            begin_handshake(AgentId::new("b"), &urns(&["travel:v2.1"]), &MinVersions::new(), [0; 16], 0)
                .unwrap();
        handle_abort(&mut a, &SnlAbort { reason: "DowngradeRefused".into() });
        assert_eq!(a.failure(), Some(FailureReason::DowngradeRefused));
    }

    #[test]
    fn new_york_needs_clarification() {
        let (mut a, b) = locked_pair("travel:v2.1");
        let out = ground_outgoing(&mut a, "bookFlight", &new_york_bindings(), &addr("m1")).unwrap();
        let Outgoing::Clarification { envelope, .. } = &out else {
            panic!("expected clarification, got {out:?}");
        };
        assert_eq!(envelope.performative, Performative::Query);
        assert_eq!(
            envelope.content,
            ContentValue::map([
                ("concept", "ambiguous_parameter".into()),
                ("parameter", "dest_code".into()),
                ("value", "New York".into()),
            ])
        );
        let inform = answer_clarification(&b, envelope, "m2", 110).unwrap();
        assert_eq!(
            inform.content.get("options"),
            Some(&ContentValue::list(["JFK", "LGA", "EWR"].map(ContentValue::from)))
        );
        let (param, surface, options) = receive_options(&mut a, &inform).unwrap();
        assert_eq!((param.as_str(), surface.as_str()), ("dest_code", "New York"));
        assert_eq!(options, ["JFK", "LGA", "EWR"]);
        assert!(matches!(
            resolve_choice(&mut a, "dest_code", "New York", "SFO"),
            Err(SnlError::ChoiceNotOffered { .. })
        ));
        resolve_choice(&mut a, "dest_code", "New York", "JFK").unwrap();
        let Outgoing::Request(req) = ground_outgoing(&mut a, "bookFlight", &new_york_bindings(), &addr("m3")).unwrap()
        else {
            panic!("cache should resolve New York");
        };
        assert_eq!(req.content.get_path("params.dest_code"), Some(&"JFK".into()));
        assert_eq!(req.context_urn, Some(urn("travel:v2.1")));
    }

    #[test]
    fn cache_survives_many_messages() {
        let (mut a, mut b) = locked_pair("travel:v2.1");
        a.received_options
            .insert(("dest_code".into(), "New York".into()), vec!["JFK".into(), "LGA".into()]);
        resolve_choice(&mut a, "dest_code", "New York", "JFK").unwrap();
        for i in 0..1000 {
            let out = ground_outgoing(&mut a, "bookFlight", &new_york_bindings(), &addr(&format!("m{i}"))).unwrap();
            let Outgoing::Request(env) = out else { panic!("cache miss at {i}") };
            validate_incoming(&mut b, &env).unwrap();
        }
        assert_eq!(b.validated_count(), 1000);
        assert_eq!(a.cached_choice("dest_code", "New York"), Some("JFK"));
    }

    #[test]
    fn clarification_option_sources() {
        let (a, _) = locked_pair("travel:v2.1");
        assert_eq!(clarification_options(&a, "dest_code", "San Francisco").unwrap(), ["SFO"]);
        assert_eq!(clarification_options(&a, "dest_code", "Atlantis").unwrap().len(), 10);
        assert_eq!(
            clarification_options(&a, "foo", "x"),
            Err(SnlError::UnknownParameter("foo".into()))
        );
        assert!(matches!(clarification_options(&a, "date", "soon"), Err(SnlError::NoOptions { .. })));
    }

    #[test]
    fn grounding_errors_surface() {
        let (mut a, _) = locked_pair("travel:v2.1");
        let partial = BTreeMap::from([("dest_code".to_string(), "JFK".into())]);
        assert!(matches!(
            ground_outgoing(&mut a, "bookFlight", &partial, &addr("x")),
            Err(SnlError::MissingParams(_))
        ));
        assert!(matches!(
            ground_outgoing(&mut a, "bookHotel", &partial, &addr("x")),
            Err(SnlError::Context(ContextError::UnknownTask(_)))
        ));
    }

    fn supply_envelope(content: ContentValue) -> Envelope {
        Envelope::initiate("retailer", "p1", vec![AgentId::new("topic:supplyChain")], Performative::Publish, content, 0)
            .with_context(Some(urn("supplyChain:v1.0")))
    }

    fn supply_payload() -> ContentValue {
        crate::wire::parse_text(include_bytes!("../../fixtures/wire/supply_payload.json")).unwrap()
    }

    #[test]
    fn supply_payload_validates_with_three_concepts() {
        let (_, mut b) = locked_pair("supplyChain:v1.0");
        let msg = validate_incoming(&mut b, &supply_envelope(supply_payload())).unwrap();
        assert_eq!(
            msg.kind,
            MessageKind::Coordinative(BTreeMap::from([
                ("my_decision".into(), "current_decision".into()),
                ("my_flexibility".into(), "decision_contingency".into()),
                ("my_reasoning".into(), "local_observation".into()),
            ]))
        );
        assert_eq!(b.validated_count(), 1);
        // idempotent
        let again = validate_against(&fixtures::supply_chain_v1_0(), Performative::Publish, msg.content());
        assert_eq!(again, Ok(msg.kind));
    }

    #[test]
    fn my_mood_is_semantically_invalid() {
        let (_, mut b) = locked_pair("supplyChain:v1.0");
        let mut content = supply_payload();
        content.as_map_mut().unwrap().insert("my_mood".into(), "happy".into());
        assert!(matches!(
            validate_incoming(&mut b, &supply_envelope(content)),
            Err(SnlError::SemanticallyInvalid(_))
        ));
        assert_eq!(b.validated_count(), 0);
    }

    #[test]
    fn context_mismatch() {
        let (_, mut b) = locked_pair("supplyChain:v1.0");
        let env = supply_envelope(supply_payload()).with_context(Some(urn("travel:v2.1")));
        assert!(matches!(validate_incoming(&mut b, &env), Err(SnlError::ContextMismatch { .. })));
        let env = supply_envelope(supply_payload()).with_context(None);
        assert!(matches!(validate_incoming(&mut b, &env), Err(SnlError::ContextMismatch { .. })));
    }

    #[test]
    fn control_content_uses_meta_schema() {
        let (_, mut b) = locked_pair("travel:v2.1");
        let q = Envelope::initiate(
            "agent-travel-7",
            "q",
            vec![AgentId::new("agent-booking-4")],
            Performative::Query,
            ContentValue::map([
                ("concept", "ambiguous_parameter".into()),
                ("parameter", "dest_code".into()),
                ("value", "New York".into()),
            ]),
            0,
        )
        .with_context(Some(urn("travel:v2.1")));
        let msg = validate_incoming(&mut b, &q).unwrap();
        assert_eq!(msg.kind, MessageKind::Control("ambiguous_parameter".into()));
        let mut bad = q.clone();
        bad.content.as_map_mut().unwrap().insert("extra".into(), 1i64.into());
        assert!(matches!(validate_incoming(&mut b, &bad), Err(SnlError::SemanticallyInvalid(_))));
    }

    #[test]
    fn request_validation_and_disambiguation_target() {
        let (_, mut b) = locked_pair("travel:v2.1");
        let mk = |dest: &str| {
            Envelope::initiate(
                "agent-travel-7",
                "r",
                vec![AgentId::new("agent-booking-4")],
                Performative::Request,
                ContentValue::map([
                    ("task", "bookFlight".into()),
                    (
                        "params",
                        ContentValue::map([
                            ("origin_code", "LAX".into()),
                            ("dest_code", dest.into()),
                            ("date", "2025-11-04".into()),
                        ]),
                    ),
                ]),
                0,
            )
            .with_context(Some(urn("travel:v2.1")))
        };
        let ok = validate_incoming(&mut b, &mk("JFK")).unwrap();
        assert!(matches!(ok.kind, MessageKind::Task { ref task, .. } if task == "bookFlight"));
        assert_eq!(ok.concepts(), ["bookFlight"]);
        let bad = mk("New York");
        assert!(matches!(validate_incoming(&mut b, &bad), Err(SnlError::SemanticallyInvalid(_))));
        assert_eq!(
            disambiguation_target(&b, &bad),
            Some(("dest_code".to_string(), "New York".to_string()))
        );
        assert_eq!(disambiguation_target(&b, &mk("Atlantis")), None);
    }

    #[test]
    fn rejection_content_matches_meta_schema() {
        let report = match validate_against(
            &fixtures::supply_chain_v1_0(),
            Performative::Publish,
            &ContentValue::map([("my_mood", "happy".into())]),
        ) {
            Err(r) => r,
            Ok(_) => panic!("my_mood accepted"),
        };
        let c = rejection_content("semantically invalid", Some(&report));
        assert_eq!(
            validate_against(&fixtures::supply_chain_v1_0(), Performative::Refuse, &c),
            Ok(MessageKind::Control("semantic_rejection".into()))
        );
    }

    #[test]
    fn handshake_messages_round_trip() {
        let sel = SnlMessage::Select(SnlSelect {
            chosen: urn("travel:v2.1"),
            signed_context: sign_with_fixture_key(&fixtures::travel_v2_1()),
            responder_nonce: [9; 16],
        });
        let lock = SnlMessage::Lock(SnlLock {
            urn: urn("travel:v2.1"),
            context_hash: context_hash(&fixtures::travel_v2_1()),
        });
        let abort = SnlMessage::Abort(SnlAbort { reason: "Timeout".into() });
        for m in [sel, lock, abort] {
            let c = m.to_content();
            assert!(is_handshake(&c));
            assert_eq!(SnlMessage::from_content(&c).unwrap(), m);
        }
        assert!(!is_handshake(&ContentValue::map([("snl", "yes".into())])));
    }
}
