use std::any::Any;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::authority::{ContextRepo, TrustStore};
use crate::context::ContextUrn;
use crate::firewall::{Firewall, FirewallVerdict, PolicySet};
use crate::simnet::{Agent, Layer, SimContext};
use crate::snl::{
    accept_hello, answer_clarification, begin_handshake, disambiguation_target, ground_outgoing,
    handle_abort, handle_lock, handle_select, is_handshake, receive_options, rejection_content,
    resolve_choice, validate_incoming, Addressing, Disposition, FailureReason, MessageKind, MinVersions,
    Outgoing, Role, SemanticSession, SnlAbort, SnlError, SnlMessage, ValidatedMessage,
    HANDSHAKE_TIMEOUT_MS, AMBIGUOUS_PARAMETER, PARAMETER_OPTIONS,
};
use crate::wire::{
    legal_reply, AgentId, ContentValue, Conversation, Envelope, InteractionPattern, Performative,
};

/// Static configuration of one SNL-speaking agent.
#[derive(Debug, Clone)]
pub struct AgentConfig {
    pub id: AgentId,
    pub supported: Vec<ContextUrn>,
    pub min_versions: MinVersions,
    pub policies: PolicySet,
    pub disposition: Disposition,
    pub pattern: InteractionPattern,
    /// Peers to open a handshake with at start.
    pub handshake_with: Vec<AgentId>,
    /// Credentials this agent knows each peer to hold.
    pub peer_credentials: BTreeMap<AgentId, BTreeSet<String>>,
    pub store: Arc<TrustStore>,
    pub repo: Arc<ContextRepo>,
}

impl AgentConfig {
    pub fn new(id: impl Into<AgentId>, supported: Vec<ContextUrn>) -> Self {
        AgentConfig {
            id: id.into(),
            supported,
            min_versions: MinVersions::new(),
            policies: PolicySet::reference(),
            disposition: Disposition::Reject,
            pattern: InteractionPattern::RequestReply,
            handshake_with: Vec::new(),
            peer_credentials: BTreeMap::new(),
            store: Arc::new(TrustStore::fixture_default()),
            repo: Arc::new(ContextRepo::builtin()),
        }
    }
}

/// Scripted decision-making standing in for an LLM. Every callback that
/// receives a message counts as one logic invocation.
pub trait AgentLogic: Any {
    fn on_start(&mut self, _rt: &mut Runtime<'_, '_>) {}
    fn on_locked(&mut self, _peer: &AgentId, _rt: &mut Runtime<'_, '_>) {}
    fn on_session_failed(&mut self, _peer: &AgentId, _reason: FailureReason, _rt: &mut Runtime<'_, '_>) {}
    fn on_message(&mut self, _msg: &ValidatedMessage, _rt: &mut Runtime<'_, '_>) {}
    /// Picks among clarification options; `None` abandons the task.
    fn choose_option(&mut self, _parameter: &str, _surface: &str, options: &[String]) -> Option<String> {
        options.first().cloned()
    }
    fn on_timer(&mut self, _token: u64, _rt: &mut Runtime<'_, '_>) {}
    fn as_any(&self) -> &dyn Any;
}

/// Logic that accepts everything and does nothing.
#[derive(Debug, Default)]
pub struct Passive;

impl AgentLogic for Passive {
    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[derive(Debug, Clone)]
struct PendingTask {
    peer: AgentId,
    task: String,
    bindings: BTreeMap<String, ContentValue>,
}

/// Timer tokens below this belong to the runtime.
const LOGIC_TIMER_BASE: u64 = 1 << 32;

/// Protocol state of an agent, separate from its logic.
pub struct AgentCore {
    config: AgentConfig,
    sessions: BTreeMap<AgentId, SemanticSession>,
    /// peer → (handshake conversation id, last message id we saw or sent)
    handshakes: BTreeMap<AgentId, (String, String)>,
    conversations: BTreeMap<String, Conversation>,
    firewall: Firewall,
    next_msg: u64,
    timers: BTreeMap<u64, AgentId>,
    pending_tasks: BTreeMap<String, PendingTask>,
    /// clarification QUERY id → the invalid REQUEST it is about
    pending_disambiguations: BTreeMap<String, Envelope>,
    failures: Vec<(AgentId, FailureReason)>,
}

impl AgentCore {
    fn new(config: AgentConfig) -> Self {
        let firewall = Firewall::new(config.policies.clone()).expect("agent policies are valid");
        AgentCore {
            config,
            sessions: BTreeMap::new(),
            handshakes: BTreeMap::new(),
            conversations: BTreeMap::new(),
            firewall,
            next_msg: 0,
            timers: BTreeMap::new(),
            pending_tasks: BTreeMap::new(),
            pending_disambiguations: BTreeMap::new(),
            failures: Vec::new(),
        }
    }

    fn message_id(&mut self) -> String {
        self.next_msg += 1;
        format!("{}-{}", self.config.id, self.next_msg)
    }

    fn observe(&mut self, env: &Envelope) -> Result<(), String> {
        let pattern = self.config.pattern;
        self.conversations
            .entry(env.conversation_id.clone())
            .or_insert_with(|| Conversation::new(env.conversation_id.clone(), pattern))
            .observe(env)
            .map_err(|e| e.to_string())
    }
}

/// What agent logic can do while handling a callback.
pub struct Runtime<'a, 'b> {
    core: &'a mut AgentCore,
    ctx: &'a mut SimContext<'b>,
}

impl Runtime<'_, '_> {
    pub fn now(&self) -> u64 {
        self.ctx.now()
    }

    pub fn id(&self) -> &AgentId {
        &self.core.config.id
    }

    pub fn session(&self, peer: &AgentId) -> Option<&SemanticSession> {
        self.core.sessions.get(peer)
    }

    pub fn locked_peers(&self) -> Vec<AgentId> {
        self.core
            .sessions
            .iter()
            .filter(|(_, s)| s.is_locked())
            .map(|(p, _)| p.clone())
            .collect()
    }

    /// Clarification rounds started so far, across the simulation.
    pub fn clarification_rounds(&mut self) -> u64 {
        self.ctx.metrics().clarification_rounds
    }

    pub fn set_timer(&mut self, delay_ms: u64, token: u64) {
        self.ctx.set_timer(delay_ms, LOGIC_TIMER_BASE + token);
    }

    pub fn note(&mut self, summary: impl Into<String>) {
        self.ctx.note(Layer::L8, summary);
    }

    /// Grounds and sends a task; an ambiguity sends a clarification QUERY
    /// instead and the task is resent once the choice is made.
    pub fn request_task(
        &mut self,
        peer: &AgentId,
        task: &str,
        bindings: BTreeMap<String, ContentValue>,
    ) -> Result<(), SnlError> {
        send_task(
            self.core,
            self.ctx,
            PendingTask {
                peer: peer.clone(),
                task: task.to_string(),
                bindings,
            },
        )
    }

    /// Replies in the message's conversation. Returns false (and sends
    /// nothing) when the pattern does not allow this reply.
    pub fn reply(&mut self, to: &Envelope, performative: Performative, content: ContentValue) -> bool {
        send_reply(self.core, self.ctx, to, performative, content)
    }

    /// Publishes to a topic under the given (pairwise-locked) context.
    pub fn publish(&mut self, topic: &AgentId, urn: &ContextUrn, content: ContentValue) -> bool {
        let id = self.core.message_id();
        let env = Envelope::initiate(
            self.core.config.id.clone(),
            id,
            vec![topic.clone()],
            Performative::Publish,
            content,
            self.ctx.now(),
        )
        .with_context(Some(urn.clone()));
        send_new(self.core, self.ctx, env)
    }
}

fn send_new(core: &mut AgentCore, ctx: &mut SimContext<'_>, env: Envelope) -> bool {
    if let Err(e) = core.observe(&env) {
        ctx.note(Layer::L8, format!("not sent: {e}"));
        return false;
    }
    ctx.send(env);
    true
}

fn send_reply(
    core: &mut AgentCore,
    ctx: &mut SimContext<'_>,
    to: &Envelope,
    performative: Performative,
    content: ContentValue,
) -> bool {
    if !legal_reply(core.config.pattern, to.performative, performative) {
        return false;
    }
    let id = core.message_id();
    let env = to.reply(core.config.id.clone(), id, performative, content, ctx.now());
    send_new(core, ctx, env)
}

fn send_task(core: &mut AgentCore, ctx: &mut SimContext<'_>, pending: PendingTask) -> Result<(), SnlError> {
    let session = core.sessions.get_mut(&pending.peer).ok_or(SnlError::NotLocked)?;
    core.next_msg += 1;
    let addr = Addressing {
        sender: core.config.id.clone(),
        receiver: pending.peer.clone(),
        message_id: format!("{}-{}", core.config.id, core.next_msg),
        timestamp: ctx.now(),
    };
    let out = ground_outgoing(session, &pending.task, &pending.bindings, &addr)?;
    if let Outgoing::Clarification { .. } = &out {
        ctx.metrics().clarification_rounds += 1;
        core.pending_tasks.insert(addr.message_id.clone(), pending);
    }
    send_new(core, ctx, out.envelope().clone());
    Ok(())
}

/// An agent speaking L8 + L9, driven by a logic script.
pub struct SnlAgent {
    core: AgentCore,
    logic: Box<dyn AgentLogic>,
}

impl SnlAgent {
    pub fn new(config: AgentConfig, logic: impl AgentLogic) -> Self {
        SnlAgent {
            core: AgentCore::new(config),
            logic: Box::new(logic),
        }
    }

    pub fn logic<T: AgentLogic>(&self) -> Option<&T> {
        self.logic.as_any().downcast_ref::<T>()
    }

    pub fn session(&self, peer: &str) -> Option<&SemanticSession> {
        self.core.sessions.get(peer)
    }

    pub fn sessions(&self) -> impl Iterator<Item = &SemanticSession> {
        self.core.sessions.values()
    }

    pub fn failures(&self) -> &[(AgentId, FailureReason)] {
        &self.core.failures
    }

    pub fn firewall(&self) -> &Firewall {
        &self.core.firewall
    }

    pub fn config(&self) -> &AgentConfig {
        &self.core.config
    }

    fn rt<'a, 'b>(core: &'a mut AgentCore, ctx: &'a mut SimContext<'b>) -> Runtime<'a, 'b> {
        Runtime { core, ctx }
    }

    fn open_handshake(&mut self, peer: AgentId, ctx: &mut SimContext<'_>) {
        let nonce = ctx.random_bytes::<16>();
        let now = ctx.now();
        let cfg = &self.core.config;
        let (hello, session) = match begin_handshake(peer.clone(), &cfg.supported, &cfg.min_versions, nonce, now) {
            Ok(x) => x,
            Err(e) => {
                ctx.note(Layer::L9, format!("cannot offer contexts to {peer}: {e}"));
                return;
            }
        };
        self.core.sessions.insert(peer.clone(), session);
        let id = self.core.message_id();
        let env = Envelope::initiate(
            self.core.config.id.clone(),
            id.clone(),
            vec![peer.clone()],
            Performative::Query,
            SnlMessage::Hello(hello).to_content(),
            now,
        );
        self.core.handshakes.insert(peer.clone(), (env.conversation_id.clone(), id));
        ctx.send(env);
        self.arm_timeout(peer, ctx);
    }

    fn arm_timeout(&mut self, peer: AgentId, ctx: &mut SimContext<'_>) {
        let token = self.core.timers.len() as u64 + 1;
        self.core.timers.insert(token, peer);
        ctx.set_timer(HANDSHAKE_TIMEOUT_MS, token);
    }

    fn send_handshake(&mut self, to: &Envelope, msg: SnlMessage, ctx: &mut SimContext<'_>) {
        let id = self.core.message_id();
        let env = to.reply(self.core.config.id.clone(), id.clone(), msg.performative(), msg.to_content(), ctx.now());
        self.core
            .handshakes
            .insert(to.sender_id.clone(), (env.conversation_id.clone(), id));
        ctx.send(env);
    }

    fn record_failure(&mut self, peer: &AgentId, ctx: &mut SimContext<'_>) {
        let Some(reason) = self.core.sessions.get(peer).and_then(SemanticSession::failure) else {
            return;
        };
        self.core.failures.push((peer.clone(), reason));
        ctx.metrics().record_failure(reason.as_str());
        ctx.verdict(format!("failed:{reason}"));
        let SnlAgent { core, logic } = self;
        logic.on_session_failed(peer, reason, &mut Self::rt(core, ctx));
    }

    fn on_locked(&mut self, peer: &AgentId, ctx: &mut SimContext<'_>) {
        let urn = self.core.sessions[peer].urn().expect("locked").to_string();
        ctx.verdict(format!("locked:{urn}"));
        let SnlAgent { core, logic } = self;
        logic.on_locked(peer, &mut Self::rt(core, ctx));
    }

    fn handle_handshake(&mut self, env: Envelope, ctx: &mut SimContext<'_>) {
        let peer = env.sender_id.clone();
        let now = ctx.now();
        let msg = match SnlMessage::from_content(&env.content) {
            Ok(m) => m,
            Err(e) => {
                ctx.verdict("snl-malformed");
                if let Some(s) = self.core.sessions.get_mut(&peer) {
                    if !s.is_locked() && s.failure().is_none() {
                        s.fail(FailureReason::Malformed);
                        self.record_failure(&peer, ctx);
                    }
                }
                let abort = SnlMessage::Abort(SnlAbort { reason: e.failure_reason().unwrap_or(FailureReason::Malformed).to_string() });
                self.send_handshake(&env, abort, ctx);
                return;
            }
        };
        let was_failed = self.core.sessions.get(&peer).is_some_and(|s| s.failure().is_some());
        match msg {
            SnlMessage::Hello(hello) => {
                let mut session = SemanticSession::new(peer.clone(), Role::Responder, now);
                let nonce = ctx.random_bytes::<16>();
                let cfg = &self.core.config;
                let result = accept_hello(
                    &mut session,
                    &cfg.supported,
                    &cfg.min_versions,
                    &hello,
                    &cfg.store,
                    &cfg.repo,
                    nonce,
                    now,
                );
                self.core.sessions.insert(peer.clone(), session);
                match result {
                    Ok(select) => {
                        self.send_handshake(&env, SnlMessage::Select(select), ctx);
                        self.arm_timeout(peer, ctx);
                    }
                    Err(e) => self.abort(&env, &peer, &e, ctx),
                }
            }
            SnlMessage::Select(select) => {
                let Some(session) = self.core.sessions.get_mut(&peer) else {
                    ctx.verdict("snl-unexpected");
                    return;
                };
                let store = self.core.config.store.clone();
                match handle_select(session, &select, &store, now) {
                    Ok(lock) => {
                        self.send_handshake(&env, SnlMessage::Lock(lock), ctx);
                        self.on_locked(&peer, ctx);
                    }
                    Err(SnlError::WrongState { .. }) => ctx.verdict("snl-wrong-state"),
                    Err(e) => self.abort(&env, &peer, &e, ctx),
                }
            }
            SnlMessage::Lock(lock) => {
                let Some(session) = self.core.sessions.get_mut(&peer) else {
                    ctx.verdict("snl-unexpected");
                    return;
                };
                match handle_lock(session, &lock, now) {
                    Ok(()) => {
                        ctx.metrics().handshakes_completed += 1;
                        self.on_locked(&peer, ctx);
                    }
                    Err(SnlError::WrongState { .. }) => ctx.verdict("snl-wrong-state"),
                    Err(e) => self.abort(&env, &peer, &e, ctx),
                }
            }
            SnlMessage::Abort(abort) => {
                if let Some(session) = self.core.sessions.get_mut(&peer) {
                    if session.is_locked() {
                        ctx.verdict("snl-abort-ignored");
                        return;
                    }
                    handle_abort(session, &abort);
                    if !was_failed {
                        self.record_failure(&peer, ctx);
                    }
                }
            }
        }
    }

    fn abort(&mut self, env: &Envelope, peer: &AgentId, e: &SnlError, ctx: &mut SimContext<'_>) {
        ctx.verdict(format!("snl-error:{e}"));
        self.record_failure(peer, ctx);
        let reason = e.failure_reason().unwrap_or(FailureReason::Malformed);
        self.send_handshake(env, SnlMessage::Abort(SnlAbort { reason: reason.to_string() }), ctx);
    }

    fn refuse(&mut self, env: &Envelope, reason: &str, report: Option<&crate::context::ValidationReport>, ctx: &mut SimContext<'_>) {
        if send_reply(&mut self.core, ctx, env, Performative::Refuse, rejection_content(reason, report)) {
            ctx.verdict("refused");
        }
    }

    fn handle_message(&mut self, env: Envelope, ctx: &mut SimContext<'_>) {
        if let Err(e) = self.core.observe(&env) {
            ctx.verdict(format!("conversation-error:{e}"));
            return;
        }
        let peer = env.sender_id.clone();
        let Some(session) = self.core.sessions.get_mut(&peer).filter(|s| s.is_locked()) else {
            ctx.verdict("no-session");
            return;
        };
        let msg = match validate_incoming(session, &env) {
            Ok(m) => m,
            Err(e) => {
                ctx.metrics().validations_failed += 1;
                ctx.verdict("invalid");
                let report = match &e {
                    SnlError::SemanticallyInvalid(r) => Some(r.clone()),
                    _ => None,
                };
                if self.core.config.disposition == Disposition::Disambiguate
                    && env.performative == Performative::Request
                {
                    if let Some((param, surface)) = disambiguation_target(&self.core.sessions[&peer], &env) {
                        self.ask_sender(&env, &param, &surface, ctx);
                        return;
                    }
                }
                self.refuse(&env, &e.to_string(), report.as_ref(), ctx);
                return;
            }
        };
        ctx.metrics().validations_ok += 1;
        ctx.verdict("valid");
        self.admit(msg, ctx);
    }

    /// Firewall, then agent logic.
    fn admit(&mut self, msg: ValidatedMessage, ctx: &mut SimContext<'_>) {
        let env = &msg.envelope;
        let peer = env.sender_id.clone();
        let creds = self.core.config.peer_credentials.get(&peer).cloned().unwrap_or_default();
        let verdict = self.core.firewall.evaluate(&peer, &creds, &msg, ctx.now());
        match &verdict {
            FirewallVerdict::Allow => ctx.verdict("allow"),
            FirewallVerdict::Deny { rule_id, reason } => {
                ctx.metrics().firewall_denied += 1;
                ctx.verdict(format!("deny:{rule_id}"));
                let reason = format!("denied by {rule_id}: {reason}");
                self.refuse(&msg.envelope, &reason, None, ctx);
                return;
            }
            FirewallVerdict::Quarantine { signature_id, path } => {
                ctx.metrics().firewall_quarantined += 1;
                ctx.verdict(format!("quarantine:{signature_id}@{path}"));
                return;
            }
        }
        ctx.log_logic(&peer, env.performative, crate::simnet::summarize(env));
        match &msg.kind {
            MessageKind::Control(c) if c == AMBIGUOUS_PARAMETER && env.performative == Performative::Query => {
                self.answer(&msg, ctx)
            }
            MessageKind::Control(c) if c == PARAMETER_OPTIONS => self.options_received(&msg, ctx),
            _ => {
                let SnlAgent { core, logic } = self;
                logic.on_message(&msg, &mut Self::rt(core, ctx));
            }
        }
    }

    fn answer(&mut self, msg: &ValidatedMessage, ctx: &mut SimContext<'_>) {
        let env = &msg.envelope;
        let session = &self.core.sessions[&env.sender_id];
        let id = format!("{}-{}", self.core.config.id, self.core.next_msg + 1);
        match answer_clarification(session, env, id, ctx.now()) {
            Ok(inform) => {
                self.core.next_msg += 1;
                send_new(&mut self.core, ctx, inform);
            }
            Err(e) => self.refuse(env, &e.to_string(), None, ctx),
        }
    }

    fn ask_sender(&mut self, request: &Envelope, param: &str, surface: &str, ctx: &mut SimContext<'_>) {
        let id = self.core.message_id();
        let query = Envelope::initiate(
            self.core.config.id.clone(),
            id.clone(),
            vec![request.sender_id.clone()],
            Performative::Query,
            ContentValue::map([
                ("concept", AMBIGUOUS_PARAMETER.into()),
                ("parameter", param.into()),
                ("value", surface.into()),
            ]),
            ctx.now(),
        )
        .with_context(request.context_urn.clone());
        ctx.metrics().clarification_rounds += 1;
        ctx.verdict("disambiguate");
        self.core.pending_disambiguations.insert(id, request.clone());
        send_new(&mut self.core, ctx, query);
    }

    fn options_received(&mut self, msg: &ValidatedMessage, ctx: &mut SimContext<'_>) {
        let env = &msg.envelope;
        let query_id = env.in_reply_to.clone().unwrap_or_default();
        if let Some(request) = self.core.pending_disambiguations.remove(&query_id) {
            self.finish_disambiguation(request, env, ctx);
            return;
        }
        let Some(pending) = self.core.pending_tasks.remove(&query_id) else {
            ctx.verdict("unsolicited-options");
            return;
        };
        let session = self.core.sessions.get_mut(&env.sender_id).expect("validated, so locked");
        let (param, surface, options) = match receive_options(session, env) {
            Ok(x) => x,
            Err(e) => {
                ctx.verdict(format!("bad-options:{e}"));
                return;
            }
        };
        let Some(choice) = self.logic.choose_option(&param, &surface, &options) else {
            ctx.verdict("task-abandoned");
            return;
        };
        let session = self.core.sessions.get_mut(&env.sender_id).expect("locked");
        if let Err(e) = resolve_choice(session, &param, &surface, &choice) {
            ctx.verdict(format!("bad-choice:{e}"));
            return;
        }
        ctx.verdict(format!("chose:{param}={choice}"));
        if let Err(e) = send_task(&mut self.core, ctx, pending) {
            ctx.note(Layer::L9, format!("task not sent: {e}"));
        }
    }

    /// One round only: a single offered option is substituted and the
    /// request processed; anything else rejects it.
    fn finish_disambiguation(&mut self, request: Envelope, inform: &Envelope, ctx: &mut SimContext<'_>) {
        let param = inform.content.get("parameter").and_then(ContentValue::as_str).unwrap_or("");
        let options = inform.content.get("options").and_then(ContentValue::as_list).unwrap_or(&[]);
        if let [ContentValue::String(only)] = options {
            let mut fixed = request.clone();
            fixed.content.set_path(&format!("params.{param}"), only.as_str().into());
            let session = self.core.sessions.get_mut(&request.sender_id).expect("locked");
            if let Ok(msg) = validate_incoming(session, &fixed) {
                ctx.metrics().validations_ok += 1;
                ctx.verdict("disambiguated");
                self.admit(msg, ctx);
                return;
            }
        }
        self.refuse(&request, "ambiguous value not resolved", None, ctx);
    }
}

impl Agent for SnlAgent {
    fn id(&self) -> &AgentId {
        &self.core.config.id
    }

    fn start(&mut self, ctx: &mut SimContext<'_>) {
        for peer in self.core.config.handshake_with.clone() {
            self.open_handshake(peer, ctx);
        }
        let SnlAgent { core, logic } = self;
        logic.on_start(&mut Self::rt(core, ctx));
    }

    fn on_envelope(&mut self, env: Envelope, ctx: &mut SimContext<'_>) {
        if is_handshake(&env.content) {
            self.handle_handshake(env, ctx);
        } else {
            self.handle_message(env, ctx);
        }
    }

    fn on_timer(&mut self, token: u64, ctx: &mut SimContext<'_>) {
        if token >= LOGIC_TIMER_BASE {
            let SnlAgent { core, logic } = self;
            logic.on_timer(token - LOGIC_TIMER_BASE, &mut Self::rt(core, ctx));
            return;
        }
        let Some(peer) = self.core.timers.get(&token).cloned() else { return };
        let now = ctx.now();
        let timed_out = self.core.sessions.get_mut(&peer).is_some_and(|s| s.check_timeout(now));
        if timed_out {
            ctx.note(Layer::L9, format!("handshake with {peer} timed out"));
            self.record_failure(&peer, ctx);
            if let Some((conv, last)) = self.core.handshakes.get(&peer).cloned() {
                let id = self.core.message_id();
                let mut env = Envelope::initiate(
                    self.core.config.id.clone(),
                    id,
                    vec![peer.clone()],
                    Performative::Refuse,
                    SnlMessage::Abort(SnlAbort { reason: FailureReason::Timeout.to_string() }).to_content(),
                    now,
                );
                env.conversation_id = conv;
                env.in_reply_to = Some(last);
                ctx.send(env);
            }
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
