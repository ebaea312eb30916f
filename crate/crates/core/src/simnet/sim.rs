use std::any::Any;
use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::wire::{conversation_id_for, decode_envelope, encode_envelope, AgentId, Envelope, Performative};

use super::adversary::Adversary;
use super::config::{LinkId, SimConfig};
use super::metrics::Metrics;
use super::trace::{layer_of, summarize, Layer, TraceEvent};
use super::SimError;

/// A simulated agent. Callbacks run one at a time on the event loop.
pub trait Agent: Any {
    fn id(&self) -> &AgentId;
    fn start(&mut self, ctx: &mut SimContext<'_>);
    fn on_envelope(&mut self, env: Envelope, ctx: &mut SimContext<'_>);
    fn on_timer(&mut self, _token: u64, _ctx: &mut SimContext<'_>) {}
    fn as_any(&self) -> &dyn Any;
}

/// A message that reached agent logic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicEvent {
    pub ts: u64,
    pub agent: AgentId,
    pub sender: AgentId,
    pub performative: Performative,
    pub summary: String,
}

#[derive(Debug, Clone)]
enum EventKind {
    Start(AgentId),
    Deliver { from: AgentId, to: AgentId, bytes: Vec<u8> },
    Timer { agent: AgentId, token: u64 },
    Flood { adversary: usize, k: u64 },
}

#[derive(Debug)]
struct Queued {
    ts: u64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Queued {
    fn eq(&self, o: &Self) -> bool {
        (self.ts, self.seq) == (o.ts, o.seq)
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Queued {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        (self.ts, self.seq).cmp(&(o.ts, o.seq))
    }
}

/// Everything but the agents, so callbacks can borrow it mutably.
struct Core {
    config: SimConfig,
    rng: ChaCha20Rng,
    now: u64,
    seq: u64,
    queue: BinaryHeap<Reverse<Queued>>,
    agents: BTreeSet<AgentId>,
    subscriptions: BTreeMap<AgentId, BTreeSet<AgentId>>,
    adversaries: Vec<Adversary>,
    metrics: Metrics,
    trace: Vec<TraceEvent>,
    logic_log: Vec<LogicEvent>,
    /// Verdict tags added by the agent handling the current delivery.
    pending_verdicts: Vec<String>,
}

impl Core {
    fn schedule(&mut self, ts: u64, kind: EventKind) {
        self.seq += 1;
        self.queue.push(Reverse(Queued { ts, seq: self.seq, kind }));
    }

    fn recipients(&self, from: &AgentId, env: &Envelope) -> Vec<AgentId> {
        let mut out = Vec::new();
        for r in &env.receiver_ids {
            if r.is_topic() {
                if let Some(subs) = self.subscriptions.get(r) {
                    out.extend(subs.iter().filter(|s| *s != from).cloned());
                }
            } else {
                out.push(r.clone());
            }
        }
        out
    }

    fn transmit(&mut self, from: &AgentId, env: Envelope) {
        if crate::snl::is_handshake(&env.content) {
            self.metrics.snl_messages += 1;
        }
        for to in self.recipients(from, &env) {
            let mut copy = env.clone();
            let link = LinkId::new(from.clone(), to.clone());
            let cfg = self.config.link(from, &to);
            let edge = format!("{from}->{to}");
            let mut notes = Vec::new();
            for adv in &self.adversaries {
                if let Some(note) = adv.transform(&mut copy, &link, cfg.opaque_to_adversary) {
                    notes.push(format!("{}:{note}", adv.name()));
                }
            }
            self.metrics.envelopes_sent += 1;
            if !notes.is_empty() {
                self.push_trace(edge.clone(), &copy, vec!["adversary".into()], notes.join("; "));
            }
            let bytes = match encode_envelope(&copy) {
                Ok(b) => b,
                Err(e) => {
                    self.metrics.dropped += 1;
                    self.push_trace(edge, &copy, vec!["invalid".into()], e.to_string());
                    continue;
                }
            };
            // one draw per copy, in send order
            let roll: f64 = self.rng.random();
            if !self.agents.contains(&to) || roll < cfg.drop_probability {
                self.metrics.dropped += 1;
                let summary = summarize(&copy);
                self.push_trace(edge, &copy, vec!["drop".into()], summary);
                continue;
            }
            let ts = self.now + cfg.latency_ms;
            self.schedule(
                ts,
                EventKind::Deliver {
                    from: from.clone(),
                    to,
                    bytes,
                },
            );
        }
    }

    fn push_trace(&mut self, edge: String, env: &Envelope, verdicts: Vec<String>, summary: String) {
        self.trace.push(TraceEvent {
            ts: self.now,
            edge,
            layer: layer_of(env),
            performative: env.performative.as_str().to_string(),
            verdicts,
            summary,
        });
    }
}

/// What an agent callback may do.
pub struct SimContext<'a> {
    me: AgentId,
    core: &'a mut Core,
}

impl SimContext<'_> {
    pub fn now(&self) -> u64 {
        self.core.now
    }

    pub fn id(&self) -> &AgentId {
        &self.me
    }

    /// Sends now; delivery (or loss) is decided immediately.
    pub fn send(&mut self, env: Envelope) {
        let me = self.me.clone();
        self.core.transmit(&me, env);
    }

    pub fn set_timer(&mut self, delay_ms: u64, token: u64) {
        let ts = self.core.now + delay_ms;
        let agent = self.me.clone();
        self.core.schedule(ts, EventKind::Timer { agent, token });
    }

    pub fn random_bytes<const N: usize>(&mut self) -> [u8; N] {
        let mut b = [0u8; N];
        self.core.rng.fill_bytes(&mut b);
        b
    }

    pub fn metrics(&mut self) -> &mut Metrics {
        &mut self.core.metrics
    }

    /// Tags the delivery being handled (shown in its trace line).
    pub fn verdict(&mut self, tag: impl Into<String>) {
        self.core.pending_verdicts.push(tag.into());
    }

    /// A free-standing trace line attributed to this agent.
    pub fn note(&mut self, layer: Layer, summary: impl Into<String>) {
        let ev = TraceEvent {
            ts: self.core.now,
            edge: self.me.to_string(),
            layer,
            performative: "-".into(),
            verdicts: Vec::new(),
            summary: summary.into(),
        };
        self.core.trace.push(ev);
    }

    pub fn log_logic(&mut self, sender: &AgentId, performative: Performative, summary: impl Into<String>) {
        self.core.metrics.logic_invocations += 1;
        let ev = LogicEvent {
            ts: self.core.now,
            agent: self.me.clone(),
            sender: sender.clone(),
            performative,
            summary: summary.into(),
        };
        self.core.logic_log.push(ev);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub trace: Vec<TraceEvent>,
    pub metrics: Metrics,
    pub logic_log: Vec<LogicEvent>,
    pub end_time: u64,
    pub steps: u64,
}

impl SimReport {
    pub fn trace_text(&self) -> String {
        let mut s = String::new();
        for ev in &self.trace {
            s.push_str(&ev.to_string());
            s.push('\n');
        }
        s
    }
}

/// Deterministic discrete-event network. Events run in (timestamp, sequence) order.
pub struct Simulation {
    core: Core,
    agents: BTreeMap<AgentId, Option<Box<dyn Agent>>>,
    started: bool,
    steps: u64,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.check()?;
        Ok(Simulation {
            core: Core {
                rng: ChaCha20Rng::seed_from_u64(config.seed),
                config,
                now: 0,
                seq: 0,
                queue: BinaryHeap::new(),
                agents: BTreeSet::new(),
                subscriptions: BTreeMap::new(),
                adversaries: Vec::new(),
                metrics: Metrics::default(),
                trace: Vec::new(),
                logic_log: Vec::new(),
                pending_verdicts: Vec::new(),
            },
            agents: BTreeMap::new(),
            started: false,
            steps: 0,
        })
    }

    pub fn add_agent(&mut self, agent: Box<dyn Agent>) -> Result<(), SimError> {
        let id = agent.id().clone();
        if id.is_topic() || self.agents.contains_key(&id) {
            return Err(SimError::Config(format!("agent id {id} unusable or taken")));
        }
        self.core.agents.insert(id.clone());
        self.core.schedule(0, EventKind::Start(id.clone()));
        self.agents.insert(id, Some(agent));
        Ok(())
    }

    pub fn subscribe(&mut self, topic: impl Into<AgentId>, agent: impl Into<AgentId>) -> Result<(), SimError> {
        let (topic, agent) = (topic.into(), agent.into());
        if !topic.is_topic() {
            return Err(SimError::Config(format!("{topic} is not a topic")));
        }
        if !self.agents.contains_key(&agent) {
            return Err(SimError::UnknownTarget(agent.to_string()));
        }
        self.core.subscriptions.entry(topic).or_default().insert(agent);
        Ok(())
    }

    pub fn attach_adversary(&mut self, adversary: Adversary) -> Result<(), SimError> {
        let known = |id: &AgentId| self.agents.contains_key(id);
        let ok = match &adversary {
            Adversary::HelloStripper { link, .. } | Adversary::ContextPoisoner { link, .. } => {
                let (a, b) = link.endpoints();
                known(a) && known(b)
            }
            Adversary::Flooder { node, target, .. } => known(node) && known(target),
            Adversary::InjectionSender { node, .. } => known(node),
        };
        if !ok {
            return Err(SimError::UnknownTarget(format!("{adversary:?}")));
        }
        if let Adversary::Flooder {
            start_ms, rate_per_sec, ..
        } = &adversary
        {
            if !(rate_per_sec.is_finite() && *rate_per_sec > 0.0) {
                return Err(SimError::Config("flood rate must be positive".into()));
            }
            let idx = self.core.adversaries.len();
            self.core.schedule(*start_ms, EventKind::Flood { adversary: idx, k: 0 });
        }
        self.core.adversaries.push(adversary);
        Ok(())
    }

    pub fn now(&self) -> u64 {
        self.core.now
    }

    pub fn snapshot_metrics(&self) -> Metrics {
        self.core.metrics.clone()
    }

    pub fn agent<T: Agent>(&self, id: &str) -> Option<&T> {
        self.agents.get(id)?.as_ref()?.as_any().downcast_ref::<T>()
    }

    /// Runs until the queue drains or `end_time` is reached.
    pub fn run(&mut self) -> Result<SimReport, SimError> {
        self.started = true;
        while let Some(Reverse(next)) = self.core.queue.peek() {
            if self.core.config.end_time.is_some_and(|end| next.ts > end) {
                break;
            }
            if self.steps >= self.core.config.max_steps {
                return Err(SimError::StepLimitExceeded(self.steps));
            }
            let Reverse(ev) = self.core.queue.pop().expect("peeked");
            self.steps += 1;
            self.core.now = ev.ts;
            self.dispatch(ev.kind);
        }
        Ok(self.report())
    }

    pub fn report(&self) -> SimReport {
        SimReport {
            trace: self.core.trace.clone(),
            metrics: self.core.metrics.clone(),
            logic_log: self.core.logic_log.clone(),
            end_time: self.core.now,
            steps: self.steps,
        }
    }

    fn with_agent(&mut self, id: &AgentId, f: impl FnOnce(&mut dyn Agent, &mut SimContext<'_>)) {
        let Some(slot) = self.agents.get_mut(id) else { return };
        let mut agent = slot.take().expect("agents are not re-entered");
        let mut ctx = SimContext {
            me: id.clone(),
            core: &mut self.core,
        };
        f(agent.as_mut(), &mut ctx);
        *self.agents.get_mut(id).expect("still present") = Some(agent);
    }

    fn dispatch(&mut self, kind: EventKind) {
        match kind {
            EventKind::Start(id) => self.with_agent(&id, |a, ctx| a.start(ctx)),
            EventKind::Timer { agent, token } => self.with_agent(&agent, |a, ctx| a.on_timer(token, ctx)),
            EventKind::Deliver { from, to, bytes } => {
                self.core.metrics.delivered += 1;
                let edge = format!("{from}->{to}");
                let env = match decode_envelope(&bytes) {
                    Ok(e) => e,
                    Err(e) => {
                        self.core.trace.push(TraceEvent {
                            ts: self.core.now,
                            edge,
                            layer: Layer::L8,
                            performative: "-".into(),
                            verdicts: vec!["malformed".into()],
                            summary: e.to_string(),
                        });
                        return;
                    }
                };
                let layer = layer_of(&env);
                let performative = env.performative.as_str().to_string();
                let summary = summarize(&env);
                let at = self.core.trace.len();
                self.core.pending_verdicts.clear();
                self.with_agent(&to, |a, ctx| a.on_envelope(env, ctx));
                let verdicts = std::mem::take(&mut self.core.pending_verdicts);
                // the delivery line precedes anything the handler traced
                self.core.trace.insert(
                    at,
                    TraceEvent {
                        ts: self.core.now,
                        edge,
                        layer,
                        performative,
                        verdicts,
                        summary,
                    },
                );
            }
            EventKind::Flood { adversary, k } => self.flood(adversary, k),
        }
    }

    fn flood(&mut self, idx: usize, k: u64) {
        let Adversary::Flooder {
            node,
            template,
            rate_per_sec,
            start_ms,
            duration_ms,
            target,
        } = self.core.adversaries[idx].clone()
        else {
            return;
        };
        let mut env = template;
        env.sender_id = node.clone();
        env.receiver_ids = vec![target];
        env.message_id = format!("{node}-flood-{k}");
        env.conversation_id = conversation_id_for(&node, &env.message_id);
        env.in_reply_to = None;
        env.timestamp = self.core.now;
        self.core.metrics.flood_sent += 1;
        self.core.transmit(&node, env);
        // to the nearest millisecond, so 1000/60 per second lands on exact 60ms steps
        let next = start_ms + ((k + 1) as f64 * 1000.0 / rate_per_sec).round() as u64;
        if next < start_ms + duration_ms {
            self.core.schedule(next, EventKind::Flood { adversary: idx, k: k + 1 });
        }
    }
}
