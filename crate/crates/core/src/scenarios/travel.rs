use std::any::Any;
use std::collections::BTreeMap;

use chrono::{Datelike, Days, NaiveDate, Weekday};

use crate::firewall::PolicySet;
use crate::simnet::{LinkConfig, SimConfig, SimReport, Simulation};
use crate::snl::{MessageKind, ValidatedMessage};
use crate::wire::{AgentId, ContentValue, Performative};

use super::runtime::{AgentConfig, AgentLogic, Runtime, SnlAgent};
use super::{ensure, urn, ScenarioError};

pub const CLIENT: &str = "agent-travel-7";
pub const BOOKING: &str = "agent-booking-4";
pub const TRAVEL_URN: &str = "urn:contexts:travel:v2.1";

/// Scenario clock origin: a Thursday, so "next Tuesday" is 2025-11-04.
pub fn scenario_epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(2025, 10, 30).expect("valid date")
}

/// Resolves `today`, `tomorrow`, `next <weekday>` or an ISO date.
pub fn resolve_date(phrase: &str, today: NaiveDate) -> Option<NaiveDate> {
    let p = phrase.trim().to_lowercase();
    match p.as_str() {
        "today" => return Some(today),
        "tomorrow" => return today.checked_add_days(Days::new(1)),
        _ => {}
    }
    if let Some(day) = p.strip_prefix("next ") {
        let target: Weekday = day.parse().ok()?;
        let ahead = (7 + target.num_days_from_monday() as i64 - today.weekday().num_days_from_monday() as i64) % 7;
        let ahead = if ahead == 0 { 7 } else { ahead };
        return today.checked_add_days(Days::new(ahead as u64));
    }
    NaiveDate::parse_from_str(&p, "%Y-%m-%d").ok()
}

/// One booking as the user phrased it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BookingAsk {
    pub origin: String,
    pub dest: String,
    pub when: String,
}

impl BookingAsk {
    /// New York next Tuesday, departing LAX.
    pub fn worked_example() -> Self {
        BookingAsk {
            origin: "LAX".into(),
            dest: "New York".into(),
            when: "next Tuesday".into(),
        }
    }
}

/// Books flights one after another, each once the previous one is answered.
#[derive(Debug)]
pub struct TravelClient {
    peer: AgentId,
    asks: Vec<BookingAsk>,
    next: usize,
    pub confirmations: Vec<ContentValue>,
    pub refusals: Vec<ContentValue>,
    /// Clarification rounds spent on each booking, in order.
    pub rounds_per_booking: Vec<u64>,
    /// Every clarification answer seen, keyed by (parameter, surface value).
    pub offered: BTreeMap<(String, String), Vec<String>>,
    rounds_before: u64,
}

impl TravelClient {
    pub fn new(peer: impl Into<AgentId>, asks: Vec<BookingAsk>) -> Self {
        TravelClient {
            peer: peer.into(),
            asks,
            next: 0,
            confirmations: Vec::new(),
            refusals: Vec::new(),
            rounds_per_booking: Vec::new(),
            offered: BTreeMap::new(),
            rounds_before: 0,
        }
    }

    fn book_next(&mut self, rt: &mut Runtime<'_, '_>) {
        let Some(ask) = self.asks.get(self.next).cloned() else { return };
        self.next += 1;
        let today = scenario_epoch()
            .checked_add_days(Days::new(rt.now() / 86_400_000))
            .expect("in range");
        let date = resolve_date(&ask.when, today).map(|d| d.format("%Y-%m-%d").to_string());
        let mut bindings = BTreeMap::from([
            ("origin_code".to_string(), ContentValue::from(ask.origin.as_str())),
            ("dest_code".to_string(), ask.dest.as_str().into()),
        ]);
        if let Some(d) = date {
            bindings.insert("date".into(), d.into());
        }
        let peer = self.peer.clone();
        if let Err(e) = rt.request_task(&peer, "bookFlight", bindings) {
            rt.note(format!("booking not sent: {e}"));
        }
    }

    fn finished_one(&mut self, rounds_now: u64) {
        self.rounds_per_booking.push(rounds_now - self.rounds_before);
        self.rounds_before = rounds_now;
    }
}

impl AgentLogic for TravelClient {
    fn choose_option(&mut self, parameter: &str, surface: &str, options: &[String]) -> Option<String> {
        self.offered
            .insert((parameter.to_string(), surface.to_string()), options.to_vec());
        options.first().cloned()
    }

    fn on_locked(&mut self, peer: &AgentId, rt: &mut Runtime<'_, '_>) {
        if peer == &self.peer && self.next == 0 {
            self.book_next(rt);
        }
    }

    fn on_message(&mut self, msg: &ValidatedMessage, rt: &mut Runtime<'_, '_>) {
        let rounds = rt.clarification_rounds();
        match msg.envelope.performative {
            Performative::Agree => {
                self.confirmations.push(msg.content().clone());
                self.finished_one(rounds);
                self.book_next(rt);
            }
            Performative::Refuse => {
                self.refusals.push(msg.content().clone());
                self.finished_one(rounds);
                self.book_next(rt);
            }
            _ => {}
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Confirms every valid `bookFlight` REQUEST.
#[derive(Debug, Default)]
pub struct BookingService {
    /// Parameters of each accepted request, in arrival order.
    pub requests: Vec<BTreeMap<String, ContentValue>>,
}

impl AgentLogic for BookingService {
    fn on_message(&mut self, msg: &ValidatedMessage, rt: &mut Runtime<'_, '_>) {
        let MessageKind::Task { task, params } = &msg.kind else { return };
        if task != "bookFlight" {
            return;
        }
        self.requests.push(params.clone());
        let confirmation = ContentValue::map([
            ("concept_type", "booking_confirmation".into()),
            ("booking_ref", format!("BK-{:06}", self.requests.len()).into()),
            ("task", "bookFlight".into()),
            ("dest_code", params.get("dest_code").cloned().unwrap_or(ContentValue::Null)),
            ("date", params.get("date").cloned().unwrap_or(ContentValue::Null)),
        ]);
        rt.reply(
            &msg.envelope,
            Performative::Agree,
            ContentValue::map([("confirmation", confirmation)]),
        );
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[derive(Debug, Clone)]
pub struct TravelOptions {
    pub seed: u64,
    pub asks: Vec<BookingAsk>,
    pub link: LinkConfig,
    pub policies: PolicySet,
}

impl Default for TravelOptions {
    fn default() -> Self {
        TravelOptions {
            seed: 42,
            asks: vec![BookingAsk::worked_example()],
            link: LinkConfig::default(),
            policies: PolicySet::reference(),
        }
    }
}

impl TravelOptions {
    /// The worked booking repeated `n` times in one session.
    pub fn repeated(n: usize) -> Self {
        TravelOptions {
            asks: vec![BookingAsk::worked_example(); n],
            ..TravelOptions::default()
        }
    }
}

pub fn build_travel_sim(opts: &TravelOptions) -> Simulation {
    let mut config = SimConfig::with_seed(opts.seed);
    config.default_link = opts.link;
    let mut sim = Simulation::new(config).expect("travel config is valid");
    let mut client = AgentConfig::new(CLIENT, vec![urn(TRAVEL_URN), urn("urn:contexts:supplyChain:v1.0")]);
    client.handshake_with = vec![AgentId::new(BOOKING)];
    client.policies = opts.policies.clone();
    let mut booking = AgentConfig::new(BOOKING, vec![urn(TRAVEL_URN)]);
    booking.policies = opts.policies.clone();
    sim.add_agent(Box::new(SnlAgent::new(client, TravelClient::new(BOOKING, opts.asks.clone()))))
        .expect("fresh id");
    sim.add_agent(Box::new(SnlAgent::new(booking, BookingService::default())))
        .expect("fresh id");
    sim
}

#[derive(Debug, Clone)]
pub struct TravelOutcome {
    pub report: SimReport,
    pub confirmations: Vec<ContentValue>,
    pub received_requests: Vec<BTreeMap<String, ContentValue>>,
    pub rounds_per_booking: Vec<u64>,
    /// Options the client was offered, keyed by (parameter, surface value).
    pub options: BTreeMap<(String, String), Vec<String>>,
    /// Simulated time at which the booking side locked.
    pub handshake_completed_at: Option<u64>,
}

/// Runs the booking flow and checks its embedded assertions: one AGREE per
/// booking, and every request carrying concrete airport codes and dates.
pub fn run_travel_demo(opts: &TravelOptions) -> Result<TravelOutcome, ScenarioError> {
    let mut sim = build_travel_sim(opts);
    let report = sim.run()?;
    let client = sim.agent::<SnlAgent>(CLIENT).expect("client");
    let booking = sim.agent::<SnlAgent>(BOOKING).expect("booking");
    let c = client.logic::<TravelClient>().expect("client logic");
    let b = booking.logic::<BookingService>().expect("booking logic");
    let outcome = TravelOutcome {
        confirmations: c.confirmations.clone(),
        received_requests: b.requests.clone(),
        rounds_per_booking: c.rounds_per_booking.clone(),
        options: c.offered.clone(),
        handshake_completed_at: booking.session(CLIENT).and_then(|s| s.established_at()),
        report,
    };
    let m = &outcome.report.metrics;
    ensure(m.handshakes_completed == 1, || format!("handshakes_completed = {}", m.handshakes_completed))?;
    ensure(m.snl_messages == 3, || format!("snl_messages = {}", m.snl_messages))?;
    ensure(outcome.confirmations.len() == opts.asks.len(), || {
        format!("{} AGREEs for {} bookings", outcome.confirmations.len(), opts.asks.len())
    })?;
    for p in &outcome.received_requests {
        let ok = ["origin_code", "dest_code", "date"]
            .iter()
            .all(|k| p.get(*k).and_then(ContentValue::as_str).is_some());
        ensure(ok, || format!("incomplete request params {p:?}"))?;
    }
    Ok(outcome)
}
