use std::collections::BTreeMap;
use std::fmt::Write;

/// Layer-tagged counters for one simulation. All counters only grow.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metrics {
    /// One per delivery attempt; topic fan-out counts each subscriber.
    pub envelopes_sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub handshakes_completed: u64,
    pub snl_messages: u64,
    pub clarification_rounds: u64,
    pub validations_ok: u64,
    pub validations_failed: u64,
    pub firewall_denied: u64,
    pub firewall_quarantined: u64,
    pub logic_invocations: u64,
    /// Envelopes originated by flooding adversaries.
    pub flood_sent: u64,
    /// Failed sessions, one per endpoint, keyed by reason.
    pub sessions_failed: BTreeMap<String, u64>,
}

impl Metrics {
    pub fn sessions_failed(&self, reason: &str) -> u64 {
        self.sessions_failed.get(reason).copied().unwrap_or(0)
    }

    pub fn record_failure(&mut self, reason: &str) {
        *self.sessions_failed.entry(reason.to_string()).or_default() += 1;
    }

    pub fn in_flight(&self) -> u64 {
        self.envelopes_sent - self.delivered - self.dropped
    }

    pub fn is_zero(&self) -> bool {
        self == &Metrics::default()
    }

    /// Flat `key=value` lines in a fixed order.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for (k, v) in [
            ("envelopes_sent", self.envelopes_sent),
            ("delivered", self.delivered),
            ("dropped", self.dropped),
            ("in_flight", self.in_flight()),
            ("handshakes_completed", self.handshakes_completed),
            ("snl_messages", self.snl_messages),
            ("clarification_rounds", self.clarification_rounds),
            ("validations_ok", self.validations_ok),
            ("validations_failed", self.validations_failed),
            ("firewall_denied", self.firewall_denied),
            ("firewall_quarantined", self.firewall_quarantined),
            ("logic_invocations", self.logic_invocations),
            ("flood_sent", self.flood_sent),
        ] {
            writeln!(out, "{k}={v}").unwrap();
        }
        for (reason, n) in &self.sessions_failed {
            writeln!(out, "sessions_failed.{reason}={n}").unwrap();
        }
        out
    }
}
