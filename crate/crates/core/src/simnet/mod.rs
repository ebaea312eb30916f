//! Seeded discrete-event network with attack adversaries and metrics.

mod adversary;
mod config;
mod metrics;
mod sim;
mod trace;

use thiserror::Error;

pub use adversary::Adversary;
pub use config::{LinkConfig, LinkId, SimConfig};
pub use metrics::Metrics;
pub use sim::{Agent, LogicEvent, SimContext, SimReport, Simulation};
pub use trace::{layer_of, summarize, Layer, TraceEvent};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("step limit exceeded after {0} steps")]
    StepLimitExceeded(u64),
    #[error("unknown adversary target: {0}")]
    UnknownTarget(String),
}

#[cfg(test)]
mod tests {
    use std::any::Any;
    use std::collections::BTreeSet;

    use super::*;
    use crate::scenarios::travel::{build_travel_sim, BOOKING, CLIENT};
    use crate::scenarios::{AgentConfig, Passive, SnlAgent, TravelOptions};
    use crate::snl::{FailureReason, SessionState};
    use crate::wire::{AgentId, ContentValue, Envelope, Performative};

    /// Sends `count` INFORMs to `to` at start and records what it receives.
    struct Pinger {
        id: AgentId,
        to: AgentId,
        count: usize,
        got: Vec<String>,
    }

    impl Pinger {
        fn boxed(id: &str, to: &str, count: usize) -> Box<Self> {
            Box::new(Pinger {
                id: AgentId::new(id),
                to: AgentId::new(to),
                count,
                got: Vec::new(),
            })
        }
    }

    impl Agent for Pinger {
        fn id(&self) -> &AgentId {
            &self.id
        }
        fn start(&mut self, ctx: &mut SimContext<'_>) {
            for i in 0..self.count {
                let env = Envelope::initiate(
                    self.id.clone(),
                    format!("{}-{i}", self.id),
                    vec![self.to.clone()],
                    Performative::Publish,
                    ContentValue::map([("n", (i as i64).into())]),
                    ctx.now(),
                );
                ctx.send(env);
            }
        }
        fn on_envelope(&mut self, env: Envelope, _ctx: &mut SimContext<'_>) {
            self.got.push(env.message_id);
        }
        fn as_any(&self) -> &dyn Any {
            self
        }
    }

    #[test]
    fn same_seed_same_trace() {
        let opts = TravelOptions::repeated(3);
        let a = build_travel_sim(&opts).run().unwrap();
        let b = build_travel_sim(&opts).run().unwrap();
        assert_eq!(a.trace_text(), b.trace_text());
        assert_eq!(a, b);
    }

    #[test]
    fn total_loss_times_out_the_handshake() {
        let mut opts = TravelOptions::default();
        opts.link.drop_probability = 1.0;
        let mut sim = build_travel_sim(&opts);
        let report = sim.run().unwrap();
        let client = sim.agent::<SnlAgent>(CLIENT).unwrap();
        assert_eq!(
            client.session(BOOKING).unwrap().state(),
            &SessionState::Failed(FailureReason::Timeout)
        );
        assert_eq!(report.metrics.sessions_failed("Timeout"), 1);
        assert_eq!(report.metrics.delivered, 0);
    }

    #[test]
    fn three_hops_of_ten_ms() {
        let mut sim = build_travel_sim(&TravelOptions::default());
        sim.run().unwrap();
        let booking = sim.agent::<SnlAgent>(BOOKING).unwrap();
        assert_eq!(booking.session(CLIENT).unwrap().established_at(), Some(30));
    }

    #[test]
    fn envelopes_are_conserved() {
        for seed in 0..10 {
            let mut config = SimConfig::with_seed(seed);
            config.default_link.drop_probability = 0.3;
            config.end_time = Some(5);
            let mut sim = Simulation::new(config).unwrap();
            sim.add_agent(Pinger::boxed("a", "b", 40)).unwrap();
            sim.add_agent(Pinger::boxed("b", "a", 40)).unwrap();
            let m = sim.run().unwrap().metrics;
            assert_eq!(m.envelopes_sent, 80);
            assert_eq!(m.envelopes_sent, m.delivered + m.dropped + m.in_flight());
            assert!(m.in_flight() > 0);
            let m = sim.run().unwrap().metrics;
            assert_eq!(m.in_flight(), 80 - m.delivered - m.dropped);
        }
    }

    #[test]
    fn drops_follow_the_seed() {
        let run = |seed| {
            let mut config = SimConfig::with_seed(seed);
            config.default_link.drop_probability = 0.5;
            let mut sim = Simulation::new(config).unwrap();
            sim.add_agent(Pinger::boxed("a", "b", 64)).unwrap();
            sim.add_agent(Pinger::boxed("b", "a", 0)).unwrap();
            sim.run().unwrap();
            sim.agent::<Pinger>("b").unwrap().got.clone()
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }

    #[test]
    fn fresh_metrics_are_zero() {
        let sim = Simulation::new(SimConfig::default()).unwrap();
        assert!(sim.snapshot_metrics().is_zero());
    }

    #[test]
    fn bad_config_and_targets_are_rejected() {
        let mut config = SimConfig::default();
        config.default_link.drop_probability = 1.5;
        assert!(matches!(Simulation::new(config), Err(SimError::Config(_))));
        let mut sim = Simulation::new(SimConfig::default()).unwrap();
        sim.add_agent(Pinger::boxed("a", "b", 0)).unwrap();
        let err = sim
            .attach_adversary(Adversary::InjectionSender {
                node: AgentId::new("nobody"),
                payload: "x".into(),
                field_path: "y".into(),
            })
            .unwrap_err();
        assert!(matches!(err, SimError::UnknownTarget(_)));
        let err = sim
            .attach_adversary(Adversary::HelloStripper {
                link: LinkId::new("a", "nobody"),
                strip: BTreeSet::new(),
            })
            .unwrap_err();
        assert!(matches!(err, SimError::UnknownTarget(_)));
    }

    #[test]
    fn step_limit_is_enforced() {
        let config = SimConfig { max_steps: 3, ..SimConfig::default() };
        let mut sim = Simulation::new(config).unwrap();
        sim.add_agent(Pinger::boxed("a", "b", 10)).unwrap();
        sim.add_agent(Pinger::boxed("b", "a", 0)).unwrap();
        assert!(matches!(sim.run(), Err(SimError::StepLimitExceeded(3))));
    }

    #[test]
    fn topics_fan_out_to_other_subscribers() {
        let mut sim = Simulation::new(SimConfig::default()).unwrap();
        sim.add_agent(Pinger::boxed("a", "topic:t", 1)).unwrap();
        sim.add_agent(Pinger::boxed("b", "a", 0)).unwrap();
        sim.add_agent(Pinger::boxed("c", "a", 0)).unwrap();
        for id in ["a", "b", "c"] {
            sim.subscribe("topic:t", id).unwrap();
        }
        let report = sim.run().unwrap();
        assert_eq!(report.metrics.envelopes_sent, 2);
        assert!(sim.agent::<Pinger>("a").unwrap().got.is_empty());
        assert_eq!(sim.agent::<Pinger>("b").unwrap().got, ["a-0"]);
        assert_eq!(sim.agent::<Pinger>("c").unwrap().got, ["a-0"]);
    }

    #[test]
    fn stripper_hides_the_newer_version() {
        let urns = [
            "urn:contexts:payment:v2.0".parse().unwrap(),
            "urn:contexts:payment:v1.0".parse().unwrap(),
        ];
        let mut sim = Simulation::new(SimConfig::default()).unwrap();
        let mut a = AgentConfig::new("a", urns.to_vec());
        a.handshake_with = vec![AgentId::new("b")];
        sim.add_agent(Box::new(SnlAgent::new(a, Passive))).unwrap();
        sim.add_agent(Box::new(SnlAgent::new(AgentConfig::new("b", urns.to_vec()), Passive))).unwrap();
        sim.attach_adversary(Adversary::HelloStripper {
            link: LinkId::new("a", "b"),
            strip: BTreeSet::from([urns[0].clone()]),
        })
        .unwrap();
        let report = sim.run().unwrap();
        let hello = report
            .trace
            .iter()
            .find(|t| t.edge == "a->b" && t.summary.starts_with("snl hello"))
            .unwrap();
        assert_eq!(hello.summary, "snl hello [urn:contexts:payment:v1.0]");
        // without a floor the downgrade goes through, which is why floors exist
        let b = sim.agent::<SnlAgent>("b").unwrap();
        assert_eq!(b.session("a").unwrap().urn(), Some(&urns[1]));
    }

    #[test]
    fn opaque_links_disable_content_rewrites() {
        let urns = [
            "urn:contexts:payment:v2.0".parse().unwrap(),
            "urn:contexts:payment:v1.0".parse().unwrap(),
        ];
        let mut config = SimConfig::default();
        config.set_link("a", "b", LinkConfig { opaque_to_adversary: true, ..LinkConfig::default() });
        let mut sim = Simulation::new(config).unwrap();
        let mut a = AgentConfig::new("a", urns.to_vec());
        a.handshake_with = vec![AgentId::new("b")];
        sim.add_agent(Box::new(SnlAgent::new(a, Passive))).unwrap();
        sim.add_agent(Box::new(SnlAgent::new(AgentConfig::new("b", urns.to_vec()), Passive))).unwrap();
        sim.attach_adversary(Adversary::HelloStripper {
            link: LinkId::new("a", "b"),
            strip: BTreeSet::from([urns[0].clone()]),
        })
        .unwrap();
        sim.run().unwrap();
        let b = sim.agent::<SnlAgent>("b").unwrap();
        assert_eq!(b.session("a").unwrap().urn(), Some(&urns[0]));
    }
}
