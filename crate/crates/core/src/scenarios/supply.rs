use std::any::Any;
use std::collections::BTreeMap;

use crate::firewall::PolicySet;
use crate::simnet::{Adversary, SimConfig, SimReport, Simulation};
use crate::snl::{MessageKind, ValidatedMessage};
use crate::wire::{AgentId, ContentValue, InteractionPattern};

use super::runtime::{AgentConfig, AgentLogic, Runtime, SnlAgent};
use super::{ensure, urn, ScenarioError};

pub const SUPPLY_URN: &str = "urn:contexts:supplyChain:v1.0";
pub const SUPPLY_TOPIC: &str = "topic:supplyChain";
pub const WHOLESALER: &str = "Wholesaler-2";
pub const DISTRIBUTOR: &str = "Distributor-5";

/// A retailer's published stance: decision, contingency and observation.
#[derive(Debug, Clone, PartialEq)]
pub struct SupplyDecision {
    pub item_id: String,
    pub quantity: i64,
    pub contingency: (String, String),
    pub observation: (String, f64),
}

impl SupplyDecision {
    pub fn new(
        item_id: impl Into<String>,
        quantity: i64,
        contingency: (String, String),
        observation: (String, f64),
    ) -> Result<Self, ScenarioError> {
        if quantity < 0 || !(0.0..=1.0).contains(&observation.1) {
            return Err(ScenarioError::InvalidSpec(
                "quantity must be non-negative and confidence within [0, 1]".into(),
            ));
        }
        Ok(SupplyDecision {
            item_id: item_id.into(),
            quantity,
            contingency,
            observation,
        })
    }

    /// 120 units of beer, with the contingency and observation of the worked example.
    pub fn worked_example() -> Self {
        SupplyDecision::with_quantity(120)
    }

    pub fn with_quantity(quantity: i64) -> Self {
        SupplyDecision::new(
            "beer",
            quantity,
            ("demand increases by 10%".into(), "increase order by 15 units".into()),
            ("Current spike seems temporary".into(), 0.8),
        )
        .expect("valid example")
    }

    pub fn to_content(&self) -> ContentValue {
        ContentValue::map([
            (
                "my_decision",
                ContentValue::map([
                    ("concept_type", "current_decision".into()),
                    ("item_id", self.item_id.as_str().into()),
                    ("quantity", self.quantity.into()),
                ]),
            ),
            (
                "my_flexibility",
                ContentValue::map([
                    ("concept_type", "decision_contingency".into()),
                    ("if_condition_text", self.contingency.0.as_str().into()),
                    ("then_change_text", self.contingency.1.as_str().into()),
                ]),
            ),
            (
                "my_reasoning",
                ContentValue::map([
                    ("concept_type", "local_observation".into()),
                    ("observed_fact_text", self.observation.0.as_str().into()),
                    ("confidence_score", self.observation.1.into()),
                ]),
            ),
        ])
    }
}

/// Publishes its content once every peer session is locked.
#[derive(Debug)]
pub struct Retailer {
    peers: Vec<AgentId>,
    content: ContentValue,
    pub published: bool,
}

impl Retailer {
    pub fn new(peers: Vec<AgentId>, content: ContentValue) -> Self {
        Retailer {
            peers,
            content,
            published: false,
        }
    }
}

impl AgentLogic for Retailer {
    fn on_locked(&mut self, _peer: &AgentId, rt: &mut Runtime<'_, '_>) {
        let locked = rt.locked_peers();
        if self.published || !self.peers.iter().all(|p| locked.contains(p)) {
            return;
        }
        self.published = rt.publish(&AgentId::new(SUPPLY_TOPIC), &urn(SUPPLY_URN), self.content.clone());
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Sums `current_decision` quantities per item across validated messages.
#[derive(Debug, Default)]
pub struct Aggregator {
    pub totals: BTreeMap<String, i64>,
    pub messages: u64,
}

impl Aggregator {
    pub fn total(&self) -> i64 {
        self.totals.values().sum()
    }
}

impl AgentLogic for Aggregator {
    fn on_message(&mut self, msg: &ValidatedMessage, _rt: &mut Runtime<'_, '_>) {
        let MessageKind::Coordinative(concepts) = &msg.kind else { return };
        self.messages += 1;
        for (key, concept) in concepts {
            if concept != "current_decision" {
                continue;
            }
            let entry = msg.content().get(key).expect("validated entry");
            let item = entry.get("item_id").and_then(ContentValue::as_str).unwrap_or_default();
            let qty = entry.get("quantity").and_then(ContentValue::as_i64).unwrap_or(0);
            *self.totals.entry(item.to_string()).or_default() += qty;
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[derive(Debug, Clone)]
pub struct SupplyOptions {
    pub seed: u64,
    /// (retailer id, published content)
    pub retailers: Vec<(String, ContentValue)>,
    pub policies: PolicySet,
    /// Payload and path for an injection adversary on the first retailer.
    pub injection: Option<(String, String)>,
}

impl Default for SupplyOptions {
    fn default() -> Self {
        SupplyOptions::with_quantities(&[120])
    }
}

impl SupplyOptions {
    /// Retailer-7, Retailer-8, ... publishing the example with these quantities.
    pub fn with_quantities(quantities: &[i64]) -> Self {
        SupplyOptions {
            seed: 42,
            retailers: quantities
                .iter()
                .enumerate()
                .map(|(i, q)| (format!("Retailer-{}", 7 + i), SupplyDecision::with_quantity(*q).to_content()))
                .collect(),
            policies: PolicySet::reference(),
            injection: None,
        }
    }

    /// The example payload with an entry the context does not define.
    pub fn with_my_mood() -> Self {
        let mut content = SupplyDecision::worked_example().to_content();
        content.as_map_mut().expect("map").insert("my_mood".into(), "happy".into());
        SupplyOptions {
            retailers: vec![("Retailer-7".into(), content)],
            ..SupplyOptions::default()
        }
    }

    pub fn published_quantity(&self) -> i64 {
        self.retailers
            .iter()
            .filter_map(|(_, c)| c.get_path("my_decision.quantity").and_then(ContentValue::as_i64))
            .sum()
    }
}

pub fn build_supply_sim(opts: &SupplyOptions) -> Simulation {
    let mut sim = Simulation::new(SimConfig::with_seed(opts.seed)).expect("supply config is valid");
    let group = [AgentId::new(WHOLESALER), AgentId::new(DISTRIBUTOR)];
    for id in &group {
        let mut cfg = AgentConfig::new(id.clone(), vec![urn(SUPPLY_URN)]);
        cfg.pattern = InteractionPattern::CollaborationGroup;
        cfg.policies = opts.policies.clone();
        sim.add_agent(Box::new(SnlAgent::new(cfg, Aggregator::default()))).expect("fresh id");
        sim.subscribe(SUPPLY_TOPIC, id.clone()).expect("agent exists");
    }
    for (id, content) in &opts.retailers {
        let mut cfg = AgentConfig::new(id.as_str(), vec![urn(SUPPLY_URN)]);
        cfg.pattern = InteractionPattern::CollaborationGroup;
        cfg.handshake_with = group.to_vec();
        cfg.policies = opts.policies.clone();
        sim.add_agent(Box::new(SnlAgent::new(cfg, Retailer::new(group.to_vec(), content.clone()))))
            .expect("fresh id");
    }
    if let (Some((payload, path)), Some((first, _))) = (&opts.injection, opts.retailers.first()) {
        sim.attach_adversary(Adversary::InjectionSender {
            node: AgentId::new(first.as_str()),
            payload: payload.clone(),
            field_path: path.clone(),
        })
        .expect("retailer exists");
    }
    sim
}

#[derive(Debug, Clone)]
pub struct SupplyOutcome {
    pub report: SimReport,
    pub wholesaler_total: i64,
    pub distributor_total: i64,
    pub published: i64,
}

/// Runs the coordinative flow; the wholesaler's aggregate must match what
/// the retailers published, counting only content that validates.
pub fn run_supplychain_demo(opts: &SupplyOptions) -> Result<SupplyOutcome, ScenarioError> {
    let mut sim = build_supply_sim(opts);
    let report = sim.run()?;
    let total = |id: &str| {
        sim.agent::<SnlAgent>(id)
            .and_then(|a| a.logic::<Aggregator>())
            .map(Aggregator::total)
            .unwrap_or(0)
    };
    let expected: i64 = opts
        .retailers
        .iter()
        .filter(|(_, c)| crate::snl::validate_against(&crate::fixtures::supply_chain_v1_0(), crate::wire::Performative::Publish, c).is_ok())
        .filter_map(|(_, c)| c.get_path("my_decision.quantity").and_then(ContentValue::as_i64))
        .sum();
    let outcome = SupplyOutcome {
        wholesaler_total: total(WHOLESALER),
        distributor_total: total(DISTRIBUTOR),
        published: opts.published_quantity(),
        report,
    };
    if opts.injection.is_none() {
        ensure(outcome.wholesaler_total == expected, || {
            format!("wholesaler aggregate {} != published {expected}", outcome.wholesaler_total)
        })?;
    }
    Ok(outcome)
}
