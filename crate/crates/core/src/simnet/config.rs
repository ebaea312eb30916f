use std::collections::BTreeMap;

use crate::wire::AgentId;

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    pub latency_ms: u64,
    pub drop_probability: f64,
    /// Models an encrypted link: content-dependent adversaries see nothing.
    pub opaque_to_adversary: bool,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            latency_ms: 10,
            drop_probability: 0.0,
            opaque_to_adversary: false,
        }
    }
}

/// Unordered pair of endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkId(AgentId, AgentId);

impl LinkId {
    pub fn new(a: impl Into<AgentId>, b: impl Into<AgentId>) -> Self {
        let (a, b) = (a.into(), b.into());
        if a <= b {
            LinkId(a, b)
        } else {
            LinkId(b, a)
        }
    }

    pub fn endpoints(&self) -> (&AgentId, &AgentId) {
        (&self.0, &self.1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    /// Used for every pair of agents without an override.
    pub default_link: LinkConfig,
    pub links: BTreeMap<LinkId, LinkConfig>,
    pub max_steps: u64,
    /// Stop once the clock would pass this time; later events stay in flight.
    pub end_time: Option<u64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            default_link: LinkConfig::default(),
            links: BTreeMap::new(),
            max_steps: 1_000_000,
            end_time: None,
        }
    }
}

impl SimConfig {
    pub fn with_seed(seed: u64) -> Self {
        SimConfig {
            seed,
            ..SimConfig::default()
        }
    }

    pub fn link(&self, a: &AgentId, b: &AgentId) -> LinkConfig {
        self.links
            .get(&LinkId::new(a.clone(), b.clone()))
            .copied()
            .unwrap_or(self.default_link)
    }

    pub fn set_link(&mut self, a: impl Into<AgentId>, b: impl Into<AgentId>, cfg: LinkConfig) {
        self.links.insert(LinkId::new(a, b), cfg);
    }

    pub fn check(&self) -> Result<(), SimError> {
        for cfg in std::iter::once(&self.default_link).chain(self.links.values()) {
            if !(0.0..=1.0).contains(&cfg.drop_probability) {
                return Err(SimError::Config(format!(
                    "drop probability {} outside [0, 1]",
                    cfg.drop_probability
                )));
            }
        }
        if self.max_steps == 0 {
            return Err(SimError::Config("max_steps must be positive".into()));
        }
        Ok(())
    }
}
