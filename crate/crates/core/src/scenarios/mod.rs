//! Runnable scenarios: the travel booking, the supply-chain group and the
//! attack demonstrations, plus the agent runtime they share.

pub mod attacks;
pub mod runtime;
pub mod supply;
pub mod travel;

use thiserror::Error;

use crate::context::ContextUrn;
use crate::simnet::SimError;

pub use attacks::{run_attack_demo, AttackKind, AttackOutcome};
pub use runtime::{AgentConfig, AgentLogic, Passive, Runtime, SnlAgent};
pub use supply::{run_supplychain_demo, SupplyDecision, SupplyOptions, SupplyOutcome};
pub use travel::{run_travel_demo, BookingAsk, TravelOptions, TravelOutcome};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("scenario assertion failed: {0}")]
    AssertionFailed(String),
    #[error("invalid scenario input: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), ScenarioError> {
    if cond {
        Ok(())
    } else {
        Err(ScenarioError::AssertionFailed(msg()))
    }
}

pub(crate) fn urn(text: &str) -> ContextUrn {
    text.parse().expect("scenario URN literal")
}
