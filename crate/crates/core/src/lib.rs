//! Agent wire protocol with a semantic negotiation layer, schema authorities,
//! a semantic firewall and a deterministic network simulator.

pub mod authority;
pub mod context;
pub mod firewall;
pub mod fixtures;
pub mod scenarios;
pub mod simnet;
pub mod snl;
pub mod sweep;
pub mod wire;
