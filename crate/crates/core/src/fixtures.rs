//! Context documents, test authority seeds and signed copies shipped with the
//! crate. The seeds are public test keys; never use them outside simulations.

use crate::context::SharedContext;

pub const TRAVEL_V2_0: &str = include_str!("../fixtures/context/travel-v2.0.json");
pub const TRAVEL_V2_1: &str = include_str!("../fixtures/context/travel-v2.1.json");
pub const SUPPLY_CHAIN_V1_0: &str = include_str!("../fixtures/context/supplyChain-v1.0.json");
pub const PAYMENT_V1_0: &str = include_str!("../fixtures/context/payment-v1.0.json");
pub const PAYMENT_V2_0: &str = include_str!("../fixtures/context/payment-v2.0.json");
pub const SNL_META_V1_0: &str = include_str!("../fixtures/context/snl-meta-v1.0.json");
pub const PAYMENT_V1_0_POISONED: &str = include_str!("../fixtures/context/payment-v1.0-poisoned.json");

/// `(file name, document)` for every shipped (untampered) context.
pub const CONTEXT_DOCUMENTS: [(&str, &str); 6] = [
    ("travel-v2.0.json", TRAVEL_V2_0),
    ("travel-v2.1.json", TRAVEL_V2_1),
    ("supplyChain-v1.0.json", SUPPLY_CHAIN_V1_0),
    ("payment-v1.0.json", PAYMENT_V1_0),
    ("payment-v2.0.json", PAYMENT_V2_0),
    ("snl-meta-v1.0.json", SNL_META_V1_0),
];

pub const ROOT_AUTHORITY: &str = "agentwire-root";
pub const TRAVEL_AUTHORITY: &str = "sa-travel";
pub const SUPPLY_AUTHORITY: &str = "sa-supply";
pub const PAYMENT_AUTHORITY: &str = "sa-payment";
/// Holds a key but is absent from the default trust store.
pub const ROGUE_AUTHORITY: &str = "sa-rogue";

const SEEDS: [(&str, &str); 5] = [
    (ROOT_AUTHORITY, include_str!("../fixtures/keys/agentwire-root.key")),
    (TRAVEL_AUTHORITY, include_str!("../fixtures/keys/sa-travel.key")),
    (SUPPLY_AUTHORITY, include_str!("../fixtures/keys/sa-supply.key")),
    (PAYMENT_AUTHORITY, include_str!("../fixtures/keys/sa-payment.key")),
    (ROGUE_AUTHORITY, include_str!("../fixtures/keys/sa-rogue.key")),
];

pub const TRUSTED_AUTHORITIES: [&str; 4] =
    [ROOT_AUTHORITY, TRAVEL_AUTHORITY, SUPPLY_AUTHORITY, PAYMENT_AUTHORITY];

/// Hex seed of a shipped test authority.
pub fn authority_seed_hex(authority_id: &str) -> Option<&'static str> {
    SEEDS
        .iter()
        .find(|(id, _)| *id == authority_id)
        .map(|(_, s)| s.trim())
}

fn load(doc: &str) -> SharedContext {
    SharedContext::from_bytes(doc.as_bytes()).expect("shipped context fixture parses")
}

pub fn travel_v2_0() -> SharedContext {
    load(TRAVEL_V2_0)
}

pub fn travel_v2_1() -> SharedContext {
    load(TRAVEL_V2_1)
}

pub fn supply_chain_v1_0() -> SharedContext {
    load(SUPPLY_CHAIN_V1_0)
}

pub fn payment_v1_0() -> SharedContext {
    load(PAYMENT_V1_0)
}

pub fn payment_v2_0() -> SharedContext {
    load(PAYMENT_V2_0)
}

pub fn snl_meta_v1_0() -> SharedContext {
    load(SNL_META_V1_0)
}

/// payment:v1.0 with the `sender_id` and `receiver_id` definitions swapped.
pub fn payment_v1_0_poisoned() -> SharedContext {
    load(PAYMENT_V1_0_POISONED)
}

pub fn all_contexts() -> Vec<SharedContext> {
    CONTEXT_DOCUMENTS.iter().map(|(_, d)| load(d)).collect()
}
