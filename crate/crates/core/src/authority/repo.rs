use std::collections::BTreeMap;

use crate::context::{ContextUrn, SharedContext};
use crate::fixtures;

use super::keys::Authority;
use super::signed::SignedContext;

/// Local store of signed context documents, keyed by URN.
#[derive(Debug, Clone, Default)]
pub struct ContextRepo {
    contexts: BTreeMap<ContextUrn, SignedContext>,
}

impl ContextRepo {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every shipped context, signed by its issuing test authority.
    pub fn builtin() -> Self {
        let mut repo = ContextRepo::new();
        for ctx in fixtures::all_contexts() {
            repo.insert(sign_with_fixture_key(&ctx));
        }
        repo
    }

    pub fn insert(&mut self, sc: SignedContext) -> Option<SignedContext> {
        self.contexts.insert(sc.context.urn.clone(), sc)
    }

    pub fn get(&self, urn: &ContextUrn) -> Option<&SignedContext> {
        self.contexts.get(urn)
    }

    pub fn urns(&self) -> impl Iterator<Item = &ContextUrn> {
        self.contexts.keys()
    }
}

/// Signs a context with the shipped key of the authority named in its header.
pub fn sign_with_fixture_key(ctx: &SharedContext) -> SignedContext {
    Authority::fixture(&ctx.authority_id)
        .unwrap_or_else(|| panic!("no fixture key for {}", ctx.authority_id))
        .sign_context(ctx)
}
