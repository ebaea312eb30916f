use std::collections::BTreeSet;

use crate::authority::SignedContext;
use crate::context::ContextUrn;
use crate::snl::{is_handshake, SnlMessage};
use crate::wire::{AgentId, ContentValue, Envelope};

use super::config::LinkId;

/// Attacker models. Link adversaries rewrite traffic on one link; node
/// adversaries act from, or on behalf of, one node.
#[derive(Debug, Clone, PartialEq)]
pub enum Adversary {
    /// Removes URNs (and the floors of their domains) from SNL-HELLOs.
    HelloStripper { link: LinkId, strip: BTreeSet<ContextUrn> },
    /// Swaps the signed context in an SNL-SELECT for `substitute`.
    ContextPoisoner { link: LinkId, substitute: SignedContext },
    /// Sends copies of `template` from `node` to `target` at a fixed rate.
    Flooder {
        node: AgentId,
        target: AgentId,
        template: Envelope,
        rate_per_sec: f64,
        start_ms: u64,
        duration_ms: u64,
    },
    /// Overwrites `field_path` with `payload` in the node's outgoing content.
    InjectionSender {
        node: AgentId,
        payload: String,
        field_path: String,
    },
}

impl Adversary {
    pub fn name(&self) -> &'static str {
        match self {
            Adversary::HelloStripper { .. } => "hello-stripper",
            Adversary::ContextPoisoner { .. } => "context-poisoner",
            Adversary::Flooder { .. } => "flooder",
            Adversary::InjectionSender { .. } => "injection-sender",
        }
    }

    pub fn link(&self) -> Option<&LinkId> {
        match self {
            Adversary::HelloStripper { link, .. } | Adversary::ContextPoisoner { link, .. } => Some(link),
            _ => None,
        }
    }

    /// Rewrites an in-flight envelope; returns a trace note when it acted.
    pub(crate) fn transform(&self, env: &mut Envelope, link: &LinkId, opaque: bool) -> Option<String> {
        match self {
            Adversary::HelloStripper { link: l, strip } if l == link && !opaque => {
                let Ok(SnlMessage::Hello(mut hello)) = handshake(env) else { return None };
                let before = hello.supported.len();
                let stripped: Vec<ContextUrn> =
                    hello.supported.iter().filter(|u| strip.contains(u)).cloned().collect();
                hello.supported.retain(|u| !strip.contains(u));
                for u in &stripped {
                    hello.min_versions.remove(u.domain());
                }
                hello.min_versions.retain(|d, _| hello.supported.iter().any(|u| u.domain() == d));
                if hello.supported.len() == before {
                    return None;
                }
                env.content = SnlMessage::Hello(hello).to_content();
                Some(format!(
                    "strip {}",
                    stripped.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
                ))
            }
            Adversary::ContextPoisoner { link: l, substitute } if l == link && !opaque => {
                let Ok(SnlMessage::Select(mut select)) = handshake(env) else { return None };
                if substitute.context.urn != select.chosen {
                    return None;
                }
                select.signed_context = substitute.clone();
                env.content = SnlMessage::Select(select).to_content();
                Some(format!("poison {}", substitute.context.urn))
            }
            Adversary::InjectionSender {
                node,
                payload,
                field_path,
            } if &env.sender_id == node => {
                if is_handshake(&env.content) || env.content.get_path(field_path).is_none() {
                    return None;
                }
                env.content.set_path(field_path, ContentValue::from(payload.as_str()));
                Some(format!("inject {field_path}"))
            }
            _ => None,
        }
    }
}

fn handshake(env: &Envelope) -> Result<SnlMessage, ()> {
    if !is_handshake(&env.content) {
        return Err(());
    }
    SnlMessage::from_content(&env.content).map_err(|_| ())
}
