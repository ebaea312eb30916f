use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use regex::Regex;

use crate::context::ContextHash;
use crate::snl::ValidatedMessage;
use crate::wire::{AgentId, ContentValue};

use super::policy::{Effect, PolicySet, RuleKind};
use super::scan::scan_injection;
use super::FirewallError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FirewallVerdict {
    Allow,
    Deny { rule_id: String, reason: String },
    Quarantine { signature_id: String, path: String },
}

impl FirewallVerdict {
    pub fn is_allow(&self) -> bool {
        matches!(self, FirewallVerdict::Allow)
    }

    pub fn label(&self) -> &'static str {
        match self {
            FirewallVerdict::Allow => "allow",
            FirewallVerdict::Deny { .. } => "deny",
            FirewallVerdict::Quarantine { .. } => "quarantine",
        }
    }
}

impl fmt::Display for FirewallVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FirewallVerdict::Allow => f.write_str("Allow"),
            FirewallVerdict::Deny { rule_id, .. } => write!(f, "Deny({rule_id})"),
            FirewallVerdict::Quarantine { signature_id, path } => write!(f, "Quarantine({signature_id}@{path})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditEntry {
    pub ts: u64,
    pub agent: AgentId,
    pub verdict: FirewallVerdict,
    /// Full content, kept for quarantined messages only.
    pub content: Option<ContentValue>,
}

impl AuditEntry {
    /// `ts | agent | verdict | rule_id | path`
    pub fn line(&self) -> String {
        let (rule, path) = match &self.verdict {
            FirewallVerdict::Allow => ("-", "-"),
            FirewallVerdict::Deny { rule_id, .. } => (rule_id.as_str(), "-"),
            FirewallVerdict::Quarantine { signature_id, path } => (signature_id.as_str(), path.as_str()),
        };
        format!("{} | {} | {} | {} | {}", self.ts, self.agent, self.verdict.label(), rule, path)
    }
}

/// `*` matches any run of characters and `?` exactly one.
pub fn glob_regex(glob: &str) -> Regex {
    let mut re = String::from("^");
    for c in glob.chars() {
        match c {
            '*' => re.push_str(".*"),
            '?' => re.push('.'),
            c => re.push_str(&regex::escape(&c.to_string())),
        }
    }
    re.push('$');
    Regex::new(&re).expect("escaped glob is a valid regex")
}

type CacheKey = (AgentId, ContextHash, String);

/// One agent's firewall: a policy set plus its rate-limit windows and
/// concept-authorization cache.
#[derive(Debug, Clone)]
pub struct Firewall {
    policies: PolicySet,
    globs: Vec<Regex>,
    /// (rule index, sender) → admitted timestamps inside the window
    windows: BTreeMap<(usize, AgentId), VecDeque<u64>>,
    auth_cache: BTreeMap<CacheKey, FirewallVerdict>,
    cache_enabled: bool,
    audit: Vec<AuditEntry>,
}

impl Firewall {
    pub fn new(policies: PolicySet) -> Result<Self, FirewallError> {
        policies.check()?;
        let globs = policies
            .rules
            .iter()
            .map(|r| match &r.kind {
                RuleKind::ConceptAuth { agent_pattern, .. } | RuleKind::RateLimit { agent_pattern, .. } => {
                    glob_regex(agent_pattern)
                }
                RuleKind::ValueConstraint { .. } => glob_regex("*"),
            })
            .collect();
        Ok(Firewall {
            policies,
            globs,
            windows: BTreeMap::new(),
            auth_cache: BTreeMap::new(),
            cache_enabled: true,
            audit: Vec::new(),
        })
    }

    pub fn without_cache(mut self) -> Self {
        self.cache_enabled = false;
        self
    }

    pub fn policies(&self) -> &PolicySet {
        &self.policies
    }

    pub fn audit_log(&self) -> &[AuditEntry] {
        &self.audit
    }

    /// Scan, then concept authorization, then value constraints, then rate
    /// limits. Only an overall Allow is counted against rate limits.
    pub fn evaluate(
        &mut self,
        sender: &AgentId,
        credentials: &BTreeSet<String>,
        msg: &ValidatedMessage,
        now: u64,
    ) -> FirewallVerdict {
        let verdict = self.decide(sender, credentials, msg, now);
        if verdict.is_allow() {
            self.admit(sender, msg, now);
        }
        self.audit.push(AuditEntry {
            ts: now,
            agent: sender.clone(),
            verdict: verdict.clone(),
            content: matches!(verdict, FirewallVerdict::Quarantine { .. }).then(|| msg.content().clone()),
        });
        verdict
    }

    fn decide(
        &mut self,
        sender: &AgentId,
        credentials: &BTreeSet<String>,
        msg: &ValidatedMessage,
        now: u64,
    ) -> FirewallVerdict {
        if let Some(hit) = scan_injection(msg.content(), &self.policies.injection_signatures)
            .into_iter()
            .next()
        {
            return FirewallVerdict::Quarantine {
                signature_id: hit.signature_id,
                path: hit.path,
            };
        }
        for concept in msg.concepts() {
            let verdict = self.authorize(sender, msg.context_hash, concept);
            if !verdict.is_allow() {
                return verdict;
            }
        }
        for rule in &self.policies.rules {
            let RuleKind::ValueConstraint {
                domain,
                field_path,
                comparator,
                threshold,
                required_credential,
            } = &rule.kind
            else {
                continue;
            };
            if msg.urn.domain() != domain || credentials.contains(required_credential) {
                continue;
            }
            if let Some(v) = msg.content().get_path(field_path).and_then(ContentValue::as_f64) {
                if comparator.holds(v, *threshold) {
                    return FirewallVerdict::Deny {
                        rule_id: rule.id.clone(),
                        reason: format!(
                            "{field_path} {} {threshold} requires {required_credential}",
                            comparator.symbol()
                        ),
                    };
                }
            }
        }
        for (idx, rule) in self.policies.rules.iter().enumerate() {
            if !self.rate_rule_applies(idx, sender, msg) {
                continue;
            }
            let RuleKind::RateLimit { max_count, window_ms, .. } = &rule.kind else {
                unreachable!()
            };
            let count = self
                .windows
                .get_mut(&(idx, sender.clone()))
                .map(|w| {
                    prune(w, now, *window_ms);
                    w.len()
                })
                .unwrap_or(0);
            if count >= *max_count as usize {
                return FirewallVerdict::Deny {
                    rule_id: rule.id.clone(),
                    reason: format!("more than {max_count} matching messages in {window_ms} ms"),
                };
            }
        }
        FirewallVerdict::Allow
    }

    fn authorize(&mut self, sender: &AgentId, hash: ContextHash, concept: &str) -> FirewallVerdict {
        let key = (sender.clone(), hash, concept.to_string());
        if self.cache_enabled {
            if let Some(v) = self.auth_cache.get(&key) {
                return v.clone();
            }
        }
        let matched = self.policies.rules.iter().zip(&self.globs).find_map(|(r, g)| match &r.kind {
            RuleKind::ConceptAuth { concept: c, effect, .. } if c == concept && g.is_match(sender.as_str()) => {
                Some((r.id.as_str(), *effect))
            }
            _ => None,
        });
        let verdict = match matched {
            Some((_, Effect::Allow)) => FirewallVerdict::Allow,
            Some((id, Effect::Deny)) => FirewallVerdict::Deny {
                rule_id: id.to_string(),
                reason: format!("{sender} may not use {concept}"),
            },
            None if self.policies.default_effect == Effect::Allow => FirewallVerdict::Allow,
            None => FirewallVerdict::Deny {
                rule_id: "default".to_string(),
                reason: format!("no rule authorizes {concept}"),
            },
        };
        if self.cache_enabled {
            self.auth_cache.insert(key, verdict.clone());
        }
        verdict
    }

    fn rate_rule_applies(&self, idx: usize, sender: &AgentId, msg: &ValidatedMessage) -> bool {
        match &self.policies.rules[idx].kind {
            RuleKind::RateLimit {
                performative, concept, ..
            } => {
                self.globs[idx].is_match(sender.as_str())
                    && performative.is_none_or(|p| p == msg.envelope.performative)
                    && msg.concepts().contains(&concept.as_str())
            }
            _ => false,
        }
    }

    fn admit(&mut self, sender: &AgentId, msg: &ValidatedMessage, now: u64) {
        for idx in 0..self.policies.rules.len() {
            if self.rate_rule_applies(idx, sender, msg) {
                self.windows.entry((idx, sender.clone())).or_default().push_back(now);
            }
        }
    }
}

/// Keeps timestamps with `now - ts < window`.
fn prune(w: &mut VecDeque<u64>, now: u64, window_ms: u64) {
    while w.front().is_some_and(|&ts| now.saturating_sub(ts) >= window_ms) {
        w.pop_front();
    }
}
