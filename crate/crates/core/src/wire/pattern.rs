//! Interaction patterns and reply legality.
//!
//! The reply table is shared by every pattern; a pattern narrows it to the
//! performatives it uses. Pub-sub streams (INFORM after an agreed SUBSCRIBE)
//! are conversation state, not immediate replies, and are tracked by
//! [`Conversation`].

use std::collections::HashMap;

use thiserror::Error;

use super::envelope::{AgentId, Envelope};
use super::performative::Performative;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InteractionPattern {
    /// 1:1
    RequestReply,
    /// 1:N
    PublishSubscribe,
    /// N:1
    Aggregation,
    /// N:N
    CollaborationGroup,
}

impl InteractionPattern {
    pub const ALL: [InteractionPattern; 4] = [
        InteractionPattern::RequestReply,
        InteractionPattern::PublishSubscribe,
        InteractionPattern::Aggregation,
        InteractionPattern::CollaborationGroup,
    ];

    /// Performatives that may appear in a conversation following this pattern.
    pub fn permits(self, p: Performative) -> bool {
        use Performative::*;
        match self {
            InteractionPattern::RequestReply => !matches!(p, Subscribe | Publish),
            InteractionPattern::PublishSubscribe => {
                matches!(p, Subscribe | Agree | Refuse | Inform | Publish)
            }
            InteractionPattern::Aggregation => {
                matches!(p, Request | Agree | Refuse | Query | Inform | Publish)
            }
            InteractionPattern::CollaborationGroup => true,
        }
    }

    /// Whether only the conversation initiator may open new exchanges.
    fn initiator_only(self) -> bool {
        matches!(self, InteractionPattern::RequestReply)
    }
}

/// Base reply table, independent of pattern.
fn reply_table(received: Performative, reply: Performative) -> bool {
    use Performative::*;
    match received {
        Request | Subscribe => matches!(reply, Agree | Refuse),
        Propose | CounterPropose => matches!(reply, Accept | Reject | CounterPropose),
        Query => matches!(reply, Inform | Refuse),
        Agree | Refuse | Inform | Accept | Reject | Publish => false,
    }
}

/// True iff `reply` is a legal immediate answer to `received` under `pattern`.
pub fn legal_reply(pattern: InteractionPattern, received: Performative, reply: Performative) -> bool {
    pattern.permits(received) && pattern.permits(reply) && reply_table(received, reply)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConversationError {
    #[error("message {0} belongs to conversation {1}")]
    WrongConversation(String, String),
    #[error("duplicate message id {0} from {1}")]
    DuplicateMessage(String, AgentId),
    #[error("in_reply_to {0} names no earlier message from a receiver")]
    UnknownReference(String),
    #[error("{reply} is not a legal reply to {received} in {pattern:?}")]
    IllegalReply {
        pattern: InteractionPattern,
        received: Performative,
        reply: Performative,
    },
    #[error("{0} already answered")]
    AlreadyAnswered(String),
    #[error("{0} not permitted to open an exchange in {1:?}")]
    RoleViolation(AgentId, InteractionPattern),
    #[error("{0} not used by {1:?}")]
    NotInPattern(Performative, InteractionPattern),
    #[error("conversation already failed: {0}")]
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConversationState {
    Open,
    Error(String),
}

#[derive(Debug, Clone)]
struct SeenMessage {
    performative: Performative,
    answered: bool,
    subscribed: bool,
}

/// Tracks one conversation and enforces the pattern's state machine.
#[derive(Debug, Clone)]
pub struct Conversation {
    id: String,
    pattern: InteractionPattern,
    initiator: AgentId,
    seen: HashMap<(AgentId, String), SeenMessage>,
    state: ConversationState,
}

impl Conversation {
    pub fn new(id: impl Into<String>, pattern: InteractionPattern) -> Self {
        let id = id.into();
        let initiator = AgentId::new(id.split('/').next().unwrap_or_default());
        Conversation {
            id,
            pattern,
            initiator,
            seen: HashMap::new(),
            state: ConversationState::Open,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn state(&self) -> &ConversationState {
        &self.state
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }

    /// Records an envelope; an illegal move moves the conversation to `Error`.
    pub fn observe(&mut self, env: &Envelope) -> Result<(), ConversationError> {
        if let ConversationState::Error(e) = &self.state {
            return Err(ConversationError::Failed(e.clone()));
        }
        let result = self.check_and_record(env);
        if let Err(e) = &result {
            self.state = ConversationState::Error(e.to_string());
        }
        result
    }

    fn check_and_record(&mut self, env: &Envelope) -> Result<(), ConversationError> {
        if env.conversation_id != self.id {
            return Err(ConversationError::WrongConversation(
                env.message_id.clone(),
                self.id.clone(),
            ));
        }
        let key = (env.sender_id.clone(), env.message_id.clone());
        if self.seen.contains_key(&key) {
            return Err(ConversationError::DuplicateMessage(
                env.message_id.clone(),
                env.sender_id.clone(),
            ));
        }
        if !self.pattern.permits(env.performative) {
            return Err(ConversationError::NotInPattern(env.performative, self.pattern));
        }
        match &env.in_reply_to {
            Some(parent_id) => {
                let parent_key = env
                    .receiver_ids
                    .iter()
                    .map(|r| (r.clone(), parent_id.clone()))
                    .find(|k| self.seen.contains_key(k))
                    .ok_or_else(|| ConversationError::UnknownReference(parent_id.clone()))?;
                let pattern = self.pattern;
                let parent = self.seen.get_mut(&parent_key).expect("looked up above");
                let stream = parent.performative == Performative::Subscribe
                    && parent.subscribed
                    && env.performative == Performative::Inform;
                if !stream {
                    if !legal_reply(pattern, parent.performative, env.performative) {
                        return Err(ConversationError::IllegalReply {
                            pattern,
                            received: parent.performative,
                            reply: env.performative,
                        });
                    }
                    if parent.answered {
                        return Err(ConversationError::AlreadyAnswered(parent_id.clone()));
                    }
                    parent.answered = true;
                    if parent.performative == Performative::Subscribe
                        && env.performative == Performative::Agree
                    {
                        parent.subscribed = true;
                    }
                }
            }
            None => {
                if self.pattern.initiator_only() && env.sender_id != self.initiator {
                    return Err(ConversationError::RoleViolation(
                        env.sender_id.clone(),
                        self.pattern,
                    ));
                }
                if !matches!(
                    env.performative,
                    Performative::Request
                        | Performative::Query
                        | Performative::Propose
                        | Performative::Subscribe
                        | Performative::Publish
                        | Performative::Inform
                ) {
                    return Err(ConversationError::UnknownReference(String::new()));
                }
            }
        }
        self.seen.insert(
            key,
            SeenMessage {
                performative: env.performative,
                answered: false,
                subscribed: false,
            },
        );
        Ok(())
    }
}
