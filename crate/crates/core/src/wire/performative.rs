use std::fmt;
use std::str::FromStr;

use super::WireError;

/// Communicative intent of a message, independent of its content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Performative {
    Request,
    Agree,
    Refuse,
    Inform,
    Propose,
    Accept,
    Reject,
    CounterPropose,
    Query,
    Subscribe,
    Publish,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PerformativeClass {
    Transactional,
    Negotiation,
    Information,
}

impl Performative {
    pub const ALL: [Performative; 11] = [
        Performative::Request,
        Performative::Agree,
        Performative::Refuse,
        Performative::Inform,
        Performative::Propose,
        Performative::Accept,
        Performative::Reject,
        Performative::CounterPropose,
        Performative::Query,
        Performative::Subscribe,
        Performative::Publish,
    ];

    pub fn class(self) -> PerformativeClass {
        use Performative::*;
        match self {
            Request | Agree | Refuse | Inform => PerformativeClass::Transactional,
            Propose | Accept | Reject | CounterPropose => PerformativeClass::Negotiation,
            Query | Subscribe | Publish => PerformativeClass::Information,
        }
    }

    pub fn as_str(self) -> &'static str {
        use Performative::*;
        match self {
            Request => "REQUEST",
            Agree => "AGREE",
            Refuse => "REFUSE",
            Inform => "INFORM",
            Propose => "PROPOSE",
            Accept => "ACCEPT",
            Reject => "REJECT",
            CounterPropose => "COUNTER_PROPOSE",
            Query => "QUERY",
            Subscribe => "SUBSCRIBE",
            Publish => "PUBLISH",
        }
    }

    /// Moves that expect a reply from the counterpart.
    pub fn expects_reply(self) -> bool {
        use Performative::*;
        matches!(self, Request | Propose | CounterPropose | Query | Subscribe)
    }
}

impl fmt::Display for Performative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Performative {
    type Err = WireError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Performative::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| WireError::UnknownPerformative(s.to_string()))
    }
}

impl serde::Serialize for Performative {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> serde::Deserialize<'de> for Performative {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = <std::borrow::Cow<'de, str>>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
