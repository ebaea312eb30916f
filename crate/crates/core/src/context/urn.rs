use std::fmt;
use std::str::FromStr;

use super::ContextError;

const PREFIX: &str = "urn:contexts:";

/// `urn:contexts:<domain>:v<major>.<minor>`
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContextUrn {
    domain: String,
    major: u32,
    minor: u32,
}

impl ContextUrn {
    pub fn new(domain: impl Into<String>, major: u32, minor: u32) -> Result<Self, ContextError> {
        let domain = domain.into();
        if domain.is_empty() || domain.contains(':') || domain.chars().any(char::is_whitespace) {
            return Err(ContextError::InvalidUrn(format!("bad domain {domain:?}")));
        }
        Ok(ContextUrn { domain, major, minor })
    }

    pub fn domain(&self) -> &str {
        &self.domain
    }

    pub fn major(&self) -> u32 {
        self.major
    }

    pub fn minor(&self) -> u32 {
        self.minor
    }

    pub fn version(&self) -> (u32, u32) {
        (self.major, self.minor)
    }

    /// Same domain and major version.
    pub fn wire_compatible(&self, other: &ContextUrn) -> bool {
        self.domain == other.domain && self.major == other.major
    }
}

pub fn parse_urn(text: &str) -> Result<ContextUrn, ContextError> {
    let bad = |why: &str| ContextError::InvalidUrn(format!("{text:?}: {why}"));
    let rest = text.strip_prefix(PREFIX).ok_or_else(|| bad("expected urn:contexts: prefix"))?;
    let (domain, version) = rest.rsplit_once(':').ok_or_else(|| bad("missing version"))?;
    let version = version.strip_prefix('v').ok_or_else(|| bad("version must start with v"))?;
    let (major, minor) = version.split_once('.').ok_or_else(|| bad("version needs major.minor"))?;
    let number = |s: &str| -> Result<u32, ContextError> {
        let canonical = !s.is_empty()
            && s.bytes().all(|b| b.is_ascii_digit())
            && (s == "0" || !s.starts_with('0'));
        if !canonical {
            return Err(bad("non-numeric version"));
        }
        s.parse().map_err(|_| bad("version out of range"))
    };
    ContextUrn::new(domain, number(major)?, number(minor)?)
}

impl fmt::Display for ContextUrn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{PREFIX}{}:v{}.{}", self.domain, self.major, self.minor)
    }
}

impl FromStr for ContextUrn {
    type Err = ContextError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_urn(s)
    }
}
