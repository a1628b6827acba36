use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Kind of few-shot examples a state machine was generated with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Typology {
    /// Unrelated toy systems bundled with the tool.
    General,
    /// Ground truth of another system.
    Expert,
    /// Peer components of the same system.
    Domain,
}

impl Typology {
    pub const ALL: [Typology; 3] = [Typology::General, Typology::Expert, Typology::Domain];

    pub fn as_str(self) -> &'static str {
        match self {
            Typology::General => "general",
            Typology::Expert => "expert",
            Typology::Domain => "domain",
        }
    }
}

impl fmt::Display for Typology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown typology `{0}` (expected general, expert or domain)")]
pub struct UnknownTypology(pub String);

impl FromStr for Typology {
    type Err = UnknownTypology;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Typology::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownTypology(s.to_string()))
    }
}
