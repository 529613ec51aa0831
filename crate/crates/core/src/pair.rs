use std::fmt;

use serde::{Deserialize, Serialize};

/// Unordered pair of gene identifiers, stored with the lexicographically
/// smaller identifier first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "(String, String)", into = "(String, String)")]
pub struct GenePair {
    first: String,
    second: String,
}

impl GenePair {
    pub fn new(a: impl Into<String>, b: impl Into<String>) -> Self {
        let (a, b) = (a.into(), b.into());
        if a <= b {
            Self { first: a, second: b }
        } else {
            Self { first: b, second: a }
        }
    }

    /// Accepts only an already-canonical ordering.
    pub fn from_canonical(a: impl Into<String>, b: impl Into<String>) -> Option<Self> {
        let (a, b) = (a.into(), b.into());
        (a <= b).then_some(Self { first: a, second: b })
    }

    pub fn first(&self) -> &str {
        &self.first
    }

    pub fn second(&self) -> &str {
        &self.second
    }

    pub fn is_self_pair(&self) -> bool {
        self.first == self.second
    }

    pub fn contains(&self, id: &str) -> bool {
        self.first == id || self.second == id
    }
}

impl TryFrom<(String, String)> for GenePair {
    type Error = String;

    fn try_from((a, b): (String, String)) -> Result<Self, Self::Error> {
        Self::from_canonical(a.clone(), b.clone())
            .ok_or_else(|| format!("pair ({a}, {b}) is not in canonical order"))
    }
}

impl From<GenePair> for (String, String) {
    fn from(p: GenePair) -> Self {
        (p.first, p.second)
    }
}

impl fmt::Display for GenePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.first, self.second)
    }
}
