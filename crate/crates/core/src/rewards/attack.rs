//! Sets of ATT&CK technique identifiers in canonical form.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::RewardError;

fn token_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| Regex::new(r"(?i)^\s*t(\d{4})(?:\.(\d{1,3}))?\s*$").unwrap())
}

fn extract_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| Regex::new(r"(?i)\bt\d{4}(?:\.\d{1,3})?\b").unwrap())
}

fn canonical_technique(token: &str) -> Option<String> {
    let captures = token_pattern().captures(token)?;
    let main = &captures[1];
    Some(match captures.get(2) {
        Some(sub) => format!("T{main}.{:0>3}", sub.as_str()),
        None => format!("T{main}"),
    })
}

/// A duplicate-free set of ATT&CK technique ids, each in canonical form
/// `T<4 digits>` with an optional zero-padded 3-digit sub-technique suffix.
/// Sub-techniques are distinct members; `T1059.001` never stands in for
/// `T1059`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct TechniqueSet {
    ids: BTreeSet<String>,
}

impl TechniqueSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Canonicalizes a list of tokens, dropping malformed ones. Returns the
    /// set and the number of dropped tokens.
    pub fn parse_tokens<I, S>(tokens: I) -> (Self, usize)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut ids = BTreeSet::new();
        let mut dropped = 0;
        for token in tokens {
            match canonical_technique(token.as_ref()) {
                Some(id) => {
                    ids.insert(id);
                }
                None => dropped += 1,
            }
        }
        (Self { ids }, dropped)
    }

    /// Canonicalizes a list of tokens, rejecting the first malformed one.
    pub fn parse_strict<I, S>(tokens: I) -> Result<Self, RewardError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut ids = BTreeSet::new();
        for token in tokens {
            let id = canonical_technique(token.as_ref())
                .ok_or_else(|| RewardError::TechniqueFormat(token.as_ref().to_owned()))?;
            ids.insert(id);
        }
        Ok(Self { ids })
    }

    /// Collects every well-formed technique id in free-running text.
    pub fn extract(text: &str) -> Self {
        let ids = extract_pattern()
            .find_iter(text)
            .filter_map(|m| canonical_technique(m.as_str()))
            .collect();
        Self { ids }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.ids.contains(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.ids.iter().map(String::as_str)
    }

    pub fn intersection_size(&self, other: &Self) -> usize {
        self.ids.intersection(&other.ids).count()
    }
}

impl TryFrom<Vec<String>> for TechniqueSet {
    type Error = RewardError;

    fn try_from(tokens: Vec<String>) -> Result<Self, Self::Error> {
        Self::parse_strict(tokens)
    }
}

impl From<TechniqueSet> for Vec<String> {
    fn from(set: TechniqueSet) -> Self {
        set.ids.into_iter().collect()
    }
}
