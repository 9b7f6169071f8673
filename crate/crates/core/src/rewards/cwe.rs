//! CWE identifiers with a canonical textual form.

use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::RewardError;

fn cwe_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| Regex::new(r"(?i)cwe\s*-\s*(\d+)").unwrap())
}

/// A CWE identifier in canonical form `CWE-<number>`, with case,
/// whitespace, and leading zeros normalized away.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CweId(String);

impl CweId {
    /// Parses a string that is exactly one CWE identifier, tolerating case
    /// and whitespace around the hyphen.
    pub fn parse(text: &str) -> Result<Self, RewardError> {
        let trimmed = text.trim();
        let captures = cwe_pattern()
            .captures(trimmed)
            .ok_or_else(|| RewardError::CweFormat(text.to_owned()))?;
        let whole = captures.get(0).unwrap();
        if whole.start() != 0 || whole.end() != trimmed.len() {
            return Err(RewardError::CweFormat(text.to_owned()));
        }
        Ok(Self::from_digits(&captures[1]))
    }

    /// Extracts the last well-formed CWE identifier from free-running text,
    /// or `None` when the text contains none.
    pub fn extract(text: &str) -> Option<Self> {
        cwe_pattern()
            .captures_iter(text)
            .last()
            .map(|captures| Self::from_digits(&captures[1]))
    }

    fn from_digits(digits: &str) -> Self {
        let normalized = digits.trim_start_matches('0');
        let number = if normalized.is_empty() { "0" } else { normalized };
        Self(format!("CWE-{number}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CweId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for CweId {
    type Error = RewardError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::parse(&value)
    }
}

impl From<CweId> for String {
    fn from(id: CweId) -> Self {
        id.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_survives_parsing() {
        assert_eq!(CweId::parse("CWE-79").unwrap().as_str(), "CWE-79");
    }

    #[test]
    fn case_and_whitespace_are_normalized() {
        assert_eq!(CweId::parse("cwe- 79").unwrap().as_str(), "CWE-79");
        assert_eq!(CweId::parse("  CwE - 416 ").unwrap().as_str(), "CWE-416");
    }

    #[test]
    fn leading_zeros_are_stripped() {
        assert_eq!(CweId::parse("CWE-079").unwrap().as_str(), "CWE-79");
    }

    #[test]
    fn bare_numbers_and_junk_are_rejected() {
        assert!(CweId::parse("79").is_err());
        assert!(CweId::parse("CWE-").is_err());
        assert!(CweId::parse("weakness 79").is_err());
        assert!(CweId::parse("CWE-79 or so").is_err());
    }

    #[test]
    fn extraction_takes_the_last_identifier() {
        let text = "Likely CWE-79 (XSS), though the sink suggests cwe-89 instead.";
        assert_eq!(CweId::extract(text).unwrap().as_str(), "CWE-89");
        assert_eq!(CweId::extract("no identifiers here"), None);
    }
}
