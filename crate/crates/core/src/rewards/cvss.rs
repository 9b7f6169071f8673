//! CVSS v3.1 base vectors: parsing, canonical display, and component
//! comparison.

use std::fmt;
use std::sync::OnceLock;

use regex::Regex;

use super::RewardError;

/// The eight base metrics of a CVSS v3.1 vector, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseMetric {
    Av,
    Ac,
    Pr,
    Ui,
    S,
    C,
    I,
    A,
}

impl BaseMetric {
    pub const ALL: [BaseMetric; 8] = [
        BaseMetric::Av,
        BaseMetric::Ac,
        BaseMetric::Pr,
        BaseMetric::Ui,
        BaseMetric::S,
        BaseMetric::C,
        BaseMetric::I,
        BaseMetric::A,
    ];

    pub fn key(self) -> &'static str {
        match self {
            BaseMetric::Av => "AV",
            BaseMetric::Ac => "AC",
            BaseMetric::Pr => "PR",
            BaseMetric::Ui => "UI",
            BaseMetric::S => "S",
            BaseMetric::C => "C",
            BaseMetric::I => "I",
            BaseMetric::A => "A",
        }
    }

    pub fn legal_values(self) -> &'static [char] {
        match self {
            BaseMetric::Av => &['N', 'A', 'L', 'P'],
            BaseMetric::Ac => &['L', 'H'],
            BaseMetric::Pr => &['N', 'L', 'H'],
            BaseMetric::Ui => &['N', 'R'],
            BaseMetric::S => &['U', 'C'],
            BaseMetric::C | BaseMetric::I | BaseMetric::A => &['N', 'L', 'H'],
        }
    }

    fn from_key(key: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|metric| metric.key().eq_ignore_ascii_case(key))
    }
}

const VERSION_TAG: &str = "CVSS:3.1";

fn vector_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| {
        Regex::new(r"(?i)CVSS:3\.1(?:/[A-Za-z]{1,3}:[A-Za-z]{1,3}){1,8}").unwrap()
    })
}

/// A complete CVSS v3.1 base vector, optionally carrying the aggregate base
/// score (reported separately from the vector string, on the standard
/// one-decimal scale).
#[derive(Debug, Clone, PartialEq)]
pub struct CvssVector {
    values: [char; 8],
    pub score: Option<f64>,
}

impl CvssVector {
    /// Parses a v3.1 vector string. Metrics may appear in any order and in
    /// any letter case; unknown keys, illegal values, duplicates, and
    /// missing base metrics are rejected with the offending token named.
    pub fn parse(text: &str) -> Result<Self, RewardError> {
        let mut segments = text.trim().split('/');
        let version = segments.next().unwrap_or("");
        if !version.eq_ignore_ascii_case(VERSION_TAG) {
            return Err(RewardError::UnsupportedVersion(version.to_owned()));
        }
        let mut values: [Option<char>; 8] = [None; 8];
        for segment in segments {
            let (key, value) = segment
                .split_once(':')
                .ok_or_else(|| RewardError::MalformedSegment(segment.to_owned()))?;
            let metric = BaseMetric::from_key(key)
                .ok_or_else(|| RewardError::UnknownMetric(key.to_owned()))?;
            let mut chars = value.chars();
            let letter = match (chars.next(), chars.next()) {
                (Some(letter), None) => letter.to_ascii_uppercase(),
                _ => {
                    return Err(RewardError::IllegalValue {
                        metric: metric.key(),
                        value: value.to_owned(),
                    })
                }
            };
            if !metric.legal_values().contains(&letter) {
                return Err(RewardError::IllegalValue {
                    metric: metric.key(),
                    value: value.to_owned(),
                });
            }
            let slot = &mut values[metric as usize];
            if slot.is_some() {
                return Err(RewardError::DuplicateMetric(metric.key()));
            }
            *slot = Some(letter);
        }
        let mut resolved = ['?'; 8];
        for metric in BaseMetric::ALL {
            resolved[metric as usize] = values[metric as usize]
                .ok_or(RewardError::MissingMetric(metric.key()))?;
        }
        Ok(Self {
            values: resolved,
            score: None,
        })
    }

    /// Extracts the last parseable vector string from free-running text.
    pub fn extract(text: &str) -> Option<Self> {
        vector_pattern()
            .find_iter(text)
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .find_map(|m| Self::parse(m.as_str()).ok())
    }

    /// Attaches the aggregate base score, which must lie in `[0, 10]`.
    pub fn with_score(mut self, score: f64) -> Result<Self, RewardError> {
        if !score.is_finite() || !(0.0..=10.0).contains(&score) {
            return Err(RewardError::ScoreOutOfRange(score));
        }
        self.score = Some(score);
        Ok(self)
    }

    pub fn value(&self, metric: BaseMetric) -> char {
        self.values[metric as usize]
    }

    /// Number of the eight base metrics on which the two vectors agree.
    pub fn matching_components(&self, other: &Self) -> usize {
        BaseMetric::ALL
            .into_iter()
            .filter(|&metric| self.value(metric) == other.value(metric))
            .count()
    }
}

impl fmt::Display for CvssVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(VERSION_TAG)?;
        for metric in BaseMetric::ALL {
            write!(f, "/{}:{}", metric.key(), self.value(metric))?;
        }
        Ok(())
    }
}
