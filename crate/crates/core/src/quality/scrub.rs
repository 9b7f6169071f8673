//! Sensitive-information scrubbing with typed placeholders.
//!
//! Matches are replaced, not deleted, so surrounding token positions
//! survive for downstream alignment. Rules run in a fixed priority order
//! over the original text; a span claimed by a higher-priority rule is
//! never re-matched by a lower one. Long encoded blobs are truncated rather
//! than fully removed, keeping a short identifiable prefix.

use regex::Regex;
use serde::{Deserialize, Serialize};

/// Placeholder appended after a truncated encoded blob.
pub const B64_MARKER: &str = "⟨B64_TRUNCATED⟩";

/// Longest blob prefix kept in front of [`B64_MARKER`].
const B64_KEEP: usize = 64;

/// Compiled scrub rule set.
#[derive(Debug, Clone)]
pub struct ScrubRules {
    email: Regex,
    tracking: Regex,
    base64: Regex,
    hex: Regex,
    phone: Regex,
    base64_min: usize,
}

impl ScrubRules {
    /// Compiles the rule set. `base64_min` and `hex_min` are the minimum
    /// run lengths treated as encoded blobs and session tokens.
    pub fn new(base64_min: usize, hex_min: usize) -> Self {
        let base64_min = base64_min.max(2);
        let hex_min = hex_min.max(2);
        Self {
            email: Regex::new(r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}").unwrap(),
            tracking: Regex::new(r"[?&](?:utm_[a-z]+|gclid|fbclid|mc_eid|igshid)=[^&\s]*")
                .unwrap(),
            base64: Regex::new(&format!(r"[A-Za-z0-9+/]{{{base64_min},}}={{0,2}}")).unwrap(),
            hex: Regex::new(&format!(r"\b[0-9a-fA-F]{{{hex_min},}}\b")).unwrap(),
            // Requires an international prefix or a parenthesized area code,
            // so that hyphenated identifiers such as CVE numbers never match.
            phone: Regex::new(
                r"\+\d{1,3}[ .-]?(?:\(\d{1,4}\)[ .-]?)?\d{2,4}[ .-]\d{3,4}(?:[ .-]\d{3,4})?|\(\d{1,4}\)[ .-]?\d{2,4}[ .-]?\d{3,4}",
            )
            .unwrap(),
            base64_min,
        }
    }
}

impl Default for ScrubRules {
    fn default() -> Self {
        Self::new(128, 32)
    }
}

/// One replacement made by the scrubber, in original-text byte offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedactionSpan {
    pub start: usize,
    pub end: usize,
    pub rule: String,
}

/// Everything the scrubber did to one text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ScrubReport {
    /// Non-overlapping spans in ascending order.
    pub spans: Vec<RedactionSpan>,
    /// Replacement policy applied to every span.
    pub policy: String,
}

struct Planned {
    start: usize,
    end: usize,
    rule: &'static str,
    replacement: String,
}

/// Replaces sensitive spans of `text` with typed placeholders.
///
/// Returns the scrubbed text and a report listing every replacement.
/// Text outside the reported spans is byte-identical to the input, and
/// scrubbing is idempotent: a second pass changes nothing.
pub fn scrub_sensitive(text: &str, rules: &ScrubRules) -> (String, ScrubReport) {
    let mut planned: Vec<Planned> = Vec::new();
    let overlaps = |planned: &[Planned], start: usize, end: usize| {
        planned.iter().any(|p| start < p.end && p.start < end)
    };

    let passes: [(&'static str, &Regex); 5] = [
        ("email", &rules.email),
        ("url_tracking", &rules.tracking),
        ("base64_run", &rules.base64),
        ("hex_token", &rules.hex),
        ("phone", &rules.phone),
    ];
    for (rule, regex) in passes {
        for m in regex.find_iter(text) {
            if overlaps(&planned, m.start(), m.end()) {
                continue;
            }
            if text[m.end()..].starts_with(B64_MARKER) {
                // The run is a prefix kept by an earlier truncation pass;
                // re-matching it would break idempotency.
                continue;
            }
            let replacement = match rule {
                "email" => "⟨EMAIL⟩".to_owned(),
                "url_tracking" => "⟨TRACKING⟩".to_owned(),
                "hex_token" => "⟨HEX_TOKEN⟩".to_owned(),
                "phone" => "⟨PHONE⟩".to_owned(),
                "base64_run" => {
                    let keep = B64_KEEP.min(rules.base64_min - 1);
                    let prefix: String = m.as_str().chars().take(keep).collect();
                    format!("{prefix}{B64_MARKER}")
                }
                _ => unreachable!(),
            };
            planned.push(Planned {
                start: m.start(),
                end: m.end(),
                rule,
                replacement,
            });
        }
    }

    planned.sort_by_key(|p| p.start);
    let mut out = String::with_capacity(text.len());
    let mut report = ScrubReport {
        spans: Vec::with_capacity(planned.len()),
        policy: "placeholder".to_owned(),
    };
    let mut cursor = 0;
    for p in planned {
        out.push_str(&text[cursor..p.start]);
        out.push_str(&p.replacement);
        cursor = p.end;
        report.spans.push(RedactionSpan {
            start: p.start,
            end: p.end,
            rule: p.rule.to_owned(),
        });
    }
    out.push_str(&text[cursor..]);
    (out, report)
}
