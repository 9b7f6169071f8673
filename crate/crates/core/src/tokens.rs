//! Token counting for length budgets.
//!
//! Packing and length checks need a token count long before any model
//! tokenizer is in the loop. The default counter applies a fixed inflation
//! factor to the whitespace token count, which tracks subword tokenizers
//! closely enough for budget decisions at corpus scale. Anything that needs
//! exact counts can supply its own [`TokenCounter`].

/// Source of token counts for budget and length decisions.
pub trait TokenCounter {
    /// Number of tokens charged against a budget for `text`.
    fn count(&self, text: &str) -> usize;
}

/// Whitespace word count inflated by a constant subword factor.
#[derive(Debug, Clone, Copy)]
pub struct InflatedWhitespaceCounter {
    /// Multiplier applied to the whitespace token count before rounding up.
    pub factor: f64,
}

impl Default for InflatedWhitespaceCounter {
    fn default() -> Self {
        Self { factor: 1.3 }
    }
}

impl TokenCounter for InflatedWhitespaceCounter {
    fn count(&self, text: &str) -> usize {
        let words = text.split_whitespace().count();
        (words as f64 * self.factor).ceil() as usize
    }
}

/// Whitespace-separated tokens of `text`, lowercased. Shared by the
/// near-duplicate shingler and anything else that needs a cheap, stable
/// token stream.
pub fn lowercase_tokens(text: &str) -> Vec<String> {
    text.split_whitespace().map(|t| t.to_lowercase()).collect()
}
