//! Byte-level trigram language model with add-one smoothing.
//!
//! One model serves three masters: perplexity scoring for the quality filter,
//! per-language likelihoods for the trigram language classifier, and
//! next-byte entropy for the long-context gap oracle. Working on raw bytes
//! keeps the alphabet fixed at 256 symbols, so smoothing, entropy, and
//! perplexity are all well defined for any input including binary junk.
//!
//! Each byte is predicted from the two bytes before it. Positions before the
//! start of a text see the pad byte `0x00`, so every byte of every text has a
//! well-defined context.

use std::collections::HashMap;

/// Number of symbols in the byte alphabet.
const ALPHABET: usize = 256;

/// Pad byte used as context before the start of a text.
const PAD: u8 = 0x00;

/// Trigram counts: context is the pair of preceding bytes.
#[derive(Debug, Clone, Default)]
pub struct ByteTrigramModel {
    counts: HashMap<u16, Box<[u32; ALPHABET]>>,
    totals: HashMap<u16, u64>,
}

fn ctx_key(b1: u8, b2: u8) -> u16 {
    u16::from(b1) << 8 | u16::from(b2)
}

impl ByteTrigramModel {
    /// Empty model: every context is uniform over the byte alphabet.
    pub fn new() -> Self {
        Self::default()
    }

    /// Model fitted on an iterator of training texts.
    pub fn fit<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut model = Self::new();
        for text in texts {
            model.fit_text(text);
        }
        model
    }

    /// Counts every byte transition of `text`, padding the first two
    /// positions.
    pub fn fit_text(&mut self, text: &str) {
        let (mut b1, mut b2) = (PAD, PAD);
        for &next in text.as_bytes() {
            self.observe(b1, b2, next);
            (b1, b2) = (b2, next);
        }
    }

    /// Records a single context-to-byte transition.
    pub fn observe(&mut self, b1: u8, b2: u8, next: u8) {
        let key = ctx_key(b1, b2);
        let row = self
            .counts
            .entry(key)
            .or_insert_with(|| Box::new([0u32; ALPHABET]));
        row[usize::from(next)] += 1;
        *self.totals.entry(key).or_insert(0) += 1;
    }

    /// Add-one smoothed probability of `next` after the context `(b1, b2)`.
    pub fn prob(&self, b1: u8, b2: u8, next: u8) -> f64 {
        let key = ctx_key(b1, b2);
        let count = self
            .counts
            .get(&key)
            .map_or(0, |row| row[usize::from(next)]);
        let total = self.totals.get(&key).copied().unwrap_or(0);
        (f64::from(count) + 1.0) / (total as f64 + ALPHABET as f64)
    }

    /// Entropy in nats of the next-byte distribution after `(b1, b2)`.
    pub fn next_byte_entropy(&self, b1: u8, b2: u8) -> f64 {
        let key = ctx_key(b1, b2);
        let total = self.totals.get(&key).copied().unwrap_or(0);
        match self.counts.get(&key) {
            None => (ALPHABET as f64).ln(),
            Some(row) => {
                let denom = total as f64 + ALPHABET as f64;
                let mut entropy = 0.0;
                for &count in row.iter() {
                    let p = (f64::from(count) + 1.0) / denom;
                    entropy -= p * p.ln();
                }
                entropy
            }
        }
    }

    /// Mean negative log-likelihood per byte, in nats. Empty text scores 0.
    pub fn mean_nll(&self, text: &str) -> f64 {
        let bytes = text.as_bytes();
        if bytes.is_empty() {
            return 0.0;
        }
        let (mut b1, mut b2) = (PAD, PAD);
        let mut nll = 0.0;
        for &next in bytes {
            nll -= self.prob(b1, b2, next).ln();
            (b1, b2) = (b2, next);
        }
        nll / bytes.len() as f64
    }

    /// Per-byte perplexity: `exp(mean_nll)`.
    pub fn perplexity(&self, text: &str) -> f64 {
        self.mean_nll(text).exp()
    }
}

/// Incremental walker used for adaptive entropy scoring: consumes bytes one
/// at a time, exposing the model context just before each byte.
#[derive(Debug, Clone)]
pub struct AdaptiveWalker {
    model: ByteTrigramModel,
    b1: u8,
    b2: u8,
}

impl AdaptiveWalker {
    /// Starts a walk from a base model (typically freshly cloned).
    pub fn new(model: ByteTrigramModel) -> Self {
        Self {
            model,
            b1: PAD,
            b2: PAD,
        }
    }

    /// Entropy of the next-byte distribution at the current position.
    pub fn entropy_here(&self) -> f64 {
        self.model.next_byte_entropy(self.b1, self.b2)
    }

    /// Consumes one byte: counts the transition, then advances the context.
    pub fn consume(&mut self, next: u8) {
        self.model.observe(self.b1, self.b2, next);
        (self.b1, self.b2) = (self.b2, next);
    }

    /// Consumes every byte of `text` in order.
    pub fn consume_text(&mut self, text: &str) {
        for &b in text.as_bytes() {
            self.consume(b);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_model_is_uniform() {
        let m = ByteTrigramModel::new();
        let p = m.prob(b'a', b'b', b'c');
        assert!((p - 1.0 / 256.0).abs() < 1e-15);
        assert!((m.next_byte_entropy(b'a', b'b') - (256f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn probabilities_sum_to_one_per_context() {
        let m = ByteTrigramModel::fit(["the cat sat on the mat", "the dog"]);
        for ctx in [(PAD, PAD), (b't', b'h'), (b'x', b'y')] {
            let sum: f64 = (0..=255u8).map(|b| m.prob(ctx.0, ctx.1, b)).sum();
            assert!((sum - 1.0).abs() < 1e-9, "context {ctx:?} sums to {sum}");
        }
    }

    #[test]
    fn repeated_pattern_lowers_perplexity() {
        let m = ByteTrigramModel::fit(["abcabcabcabcabcabcabcabc"]);
        let familiar = m.perplexity("abcabcabc");
        let foreign = m.perplexity("zzqqwwxxyy");
        assert!(familiar < foreign);
        assert!(familiar < 256.0);
    }

    #[test]
    fn entropy_drops_as_a_context_sharpens() {
        let mut m = ByteTrigramModel::new();
        let flat = m.next_byte_entropy(b'a', b'b');
        for _ in 0..100 {
            m.observe(b'a', b'b', b'c');
        }
        let peaked = m.next_byte_entropy(b'a', b'b');
        assert!(peaked < flat);
    }

    #[test]
    fn entropy_matches_direct_summation() {
        let m = ByteTrigramModel::fit(["hello world, hello there"]);
        let (b1, b2) = (b'h', b'e');
        let direct: f64 = (0..=255u8)
            .map(|b| {
                let p = m.prob(b1, b2, b);
                -p * p.ln()
            })
            .sum();
        assert!((m.next_byte_entropy(b1, b2) - direct).abs() < 1e-12);
    }

    #[test]
    fn empty_text_has_unit_perplexity() {
        let m = ByteTrigramModel::fit(["abc"]);
        assert_eq!(m.mean_nll(""), 0.0);
        assert_eq!(m.perplexity(""), 1.0);
    }

    #[test]
    fn walker_reproduces_batch_fit() {
        let text = "incident response runbook";
        let mut batch = ByteTrigramModel::new();
        batch.fit_text(text);
        let mut walker = AdaptiveWalker::new(ByteTrigramModel::new());
        walker.consume_text(text);
        for ctx1 in [PAD, b'i', b'n', b'r'] {
            for ctx2 in [PAD, b'n', b'c', b'e'] {
                for next in [b'a', b'c', b'i', b's'] {
                    assert_eq!(
                        batch.prob(ctx1, ctx2, next),
                        walker.model.prob(ctx1, ctx2, next)
                    );
                }
            }
        }
    }

    #[test]
    fn walker_entropy_is_position_dependent() {
        let mut walker = AdaptiveWalker::new(ByteTrigramModel::new());
        let fresh = walker.entropy_here();
        walker.consume_text("aaaaaaaaaaaaaaaa");
        let adapted = walker.entropy_here();
        assert!(adapted < fresh);
    }
}
