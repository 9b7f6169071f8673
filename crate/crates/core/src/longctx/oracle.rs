//! Entropy and retrieval oracles for long-context synthesis.
//!
//! The shipped entropy oracle is an adaptive byte-trigram model: scoring
//! walks the prefix and document byte by byte, updating counts as it goes,
//! and reads off the next-byte entropy at the first byte of each token.
//! Because the model adapts, content seen in the prefix sharpens
//! predictions deep inside the document, which is exactly the effect the
//! candidate-verification gate measures. Scoring is a pure function of
//! `(base model, prefix, doc)`, so repeated calls reproduce entropies
//! bit for bit.

use crate::ngram::{AdaptiveWalker, ByteTrigramModel};
use crate::record::CorpusRecord;
use crate::util::dense_cosine;

/// Per-token next-token entropy, in nats, of a document under an optional
/// prefix.
pub trait EntropyOracle {
    /// One entropy per whitespace token of `doc`, evaluated at the token's
    /// first byte after consuming `prefix` and all preceding document
    /// bytes.
    fn entropies(&self, prefix: &str, doc: &str) -> Vec<f64>;
}

/// A retrievable passage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    /// Id of the record the passage came from.
    pub id: String,
    /// Passage text.
    pub text: String,
}

/// Supplies candidate passages for a record's information gaps.
pub trait CandidateRetriever {
    /// Up to `k` candidates, most relevant first; never includes the
    /// record itself.
    fn retrieve(&self, record: &CorpusRecord, k: usize) -> Vec<Candidate>;
}

/// Byte offsets of the first byte of each whitespace token.
pub(crate) fn token_starts(doc: &str) -> Vec<usize> {
    let mut starts = Vec::new();
    let mut in_token = false;
    for (i, ch) in doc.char_indices() {
        if ch.is_whitespace() {
            in_token = false;
        } else if !in_token {
            starts.push(i);
            in_token = true;
        }
    }
    starts
}

/// Adaptive byte-trigram entropy oracle.
#[derive(Debug, Clone, Default)]
pub struct AdaptiveTrigramOracle {
    base: ByteTrigramModel,
}

impl AdaptiveTrigramOracle {
    /// Oracle that starts every scoring pass from an empty model.
    pub fn fresh() -> Self {
        Self::default()
    }

    /// Oracle that starts every scoring pass from a fitted base model.
    pub fn with_base(base: ByteTrigramModel) -> Self {
        Self { base }
    }
}

impl EntropyOracle for AdaptiveTrigramOracle {
    fn entropies(&self, prefix: &str, doc: &str) -> Vec<f64> {
        let mut walker = AdaptiveWalker::new(self.base.clone());
        walker.consume_text(prefix);
        let starts = token_starts(doc);
        let mut out = Vec::with_capacity(starts.len());
        let mut next_start = 0usize;
        for (offset, &byte) in doc.as_bytes().iter().enumerate() {
            if next_start < starts.len() && starts[next_start] == offset {
                out.push(walker.entropy_here());
                next_start += 1;
            }
            walker.consume(byte);
        }
        out
    }
}

/// Cosine top-k retrieval over record embeddings.
#[derive(Debug, Clone)]
pub struct EmbeddingRetriever {
    entries: Vec<(String, String, Vec<f64>)>,
}

impl EmbeddingRetriever {
    /// Indexes every record that carries an embedding.
    pub fn new(corpus: &[CorpusRecord]) -> Self {
        let entries = corpus
            .iter()
            .filter_map(|r| {
                r.embedding
                    .as_ref()
                    .map(|e| (r.id.clone(), r.text.clone(), e.clone()))
            })
            .collect();
        Self { entries }
    }
}

impl CandidateRetriever for EmbeddingRetriever {
    fn retrieve(&self, record: &CorpusRecord, k: usize) -> Vec<Candidate> {
        let Some(query) = &record.embedding else {
            return Vec::new();
        };
        let mut scored: Vec<(f64, &str, &str)> = self
            .entries
            .iter()
            .filter(|(id, _, _)| *id != record.id)
            .map(|(id, text, e)| (dense_cosine(query, e), id.as_str(), text.as_str()))
            .collect();
        scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(b.1)));
        scored
            .into_iter()
            .take(k)
            .map(|(_, id, text)| Candidate {
                id: id.to_owned(),
                text: text.to_owned(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::SourceCategory;

    #[test]
    fn token_starts_handle_mixed_whitespace() {
        assert_eq!(token_starts("ab  cd\n\tef"), vec![0, 4, 8]);
        assert!(token_starts("   ").is_empty());
        assert!(token_starts("").is_empty());
    }

    #[test]
    fn one_entropy_per_token() {
        let oracle = AdaptiveTrigramOracle::fresh();
        let doc = "alpha bravo charlie delta echo";
        let entropies = oracle.entropies("", doc);
        assert_eq!(entropies.len(), 5);
        assert!(entropies.iter().all(|&e| e >= 0.0));
    }

    #[test]
    fn scoring_is_bit_for_bit_reproducible() {
        let oracle = AdaptiveTrigramOracle::fresh();
        let doc = "the payload established persistence through a scheduled task";
        let prefix = "a scheduled task ran the payload\n";
        let a = oracle.entropies(prefix, doc);
        let b = oracle.entropies(prefix, doc);
        assert_eq!(a, b);
    }

    #[test]
    fn familiar_prefix_lowers_late_entropies() {
        let oracle = AdaptiveTrigramOracle::fresh();
        let doc = "zebra quartz fjord zebra quartz fjord zebra quartz fjord";
        let bare = oracle.entropies("", doc);
        let primed = oracle.entropies("zebra quartz fjord zebra quartz fjord\n", doc);
        let bare_sum: f64 = bare.iter().sum();
        let primed_sum: f64 = primed.iter().sum();
        assert!(
            primed_sum < bare_sum,
            "prefix with matching trigrams must reduce total entropy"
        );
    }

    #[test]
    fn retriever_ranks_by_cosine_and_excludes_self() {
        let mut corpus = Vec::new();
        let embeddings = [
            vec![1.0, 0.0],
            vec![0.9, 0.1],
            vec![0.0, 1.0],
            vec![0.7, 0.3],
        ];
        for (i, e) in embeddings.iter().enumerate() {
            let mut r = CorpusRecord::new(
                format!("r{i}"),
                format!("text {i}"),
                SourceCategory::OpenExternal,
            );
            r.embedding = Some(e.clone());
            corpus.push(r);
        }
        let retriever = EmbeddingRetriever::new(&corpus);
        let hits = retriever.retrieve(&corpus[0], 2);
        let ids: Vec<&str> = hits.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, ["r1", "r3"]);
    }

    #[test]
    fn record_without_embedding_retrieves_nothing() {
        let corpus = vec![CorpusRecord::new(
            "r0",
            "text",
            SourceCategory::OpenExternal,
        )];
        let retriever = EmbeddingRetriever::new(&corpus);
        let plain = CorpusRecord::new("q", "query", SourceCategory::OpenExternal);
        assert!(retriever.retrieve(&plain, 3).is_empty());
    }
}
