use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use super::{normalize_text, RepairError};
use crate::model::{ScoredText, TranscriptBundle};
use crate::num::Real;
use crate::phonetics::{graphemes_to_phonemes, normalized_levenshtein, Lexicon, Phoneme};

/// Largest corpus accepted for linear-scan retrieval.
///
/// Each query costs one edit-distance computation per sentence, i.e.
/// O(N * m^2) for N sentences of m phonemes.
pub const MAX_CORPUS_SENTENCES: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub text: String,
    pub phonemes: Vec<Phoneme>,
}

/// Normalized, deduplicated sentences with their pronunciations, in insertion order.
#[derive(Debug, Clone)]
pub struct CorpusIndex {
    entries: Vec<CorpusEntry>,
    source: String,
}

impl CorpusIndex {
    pub fn entries(&self) -> &[CorpusEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

/// Builds an index from raw sentences.
///
/// Sentences that normalize to nothing or have no pronunciation are skipped;
/// later duplicates of a normalized text are dropped.
pub fn build_corpus_index<S: AsRef<str>>(
    sentences: &[S],
    lex: &Lexicon,
    source: impl Into<String>,
) -> Result<CorpusIndex, RepairError> {
    if sentences.is_empty() {
        return Err(RepairError::EmptyCorpus);
    }
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for sentence in sentences {
        let text = normalize_text(sentence.as_ref());
        if text.is_empty() || seen.contains(&text) {
            continue;
        }
        let phonemes = graphemes_to_phonemes(&text, lex);
        if phonemes.is_empty() {
            continue;
        }
        seen.insert(text.clone());
        entries.push(CorpusEntry { text, phonemes });
        if entries.len() > MAX_CORPUS_SENTENCES {
            return Err(RepairError::CorpusTooLarge {
                limit: MAX_CORPUS_SENTENCES,
            });
        }
    }
    if entries.is_empty() {
        return Err(RepairError::EmptyCorpus);
    }
    Ok(CorpusIndex {
        entries,
        source: source.into(),
    })
}

/// Reads a UTF-8 corpus file with one sentence per line.
pub fn load_corpus_file(path: impl AsRef<Path>, lex: &Lexicon) -> Result<CorpusIndex, RepairError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| RepairError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    build_corpus_index(&lines, lex, path.display().to_string())
}

/// The `k` corpus sentences nearest to `phonemes`, ascending by distance.
///
/// Ties keep corpus order. An exact match is not excluded and comes first.
pub fn retrieve_by_phonemes<F: Real>(
    phonemes: &[Phoneme],
    index: &CorpusIndex,
    k: usize,
) -> Vec<ScoredText<F>> {
    if phonemes.is_empty() || k == 0 {
        return Vec::new();
    }
    let mut scored: Vec<(F, usize)> = index
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| (normalized_levenshtein(phonemes, &e.phonemes), i))
        .collect();
    // Stable sort keeps insertion order among equal distances.
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("distances are finite"));
    scored
        .into_iter()
        .take(k)
        .map(|(distance, i)| ScoredText {
            text: index.entries[i].text.clone(),
            distance,
        })
        .collect()
}

/// Normalizes and phonemizes `transcript`, then retrieves its `k` nearest sentences.
pub fn retrieve_alternatives<F: Real>(
    transcript: &str,
    index: &CorpusIndex,
    lex: &Lexicon,
    k: usize,
) -> Vec<ScoredText<F>> {
    let text = normalize_text(transcript);
    if text.is_empty() {
        return Vec::new();
    }
    retrieve_by_phonemes(&graphemes_to_phonemes(&text, lex), index, k)
}

/// Anything that proposes ranked repaired transcripts for an utterance.
///
/// The built-in implementation is [`RetrievalRepair`]; a trained
/// phoneme-to-text model can be registered in its place.
pub trait RepairModel: Send + Sync {
    fn name(&self) -> &str;

    /// Up to `k` candidates sorted ascending by distance.
    fn candidates(&self, transcript: &str, k: usize) -> Vec<ScoredText<f64>>;
}

/// Corpus retrieval by phoneme edit distance.
#[derive(Debug, Clone)]
pub struct RetrievalRepair {
    index: Arc<CorpusIndex>,
    lexicon: Arc<Lexicon>,
}

impl RetrievalRepair {
    pub fn new(index: Arc<CorpusIndex>, lexicon: Arc<Lexicon>) -> Self {
        Self { index, lexicon }
    }

    pub fn index(&self) -> &CorpusIndex {
        &self.index
    }
}

impl RepairModel for RetrievalRepair {
    fn name(&self) -> &str {
        "retrieval"
    }

    fn candidates(&self, transcript: &str, k: usize) -> Vec<ScoredText<f64>> {
        retrieve_alternatives(transcript, &self.index, &self.lexicon, k)
    }
}

/// Assembles the bundle shown to the worker.
///
/// Candidates identical to the normalized original are dropped, since they
/// would show the worker the same sentence twice.
pub fn build_bundle(
    original: &str,
    model: &dyn RepairModel,
    alternatives_count: usize,
) -> TranscriptBundle {
    if alternatives_count == 0 {
        return TranscriptBundle::original_only(original);
    }
    let own = normalize_text(original);
    let alternatives: Vec<_> = model
        .candidates(original, alternatives_count + 1)
        .into_iter()
        .filter(|c| c.text != own)
        .take(alternatives_count)
        .collect();
    TranscriptBundle::new(original, alternatives, alternatives_count)
        .expect("retrieval output is sorted and bounded")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data;

    fn small_index(lex: &Lexicon) -> CorpusIndex {
        build_corpus_index(
            &[
                "What's your favorite scene in the movie?",
                "What's your favorite news?",
                "Have you ever served on a jury before?",
                "Good morning",
            ],
            lex,
            "test",
        )
        .unwrap()
    }

    #[test]
    fn dedup_after_normalization() {
        let lex = data::lexicon();
        let index = build_corpus_index(&["Hello.", "hello"], &lex, "t").unwrap();
        assert_eq!(index.len(), 1);
        assert_eq!(index.entries()[0].text, "hello");
    }

    #[test]
    fn every_entry_has_phonemes() {
        let lex = data::lexicon();
        let index = build_corpus_index(&["Hi there", "Good morning"], &lex, "t").unwrap();
        assert_eq!(index.len(), 2);
        assert!(index.entries().iter().all(|e| !e.phonemes.is_empty()));
    }

    #[test]
    fn empty_input_is_an_error() {
        let lex = data::lexicon();
        let none: [&str; 0] = [];
        assert!(matches!(
            build_corpus_index(&none, &lex, "t"),
            Err(RepairError::EmptyCorpus)
        ));
        assert!(matches!(
            build_corpus_index(&["?!"], &lex, "t"),
            Err(RepairError::EmptyCorpus)
        ));
    }

    #[test]
    fn bundled_corpus_is_within_bounds() {
        let lex = data::lexicon();
        let sentences = data::corpus_sentences();
        let index = build_corpus_index(&sentences, &lex, "bundled").unwrap();
        assert!(index.len() <= sentences.len());
        assert!(index.len() >= 1000);
    }

    #[test]
    fn self_retrieval_has_zero_distance() {
        let lex = data::lexicon();
        let index = small_index(&lex);
        let hits: Vec<ScoredText<f64>> =
            retrieve_alternatives("good morning", &index, &lex, 1);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].text, "good morning");
        assert_eq!(hits[0].distance, 0.0);
    }

    #[test]
    fn homophone_error_is_repaired() {
        let lex = data::lexicon();
        let index = small_index(&lex);
        let hits: Vec<ScoredText<f64>> =
            retrieve_alternatives("What's your favorite seen in the movie.", &index, &lex, 3);
        assert_eq!(hits[0].text, "whats your favorite scene in the movie");
        assert_eq!(hits[0].distance, 0.0);
        assert!(hits.windows(2).all(|w| w[0].distance <= w[1].distance));
    }

    #[test]
    fn k_is_clamped_to_corpus_size() {
        let lex = data::lexicon();
        let index = small_index(&lex);
        let hits: Vec<ScoredText<f64>> =
            retrieve_alternatives("hello", &index, &lex, index.len() + 5);
        assert_eq!(hits.len(), index.len());
    }

    #[test]
    fn empty_transcript_gives_nothing() {
        let lex = data::lexicon();
        let index = small_index(&lex);
        assert!(retrieve_alternatives::<f64>("", &index, &lex, 3).is_empty());
        assert!(retrieve_alternatives::<f64>(" ... ", &index, &lex, 3).is_empty());
    }

    #[test]
    fn ties_keep_corpus_order() {
        let lex = data::lexicon();
        let index = build_corpus_index(&["scene", "seen", "cat"], &lex, "t").unwrap();
        let hits: Vec<ScoredText<f32>> = retrieve_alternatives("seen", &index, &lex, 2);
        assert_eq!(hits[0].text, "scene");
        assert_eq!(hits[1].text, "seen");
    }

    #[test]
    fn bundle_excludes_the_original_itself() {
        let lex = Arc::new(data::lexicon());
        let index = Arc::new(small_index(&lex));
        let model = RetrievalRepair::new(index, lex);
        let bundle = build_bundle("Good morning!", &model, 3);
        assert_eq!(bundle.original, "Good morning!");
        assert_eq!(bundle.alternatives.len(), 3);
        assert!(bundle.alternatives.iter().all(|a| a.text != "good morning"));
        assert!(build_bundle("Good morning", &model, 0).alternatives.is_empty());
    }
}
