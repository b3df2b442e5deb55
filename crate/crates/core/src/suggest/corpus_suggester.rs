use std::fs;
use std::path::Path;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::{SuggestError, SuggestRequest, Suggester};
use crate::num::Real;
use crate::phonetics::{graphemes_to_phonemes, normalized_levenshtein, Lexicon, Phoneme};
use crate::repair::{normalize_text, RepairError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DialoguePair {
    pub prompt: String,
    pub reply: String,
    prompt_phonemes: Vec<Phoneme>,
}

/// Prompt/reply pairs searched by prompt pronunciation.
#[derive(Debug, Clone)]
pub struct DialogueCorpus {
    pairs: Vec<DialoguePair>,
}

impl DialogueCorpus {
    pub fn new<P: AsRef<str>, R: AsRef<str>>(
        pairs: &[(P, R)],
        lex: &Lexicon,
    ) -> Result<Self, RepairError> {
        if pairs.is_empty() {
            return Err(RepairError::EmptyCorpus);
        }
        let pairs = pairs
            .iter()
            .map(|(p, r)| DialoguePair {
                prompt: p.as_ref().to_owned(),
                reply: r.as_ref().to_owned(),
                prompt_phonemes: graphemes_to_phonemes(&normalize_text(p.as_ref()), lex),
            })
            .collect();
        Ok(Self { pairs })
    }

    /// Parses `prompt<TAB>reply` lines. Lines without a tab or with an empty
    /// reply are ignored.
    pub fn parse(text: &str, lex: &Lexicon) -> Result<Self, RepairError> {
        let pairs: Vec<(&str, &str)> = text
            .lines()
            .filter_map(|line| line.split_once('\t'))
            .map(|(p, r)| (p.trim(), r.trim()))
            .filter(|(_, r)| !r.is_empty())
            .collect();
        Self::new(&pairs, lex)
    }

    pub fn load(path: impl AsRef<Path>, lex: &Lexicon) -> Result<Self, RepairError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| RepairError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse(&text, lex)
    }

    pub fn pairs(&self) -> &[DialoguePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pair indices ordered by prompt distance to `utterance`, ties in corpus order.
    pub fn ranked<F: Real>(&self, utterance: &str, lex: &Lexicon) -> Vec<(F, usize)> {
        let query = graphemes_to_phonemes(&normalize_text(utterance), lex);
        let mut scored: Vec<(F, usize)> = self
            .pairs
            .iter()
            .enumerate()
            .map(|(i, p)| (normalized_levenshtein(&query, &p.prompt_phonemes), i))
            .collect();
        scored.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distance"));
        scored
    }
}

/// Reply of the prompt nearest to `utterance` in pronunciation.
pub fn corpus_reply_suggester(utterance: &str, corpus: &DialogueCorpus, lex: &Lexicon) -> String {
    let ranked = corpus.ranked::<f64>(utterance, lex);
    corpus.pairs[ranked[0].1].reply.clone()
}

/// [`Suggester`] over a dialogue corpus.
///
/// Slot `s` of a variant returns the `s`-th distinct reply in prompt-distance
/// order, so one variant's quota yields different replies.
#[derive(Debug)]
pub struct CorpusReplySuggester {
    corpus: Arc<DialogueCorpus>,
    lexicon: Arc<Lexicon>,
    // Every slot of a variant asks about the same utterance; rank it once.
    recent: Mutex<HashMap<String, Arc<Vec<usize>>>>,
}

const RECENT_LIMIT: usize = 256;

impl CorpusReplySuggester {
    pub fn new(corpus: Arc<DialogueCorpus>, lexicon: Arc<Lexicon>) -> Self {
        Self {
            corpus,
            lexicon,
            recent: Mutex::new(HashMap::new()),
        }
    }

    /// Pair indices of distinct replies, nearest prompt first.
    fn distinct_replies(&self, utterance: &str) -> Arc<Vec<usize>> {
        if let Some(hit) = self.recent.lock().expect("cache lock").get(utterance) {
            return hit.clone();
        }
        let mut seen: Vec<&str> = Vec::new();
        let mut order = Vec::new();
        for (_, i) in self.corpus.ranked::<f64>(utterance, &self.lexicon) {
            let reply = self.corpus.pairs[i].reply.as_str();
            if !seen.contains(&reply) {
                seen.push(reply);
                order.push(i);
            }
        }
        let order = Arc::new(order);
        let mut recent = self.recent.lock().expect("cache lock");
        if recent.len() >= RECENT_LIMIT {
            recent.clear();
        }
        recent.insert(utterance.to_owned(), order.clone());
        order
    }
}

impl Suggester for CorpusReplySuggester {
    fn name(&self) -> &str {
        "corpus"
    }

    fn suggest(&self, request: &SuggestRequest) -> Result<String, SuggestError> {
        self.distinct_replies(&request.utterance)
            .get(request.slot.max(1) - 1)
            .map(|&i| self.corpus.pairs[i].reply.clone())
            .ok_or(SuggestError::Empty)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data;
    use crate::model::TurnId;

    fn corpus(lex: &Lexicon) -> DialogueCorpus {
        DialogueCorpus::parse(
            "Do you like pizza?\tI love pizza!\n\
             How many bones are in my hand?\tTwenty seven, I believe.\n\
             Good morning\tMorning! How did you sleep?\n\
             malformed line without tab\n",
            lex,
        )
        .unwrap()
    }

    #[test]
    fn exact_prompt_gets_its_reply() {
        let lex = data::lexicon();
        let c = corpus(&lex);
        assert_eq!(c.len(), 3);
        assert_eq!(
            corpus_reply_suggester("how many bones are in my hand", &c, &lex),
            "Twenty seven, I believe."
        );
    }

    #[test]
    fn empty_utterance_ties_to_first_pair() {
        let lex = data::lexicon();
        let c = corpus(&lex);
        assert_eq!(corpus_reply_suggester("", &c, &lex), "I love pizza!");
    }

    #[test]
    fn slots_walk_distinct_replies() {
        let lex = Arc::new(data::lexicon());
        let c = Arc::new(corpus(&lex));
        let s = CorpusReplySuggester::new(c, lex);
        let ask = |slot| {
            s.suggest(&SuggestRequest {
                utterance: "good morning".into(),
                variant_index: 0,
                slot,
                turn_id: TurnId::from("t"),
            })
        };
        assert_eq!(ask(1).unwrap(), "Morning! How did you sleep?");
        assert_ne!(ask(2).unwrap(), ask(1).unwrap());
        assert!(ask(4).is_err());
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let lex = data::lexicon();
        assert!(DialogueCorpus::parse("no tabs here\n", &lex).is_err());
    }
}
