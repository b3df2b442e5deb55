use std::collections::HashMap;
use std::sync::Mutex;

use rand::Rng;

use crate::phonetics::{normalized_levenshtein, Lexicon, Phoneme};
use crate::repair::NoiseParams;
use crate::seed;

/// Word-level recognition noise: words are dropped, or swapped for the
/// lexicon word that sounds most alike.
#[derive(Debug)]
pub struct AsrSimulator {
    noise: NoiseParams,
    vocabulary: Vec<(String, Vec<Phoneme>)>,
    neighbours: Mutex<HashMap<String, Option<String>>>,
}

impl AsrSimulator {
    pub fn new(noise: NoiseParams, lex: &Lexicon) -> Self {
        Self {
            noise,
            vocabulary: lex
                .words()
                .map(|(w, p)| (w.to_owned(), p.to_vec()))
                .collect(),
            neighbours: Mutex::new(HashMap::new()),
        }
    }

    pub fn noise(&self) -> NoiseParams {
        self.noise
    }

    /// Nearest other lexicon word by phoneme distance; ties go to the
    /// alphabetically first word.
    pub fn nearest_word(&self, word: &str, lex: &Lexicon) -> Option<String> {
        let key = word.to_lowercase();
        let mut cache = self.neighbours.lock().unwrap_or_else(|e| e.into_inner());
        cache
            .entry(key.clone())
            .or_insert_with(|| nearest_in(&self.vocabulary, &key, &lex.word_phonemes(&key)))
            .clone()
    }

    /// Transcribes `utterance` with a generator seeded by `(noise.rng_seed, stream)`.
    pub fn transcribe(&self, utterance: &str, lex: &Lexicon, stream: &[u64]) -> String {
        let mut rng = seed::rng_for(self.noise.rng_seed, stream);
        self.transcribe_with(utterance, lex, &mut rng)
    }

    /// Two draws per word, deletion first, mirroring phoneme augmentation.
    pub fn transcribe_with<R: Rng + ?Sized>(&self, utterance: &str, lex: &Lexicon, rng: &mut R) -> String {
        let mut out = Vec::new();
        for word in utterance.split_whitespace() {
            let word = word.to_lowercase();
            let delete_draw: f64 = rng.gen();
            let substitute_draw: f64 = rng.gen();
            if delete_draw < self.noise.p_delete {
                continue;
            }
            if substitute_draw < self.noise.p_substitute {
                out.push(self.nearest_word(&word, lex).unwrap_or(word));
            } else {
                out.push(word);
            }
        }
        out.join(" ")
    }
}

fn nearest_in(vocabulary: &[(String, Vec<Phoneme>)], word: &str, phonemes: &[Phoneme]) -> Option<String> {
    let mut best: Option<(f64, &str)> = None;
    for (candidate, pron) in vocabulary {
        if candidate == word {
            continue;
        }
        let d: f64 = normalized_levenshtein::<f64, _>(phonemes, pron);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, candidate));
        }
    }
    best.map(|(_, w)| w.to_owned())
}

/// One-shot transcription seeded from `noise.rng_seed`.
pub fn simulate_asr(utterance: &str, noise: NoiseParams, lex: &Lexicon) -> String {
    AsrSimulator::new(noise, lex).transcribe(utterance, lex, &[])
}
