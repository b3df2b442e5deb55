//! Pronunciation lookup, phoneme similarity and phoneme edit distance.

mod distance;
mod inventory;
mod lexicon;
pub mod numbers;
mod phoneme;

use thiserror::Error;

pub use distance::{levenshtein, normalized_levenshtein};
pub use inventory::{phoneme_similarity, PhonemeInventory};
pub use lexicon::{graphemes_to_phonemes, LetterRules, Lexicon};
pub use phoneme::{format_sequence, parse_sequence, Phoneme};

#[derive(Debug, Error)]
pub enum PhoneticsError {
    #[error("unknown phoneme `{0}`")]
    UnknownPhoneme(String),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("phoneme inventory is empty")]
    EmptyInventory,
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
