//! Data files compiled into the crate.
//!
//! The lexicon is a subset of the CMU Pronouncing Dictionary covering the
//! bundled corpora plus near-homophones of their words.

use crate::num::Real;
use crate::phonetics::{LetterRules, Lexicon, PhonemeInventory};

pub const LEXICON: &str = include_str!("../data/lexicon.dict");
pub const FEATURES: &str = include_str!("../data/features.txt");
pub const LETTER_RULES: &str = include_str!("../data/letters.txt");
/// One sentence per line.
pub const CORPUS: &str = include_str!("../data/corpus.txt");
/// `prompt<TAB>reply` per line.
pub const DIALOGUE_PAIRS: &str = include_str!("../data/pairs.tsv");

pub fn letter_rules() -> LetterRules {
    LetterRules::parse(LETTER_RULES).expect("bundled letter rules parse")
}

pub fn lexicon() -> Lexicon {
    Lexicon::parse(LEXICON, letter_rules()).expect("bundled lexicon parses")
}

pub fn inventory<F: Real>() -> PhonemeInventory<F> {
    PhonemeInventory::parse(FEATURES).expect("bundled feature table parses")
}

pub fn corpus_sentences() -> Vec<&'static str> {
    CORPUS.lines().filter(|l| !l.trim().is_empty()).collect()
}
