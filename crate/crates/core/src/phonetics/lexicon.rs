use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{numbers, Phoneme, PhonemeInventory, PhoneticsError};
use crate::num::Real;

/// Grapheme-to-phoneme fallback for words missing from the lexicon.
///
/// Rules map a letter group to phonemes. The longest matching group wins and a
/// doubled letter is read once, so the output depends only on the spelling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LetterRules {
    rules: BTreeMap<String, Vec<Phoneme>>,
    longest: usize,
}

impl LetterRules {
    /// Parses `letters  PH1 PH2 ...` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, PhoneticsError> {
        let mut rules = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let letters = fields.next().unwrap_or_default().to_lowercase();
            let phonemes = fields.map(str::parse).collect::<Result<Vec<Phoneme>, _>>()?;
            if phonemes.is_empty() {
                return Err(PhoneticsError::Malformed {
                    line: n + 1,
                    reason: format!("rule `{letters}` has no phonemes"),
                });
            }
            rules.insert(letters, phonemes);
        }
        let longest = rules.keys().map(|k| k.chars().count()).max().unwrap_or(0);
        Ok(Self { rules, longest })
    }

    pub fn apply(&self, word: &str) -> Vec<Phoneme> {
        let mut letters: Vec<char> = word.chars().collect();
        letters.dedup();
        let mut out = Vec::new();
        let mut i = 0;
        while i < letters.len() {
            let mut matched = false;
            for len in (1..=self.longest.min(letters.len() - i)).rev() {
                let group: String = letters[i..i + len].iter().collect();
                if let Some(phonemes) = self.rules.get(&group) {
                    out.extend_from_slice(phonemes);
                    i += len;
                    matched = true;
                    break;
                }
            }
            if !matched {
                // Letters without a rule (digits handled elsewhere, non-Latin script) are silent.
                i += 1;
            }
        }
        out
    }
}

/// Pronunciation dictionary keyed by normalized word.
///
/// Keys are lowercased with apostrophes removed so they match normalized text
/// (`DON'T` is stored as `dont`). The first pronunciation is the primary one.
#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<Vec<Phoneme>>>,
    rules: LetterRules,
}

impl Lexicon {
    /// Parses CMUdict text: `WORD  PH1 PH2 ...`, `;;;` comments, `WORD(2)` variants.
    ///
    /// Stress digits are dropped. Entries whose spelling cannot survive text
    /// normalization (`A.D.`, `'S`) are skipped.
    pub fn parse(text: &str, rules: LetterRules) -> Result<Self, PhoneticsError> {
        let mut entries: BTreeMap<String, Vec<Vec<Phoneme>>> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            if raw.starts_with(";;;") {
                continue;
            }
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let head = fields.next().unwrap_or_default();
            let word = strip_variant(head).to_lowercase().replace('\'', "");
            let phonemes = fields
                .map(str::parse)
                .collect::<Result<Vec<Phoneme>, _>>()
                .map_err(|e| PhoneticsError::Malformed {
                    line: n + 1,
                    reason: e.to_string(),
                })?;
            if phonemes.is_empty() {
                return Err(PhoneticsError::Malformed {
                    line: n + 1,
                    reason: format!("`{head}` has no pronunciation"),
                });
            }
            if word.is_empty() || !word.chars().all(char::is_alphanumeric) {
                continue;
            }
            let prons = entries.entry(word).or_default();
            if !prons.contains(&phonemes) {
                prons.push(phonemes);
            }
        }
        Ok(Self { entries, rules })
    }

    pub fn load(path: impl AsRef<Path>, rules: LetterRules) -> Result<Self, PhoneticsError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| PhoneticsError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse(&text, rules)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn pronunciations(&self, word: &str) -> Option<&[Vec<Phoneme>]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn primary(&self, word: &str) -> Option<&[Phoneme]> {
        self.entries
            .get(word)
            .and_then(|p| p.first())
            .map(Vec::as_slice)
    }

    /// Words with their primary pronunciation, in alphabetical order.
    pub fn words(&self) -> impl Iterator<Item = (&str, &[Phoneme])> {
        self.entries
            .iter()
            .filter_map(|(w, p)| p.first().map(|first| (w.as_str(), first.as_slice())))
    }

    pub fn letter_rules(&self) -> &LetterRules {
        &self.rules
    }

    /// Checks that every phoneme used by the lexicon has a feature vector.
    pub fn check_inventory<F: Real>(&self, inv: &PhonemeInventory<F>) -> Result<(), PhoneticsError> {
        for prons in self.entries.values() {
            for p in prons.iter().flatten() {
                if !inv.contains(*p) {
                    return Err(PhoneticsError::UnknownPhoneme(p.symbol().to_owned()));
                }
            }
        }
        Ok(())
    }

    /// Pronunciation of a single normalized token.
    pub fn word_phonemes(&self, token: &str) -> Vec<Phoneme> {
        if let Some(p) = self.primary(token) {
            return p.to_vec();
        }
        let mut out = Vec::new();
        for run in split_runs(token) {
            if let Some(p) = self.primary(run) {
                out.extend_from_slice(p);
            } else if run.starts_with(|c: char| c.is_ascii_digit()) {
                for word in numbers::spell_digits(run) {
                    out.extend(self.word_phonemes(word));
                }
            } else {
                out.extend(self.rules.apply(run));
            }
        }
        out
    }
}

/// Converts normalized text to the concatenation of per-word primary pronunciations.
pub fn graphemes_to_phonemes(text: &str, lex: &Lexicon) -> Vec<Phoneme> {
    text.split_whitespace()
        .flat_map(|token| lex.word_phonemes(token))
        .collect()
}

fn strip_variant(head: &str) -> &str {
    match head.find('(') {
        Some(i) if head.ends_with(')') => &head[..i],
        _ => head,
    }
}

/// Splits a token into maximal runs of ASCII digits and of other characters.
fn split_runs(token: &str) -> Vec<&str> {
    let mut runs = Vec::new();
    let mut start = 0;
    let mut prev: Option<bool> = None;
    for (i, c) in token.char_indices() {
        let digit = c.is_ascii_digit();
        if prev.is_some_and(|p| p != digit) {
            runs.push(&token[start..i]);
            start = i;
        }
        prev = Some(digit);
    }
    if start < token.len() {
        runs.push(&token[start..]);
    }
    runs
}
