use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PhoneticsError;

macro_rules! phonemes {
    ($($name:ident),+ $(,)?) => {
        /// ARPAbet phoneme with stress removed.
        ///
        /// Variants are declared in symbol order, so `Ord` is alphabetical by symbol.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum Phoneme {
            $($name),+
        }

        impl Phoneme {
            pub const ALL: &'static [Phoneme] = &[$(Phoneme::$name),+];

            pub fn symbol(self) -> &'static str {
                match self {
                    $(Phoneme::$name => stringify!($name)),+
                }
            }
        }
    };
}

phonemes!(
    AA, AE, AH, AO, AW, AY, B, CH, D, DH, EH, ER, EY, F, G, HH, IH, IY, JH, K, L, M, N, NG, OW,
    OY, P, R, S, SH, T, TH, UH, UW, V, W, Y, Z, ZH,
);

impl Phoneme {
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Phoneme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Phoneme {
    type Err = PhoneticsError;

    /// Parses a symbol, ignoring case and any trailing stress digits (`AE1` is `AE`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bare = s.trim_end_matches(|c: char| c.is_ascii_digit());
        Phoneme::ALL
            .iter()
            .copied()
            .find(|p| p.symbol().eq_ignore_ascii_case(bare))
            .ok_or_else(|| PhoneticsError::UnknownPhoneme(s.to_owned()))
    }
}

/// Formats a sequence as space-separated symbols.
pub fn format_sequence(seq: &[Phoneme]) -> String {
    let mut out = String::with_capacity(seq.len() * 3);
    for (i, p) in seq.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(p.symbol());
    }
    out
}

pub fn parse_sequence(s: &str) -> Result<Vec<Phoneme>, PhoneticsError> {
    s.split_whitespace().map(str::parse).collect()
}
