use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{Phoneme, PhoneticsError};
use crate::num::Real;

/// Phoneme alphabet with a feature vector per phoneme.
///
/// The bundled table holds binary articulatory features (voicing, place,
/// manner, height, backness, rounding). Any file in the same format works,
/// including trained phoneme embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct PhonemeInventory<F> {
    features: BTreeMap<Phoneme, Vec<F>>,
    dim: usize,
}

impl<F: Real> PhonemeInventory<F> {
    /// Parses `PHONEME f1 f2 ... fk` lines. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, PhoneticsError> {
        let mut features = BTreeMap::new();
        let mut dim = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let malformed = |reason: String| PhoneticsError::Malformed {
                line: n + 1,
                reason,
            };
            let mut fields = line.split_whitespace();
            let symbol = fields.next().unwrap_or_default();
            let phoneme: Phoneme = symbol.parse()?;
            let row = fields
                .map(|f| {
                    f.parse::<f64>()
                        .map(F::from_f64_lossy)
                        .map_err(|_| malformed(format!("bad feature value `{f}`")))
                })
                .collect::<Result<Vec<F>, _>>()?;
            if row.is_empty() {
                return Err(malformed(format!("no features for {symbol}")));
            }
            match dim {
                None => dim = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(malformed(format!(
                        "{symbol} has {} features, expected {d}",
                        row.len()
                    )))
                }
                Some(_) => {}
            }
            if features.insert(phoneme, row).is_some() {
                return Err(malformed(format!("duplicate phoneme {symbol}")));
            }
        }
        match dim {
            Some(dim) => Ok(Self { features, dim }),
            None => Err(PhoneticsError::EmptyInventory),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PhoneticsError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| PhoneticsError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn contains(&self, p: Phoneme) -> bool {
        self.features.contains_key(&p)
    }

    pub fn phonemes(&self) -> impl Iterator<Item = Phoneme> + '_ {
        self.features.keys().copied()
    }

    pub fn features(&self, p: Phoneme) -> Option<&[F]> {
        self.features.get(&p).map(Vec::as_slice)
    }

    /// Cosine similarity of the two feature vectors, clamped to `[0, 1]`.
    pub fn similarity(&self, p: Phoneme, q: Phoneme) -> Result<F, PhoneticsError> {
        let a = self
            .features(p)
            .ok_or_else(|| PhoneticsError::UnknownPhoneme(p.symbol().to_owned()))?;
        let b = self
            .features(q)
            .ok_or_else(|| PhoneticsError::UnknownPhoneme(q.symbol().to_owned()))?;
        if p == q {
            return Ok(F::one());
        }
        let dot = a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y);
        let norm = |v: &[F]| v.iter().fold(F::zero(), |acc, &x| acc + x * x).sqrt();
        let denom = norm(a) * norm(b);
        if denom == F::zero() {
            return Ok(F::zero());
        }
        Ok((dot / denom).max(F::zero()).min(F::one()))
    }

    /// The most similar other phoneme; ties go to the earlier symbol.
    pub fn most_similar(&self, p: Phoneme) -> Option<Phoneme> {
        let mut best: Option<(Phoneme, F)> = None;
        for q in self.phonemes().filter(|&q| q != p) {
            let s = self.similarity(p, q).ok()?;
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((q, s));
            }
        }
        best.map(|(q, _)| q)
    }

    /// `most_similar` for every phoneme in the inventory.
    pub fn substitution_table(&self) -> BTreeMap<Phoneme, Phoneme> {
        self.phonemes()
            .filter_map(|p| self.most_similar(p).map(|q| (p, q)))
            .collect()
    }
}

pub fn phoneme_similarity<F: Real>(
    p: Phoneme,
    q: Phoneme,
    inv: &PhonemeInventory<F>,
) -> Result<F, PhoneticsError> {
    inv.similarity(p, q)
}
