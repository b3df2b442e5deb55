use std::io::{self, Write};

use super::{Augmenter, CorpusIndex, NoiseParams};
use crate::num::Real;
use crate::phonetics::{format_sequence, Phoneme, PhonemeInventory};
use crate::seed;

/// One phoneme-to-text training instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPair {
    pub noisy: Vec<Phoneme>,
    pub clean: String,
}

impl TrainingPair {
    /// `PH1 PH2 ...<TAB>clean text`
    pub fn to_line(&self) -> String {
        format!("{}\t{}", format_sequence(&self.noisy), self.clean)
    }
}

/// Lazily yields `(times + 1) * N` pairs: per sentence the clean pronunciation
/// followed by `times` augmented copies.
///
/// Copy `r` of sentence `i` draws from a generator seeded with
/// `(rng_seed, i, r)`, so any slice of the stream can be regenerated alone.
pub fn training_pairs<'a, F: Real>(
    index: &'a CorpusIndex,
    times: usize,
    params: NoiseParams,
    inv: &PhonemeInventory<F>,
) -> impl Iterator<Item = TrainingPair> + 'a {
    let augmenter = Augmenter::new(params, inv);
    index
        .entries()
        .iter()
        .enumerate()
        .flat_map(move |(i, entry)| {
            let augmenter = augmenter.clone();
            (0..=times).map(move |round| {
                let noisy = if round == 0 {
                    entry.phonemes.clone()
                } else {
                    let mut rng = seed::rng_for(params.rng_seed, &[i as u64, round as u64]);
                    augmenter.augment(&entry.phonemes, &mut rng)
                };
                TrainingPair {
                    noisy,
                    clean: entry.text.clone(),
                }
            })
        })
}

pub fn generate_training_pairs<F: Real>(
    index: &CorpusIndex,
    times: usize,
    params: NoiseParams,
    inv: &PhonemeInventory<F>,
) -> Vec<TrainingPair> {
    training_pairs(index, times, params, inv).collect()
}

/// Streams pairs as tab-separated lines. Returns the number written.
pub fn write_training_pairs<F: Real, W: Write + ?Sized>(
    out: &mut W,
    index: &CorpusIndex,
    times: usize,
    params: NoiseParams,
    inv: &PhonemeInventory<F>,
) -> io::Result<usize> {
    let mut count = 0;
    for pair in training_pairs(index, times, params, inv) {
        writeln!(out, "{}", pair.to_line())?;
        count += 1;
    }
    Ok(count)
}
