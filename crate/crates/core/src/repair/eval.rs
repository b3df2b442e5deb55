use serde::Serialize;

use super::{retrieve_by_phonemes, Augmenter, CorpusIndex, NoiseParams};
use crate::num::Real;
use crate::phonetics::PhonemeInventory;
use crate::seed;

/// Exact-text recovery of corrupted corpus sentences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecoveryReport<F> {
    pub sample: usize,
    pub top1_rate: F,
    pub topk_rate: F,
    /// Mean distance between each corrupted query and its rank-1 hit.
    pub mean_distance: F,
}

/// Indices probed by [`evaluate_repair`]: `sample` evenly spaced corpus positions.
pub fn sample_indices(corpus_len: usize, sample: usize) -> Vec<usize> {
    let sample = sample.min(corpus_len);
    (0..sample).map(|i| i * corpus_len / sample).collect()
}

/// Corrupts `sample` sentences with phoneme noise and checks whether retrieval
/// returns the original text at rank 1 and within the top `k`.
///
/// Sample `j` uses a generator seeded with `(rng_seed, j)`. `sample` is
/// clamped to the corpus size.
pub fn evaluate_repair<F: Real>(
    index: &CorpusIndex,
    inv: &PhonemeInventory<F>,
    params: NoiseParams,
    k: usize,
    sample: usize,
) -> RecoveryReport<F> {
    let augmenter = Augmenter::new(params, inv);
    let picks = sample_indices(index.len(), sample);
    let mut top1 = 0usize;
    let mut topk = 0usize;
    let mut distance_sum = F::zero();
    for (j, &i) in picks.iter().enumerate() {
        let entry = &index.entries()[i];
        let mut rng = seed::rng_for(params.rng_seed, &[j as u64]);
        let noisy = augmenter.augment(&entry.phonemes, &mut rng);
        let hits = retrieve_by_phonemes::<F>(&noisy, index, k.max(1));
        if hits.first().is_some_and(|h| h.text == entry.text) {
            top1 += 1;
        }
        if hits.iter().take(k).any(|h| h.text == entry.text) {
            topk += 1;
        }
        // An empty query retrieves nothing; count it as maximally distant.
        distance_sum = distance_sum + hits.first().map_or(F::one(), |h| h.distance);
    }
    let n = picks.len();
    let rate = |hits: usize| {
        if n == 0 {
            F::zero()
        } else {
            F::from_count(hits) / F::from_count(n)
        }
    };
    RecoveryReport {
        sample: n,
        top1_rate: rate(top1),
        topk_rate: rate(topk),
        mean_distance: if n == 0 {
            F::zero()
        } else {
            distance_sum / F::from_count(n)
        },
    }
}
