use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::RepairError;
use crate::num::Real;
use crate::phonetics::{Phoneme, PhonemeInventory};
use crate::seed;

/// Phoneme noise used for augmentation and repair evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub p_delete: f64,
    pub p_substitute: f64,
    pub rng_seed: u64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            p_delete: 0.1,
            p_substitute: 0.1,
            rng_seed: 0,
        }
    }
}

impl NoiseParams {
    pub fn new(p_delete: f64, p_substitute: f64, rng_seed: u64) -> Result<Self, RepairError> {
        Self {
            p_delete,
            p_substitute,
            rng_seed,
        }
        .validate()
    }

    pub fn silent(rng_seed: u64) -> Self {
        Self {
            p_delete: 0.0,
            p_substitute: 0.0,
            rng_seed,
        }
    }

    pub fn validate(self) -> Result<Self, RepairError> {
        for (name, p) in [("p_delete", self.p_delete), ("p_substitute", self.p_substitute)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(RepairError::BadProbability { name, value: p });
            }
        }
        Ok(self)
    }
}

/// Deletes or swaps phonemes for their most similar neighbour.
#[derive(Debug, Clone)]
pub struct Augmenter {
    params: NoiseParams,
    substitutes: BTreeMap<Phoneme, Phoneme>,
}

impl Augmenter {
    pub fn new<F: Real>(params: NoiseParams, inv: &PhonemeInventory<F>) -> Self {
        Self {
            params,
            substitutes: inv.substitution_table(),
        }
    }

    pub fn params(&self) -> NoiseParams {
        self.params
    }

    /// Two uniform draws per position: the first decides deletion, the second
    /// substitution of a kept phoneme. Both are always drawn so the random
    /// stream advances identically whatever the outcome.
    pub fn augment<R: Rng + ?Sized>(&self, seq: &[Phoneme], rng: &mut R) -> Vec<Phoneme> {
        let mut out = Vec::with_capacity(seq.len());
        for &p in seq {
            let delete_draw: f64 = rng.gen();
            let substitute_draw: f64 = rng.gen();
            if delete_draw < self.params.p_delete {
                continue;
            }
            if substitute_draw < self.params.p_substitute {
                out.push(self.substitutes.get(&p).copied().unwrap_or(p));
            } else {
                out.push(p);
            }
        }
        out
    }
}

/// Augments `seq` once with a generator seeded from `params.rng_seed`.
pub fn augment_phonemes<F: Real>(
    seq: &[Phoneme],
    params: NoiseParams,
    inv: &PhonemeInventory<F>,
) -> Vec<Phoneme> {
    let mut rng = seed::rng_for(params.rng_seed, &[]);
    Augmenter::new(params, inv).augment(seq, &mut rng)
}
