//! Transcript repair: normalization, retrieval of acoustically similar
//! sentences, and the noisy phoneme pipeline that produces training data.

mod augment;
mod corpus;
mod eval;
mod normalize;
mod training;

use thiserror::Error;

pub use augment::{augment_phonemes, Augmenter, NoiseParams};
pub use corpus::{
    build_bundle, build_corpus_index, load_corpus_file, retrieve_alternatives,
    retrieve_by_phonemes, CorpusEntry, CorpusIndex, RepairModel, RetrievalRepair,
    MAX_CORPUS_SENTENCES,
};
pub use eval::{evaluate_repair, sample_indices, RecoveryReport};
pub use normalize::normalize_text;
pub use training::{generate_training_pairs, training_pairs, write_training_pairs, TrainingPair};

#[derive(Debug, Error)]
pub enum RepairError {
    #[error("corpus has no usable sentences")]
    EmptyCorpus,
    #[error("corpus exceeds {limit} sentences")]
    CorpusTooLarge { limit: usize },
    #[error("{name} = {value} is not a probability")]
    BadProbability { name: &'static str, value: f64 },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
