//! Core of a human-in-the-loop voice relay.
//!
//! A smart-speaker front end transcribes what the user says and hands the text
//! to a remote human operator who must answer within a fixed budget. This crate
//! holds everything that does not touch the network:
//!
//! - [`phonetics`]: grapheme-to-phoneme lookup, phoneme similarity and
//!   normalized edit distance.
//! - [`repair`]: text normalization, retrieval of acoustically similar corpus
//!   sentences, and the phoneme augmentation pipeline for training data.
//! - [`suggest`]: request planning and pacing for automatic reply suggestions.
//! - [`engine`]: the per-turn deadline state machine and timeout fallbacks.
//! - [`metrics`]: latency records and summaries.
//! - [`device`]: scripted speaker simulation (cut-offs and ASR noise).
//!
//! Distances, similarities and summary statistics are generic over the float
//! type through [`Real`]; the aliases below fix the `f64` instantiation used by
//! the rest of the system.

pub mod config;
pub mod data;
pub mod device;
pub mod engine;
pub mod metrics;
pub mod model;
pub mod num;
pub mod phonetics;
pub mod repair;
pub mod seed;
pub mod suggest;
pub mod time;

pub use config::DeadlineConfig;
pub use model::{
    LatencyRecord, Resolution, ResponseKind, ScoredText, SessionId, SessionState, Suggestion,
    TranscriptBundle, TurnId, WorkerAction, WorkerActionKind,
};
pub use num::Real;
pub use time::{Clock, SystemClock, Timestamp, VirtualClock};

/// Phoneme inventory with `f64` feature vectors.
pub type Inventory = phonetics::PhonemeInventory<f64>;
/// Latency summary in `f64` seconds.
pub type Summary = metrics::LatencySummary<f64>;
/// Repair recovery report in `f64`.
pub type Recovery = repair::RecoveryReport<f64>;
/// A repaired alternative transcript with an `f64` distance.
pub type Alternative = ScoredText<f64>;
