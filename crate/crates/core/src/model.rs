//! Shared vocabulary: identifiers, transcripts, worker actions and latency records.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(pub String);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TurnId(pub String);

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for TurnId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TurnId {
    fn from(s: &str) -> Self {
        TurnId(s.to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Idle,
    Open,
    Closed,
}

/// A text with its distance to some query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredText<F> {
    pub text: String,
    pub distance: F,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BundleError {
    #[error("{given} alternatives exceed the limit of {limit}")]
    TooManyAlternatives { given: usize, limit: usize },
    #[error("alternative distances must be nondecreasing and within [0, 1]")]
    BadDistances,
    #[error("transcript index {index} out of range ({len} transcripts)")]
    IndexOutOfRange { index: usize, len: usize },
}

/// The transcript the worker sees: the ASR original plus repaired alternatives.
///
/// Index 0 is the original; index `i >= 1` is `alternatives[i - 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptBundle {
    pub original: String,
    pub alternatives: Vec<ScoredText<f64>>,
    pub selected_index: Option<usize>,
}

impl TranscriptBundle {
    pub fn new(
        original: impl Into<String>,
        alternatives: Vec<ScoredText<f64>>,
        limit: usize,
    ) -> Result<Self, BundleError> {
        if alternatives.len() > limit {
            return Err(BundleError::TooManyAlternatives {
                given: alternatives.len(),
                limit,
            });
        }
        let in_range = alternatives
            .iter()
            .all(|a| (0.0..=1.0).contains(&a.distance));
        let sorted = alternatives
            .windows(2)
            .all(|w| w[0].distance <= w[1].distance);
        if !in_range || !sorted {
            return Err(BundleError::BadDistances);
        }
        Ok(Self {
            original: original.into(),
            alternatives,
            selected_index: None,
        })
    }

    pub fn original_only(original: impl Into<String>) -> Self {
        Self {
            original: original.into(),
            alternatives: Vec::new(),
            selected_index: None,
        }
    }

    /// Number of transcripts including the original.
    pub fn len(&self) -> usize {
        1 + self.alternatives.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn transcript(&self, index: usize) -> Option<&str> {
        match index {
            0 => Some(&self.original),
            i => self.alternatives.get(i - 1).map(|a| a.text.as_str()),
        }
    }

    pub fn select(&mut self, index: usize) -> Result<(), BundleError> {
        if index >= self.len() {
            return Err(BundleError::IndexOutOfRange {
                index,
                len: self.len(),
            });
        }
        self.selected_index = Some(index);
        Ok(())
    }

    /// The transcript kept in history: the clicked one, or the original.
    pub fn selected(&self) -> &str {
        self.selected_index
            .and_then(|i| self.transcript(i))
            .unwrap_or(&self.original)
    }
}

/// An automatic reply candidate delivered to the worker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub text: String,
    pub variant_index: usize,
    pub slot: usize,
    pub received_at: Timestamp,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorkerActionKind {
    TypeDraft { text: String },
    /// Sends `text` when given, otherwise the current draft.
    SendDraft {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        text: Option<String>,
    },
    PressDefault { index: usize },
    SelectSuggestion { index: usize },
    SelectTranscript { index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerAction {
    #[serde(flatten)]
    pub kind: WorkerActionKind,
    pub at: Timestamp,
}

impl WorkerAction {
    pub fn new(kind: WorkerActionKind, at: Timestamp) -> Self {
        Self { kind, at }
    }
}

/// How a turn ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    WorkerSent,
    DraftFlushedOnTimeout,
    RandomSuggestionOnTimeout,
    DefaultFallbackOnTimeout,
}

/// Response kind used to bucket latencies.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum ResponseKind {
    Typed,
    DefaultButton,
    Suggested,
    TimeoutRandom,
    TimeoutDraft,
    TimeoutDefault,
}

impl ResponseKind {
    pub const ALL: [ResponseKind; 6] = [
        ResponseKind::Typed,
        ResponseKind::DefaultButton,
        ResponseKind::Suggested,
        ResponseKind::TimeoutRandom,
        ResponseKind::TimeoutDraft,
        ResponseKind::TimeoutDefault,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ResponseKind::Typed => "typed",
            ResponseKind::DefaultButton => "default_button",
            ResponseKind::Suggested => "suggested",
            ResponseKind::TimeoutRandom => "timeout_random",
            ResponseKind::TimeoutDraft => "timeout_draft",
            ResponseKind::TimeoutDefault => "timeout_default",
        }
    }

    pub fn resolution(self) -> Resolution {
        match self {
            ResponseKind::Typed | ResponseKind::DefaultButton | ResponseKind::Suggested => {
                Resolution::WorkerSent
            }
            ResponseKind::TimeoutRandom => Resolution::RandomSuggestionOnTimeout,
            ResponseKind::TimeoutDraft => Resolution::DraftFlushedOnTimeout,
            ResponseKind::TimeoutDefault => Resolution::DefaultFallbackOnTimeout,
        }
    }

    pub fn is_timeout(self) -> bool {
        self.resolution() != Resolution::WorkerSent
    }
}

impl fmt::Display for ResponseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown response kind `{0}`")]
pub struct UnknownKind(pub String);

impl FromStr for ResponseKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ResponseKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| UnknownKind(s.to_owned()))
    }
}

/// Latency of one resolved turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyRecord {
    pub turn_id: TurnId,
    pub latency: Duration,
    pub kind: ResponseKind,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alt(text: &str, distance: f64) -> ScoredText<f64> {
        ScoredText {
            text: text.into(),
            distance,
        }
    }

    #[test]
    fn bundle_rejects_unsorted_or_excess_alternatives() {
        let ok = TranscriptBundle::new("a", vec![alt("b", 0.1), alt("c", 0.2)], 3);
        assert!(ok.is_ok());
        let unsorted = TranscriptBundle::new("a", vec![alt("b", 0.3), alt("c", 0.2)], 3);
        assert_eq!(unsorted.unwrap_err(), BundleError::BadDistances);
        let many = TranscriptBundle::new("a", vec![alt("b", 0.1), alt("c", 0.2)], 1);
        assert!(matches!(many, Err(BundleError::TooManyAlternatives { .. })));
    }

    #[test]
    fn selection_defaults_to_original() {
        let mut b = TranscriptBundle::new("seen", vec![alt("scene", 0.0)], 3).unwrap();
        assert_eq!(b.selected(), "seen");
        b.select(1).unwrap();
        assert_eq!(b.selected(), "scene");
        assert!(b.select(2).is_err());
    }

    #[test]
    fn response_kind_names_round_trip() {
        for kind in ResponseKind::ALL {
            assert_eq!(kind.as_str().parse::<ResponseKind>().unwrap(), kind);
        }
        assert!("bogus".parse::<ResponseKind>().is_err());
    }
}
