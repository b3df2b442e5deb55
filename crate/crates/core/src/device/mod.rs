//! Scripted stand-in for the smart speaker: who says what, what the device
//! actually hears, and how long it takes to read a reply aloud.

mod asr;
mod cutoff;
mod script;

use std::collections::VecDeque;
use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub use asr::{simulate_asr, AsrSimulator};
pub use cutoff::{readout_duration, speak_turn, CutReason, CutoffModel, SpokenTurn};
pub use script::{join_words, Script, ScriptTurn, ScriptWord};

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("script line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("invalid cut-off model: {0}")]
    Config(&'static str),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Feeds script turns through the cut-off model, carrying any unheard words
/// over as the start of the next listening window.
#[derive(Debug, Clone)]
pub struct SpeechQueue {
    turns: VecDeque<ScriptTurn>,
    carry: Vec<ScriptWord>,
    model: CutoffModel,
}

impl SpeechQueue {
    pub fn new(script: &Script, model: CutoffModel) -> Self {
        Self {
            turns: script.turns.iter().cloned().collect(),
            carry: Vec::new(),
            model,
        }
    }

    pub fn is_finished(&self) -> bool {
        self.turns.is_empty() && self.carry.is_empty()
    }

    /// Words the user will say in the next listening window, before cut-offs.
    pub fn peek_words(&self) -> Vec<ScriptWord> {
        let mut words = self.carry.clone();
        if let Some(next) = self.turns.front() {
            words.extend(next.words.iter().cloned());
        }
        words
    }

    /// Opens one listening window. `None` once the script is exhausted.
    pub fn listen(&mut self) -> Option<SpokenTurn> {
        if self.is_finished() {
            return None;
        }
        let words = self.peek_words();
        self.turns.pop_front();
        let spoken = speak_turn(&words, &self.model);
        self.carry = spoken.remainder.clone();
        Some(spoken)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    #[test]
    fn remainder_leads_the_next_window() {
        let script = Script::parse("0.2 what\n0.2 is\n2.0 your\n0.2 name\n\n0.3 please\n").unwrap();
        let mut queue = SpeechQueue::new(&script, CutoffModel::default());
        let first = queue.listen().unwrap();
        assert_eq!(first.utterance(), "what is");
        let second = queue.listen().unwrap();
        assert_eq!(second.utterance(), "your name please");
        assert_eq!(second.spoken[0].pre_pause, Duration::from_secs(2));
        assert!(queue.listen().is_none());
    }

    #[test]
    fn trailing_remainder_becomes_its_own_window() {
        let script = Script::parse("0.2 one\n1.6 two\n").unwrap();
        let mut queue = SpeechQueue::new(&script, CutoffModel::default());
        assert_eq!(queue.listen().unwrap().utterance(), "one");
        assert_eq!(queue.listen().unwrap().utterance(), "two");
        assert!(queue.is_finished());
    }
}
