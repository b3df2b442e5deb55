use std::time::Duration;

use super::script::{join_words, ScriptWord};
use super::DeviceError;

/// When the speaker stops listening.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutoffModel {
    /// A silence longer than this between two words ends the utterance.
    pub max_pause: Duration,
    pub listening_window: Duration,
    /// Hearing nothing at all closes the skill.
    pub no_speech_close: bool,
}

impl Default for CutoffModel {
    fn default() -> Self {
        Self {
            max_pause: Duration::from_millis(1500),
            listening_window: Duration::from_secs(10),
            no_speech_close: true,
        }
    }
}

impl CutoffModel {
    pub fn new(
        max_pause: Duration,
        listening_window: Duration,
        no_speech_close: bool,
    ) -> Result<Self, DeviceError> {
        if max_pause >= listening_window {
            return Err(DeviceError::Config("max_pause must be < listening_window"));
        }
        Ok(Self {
            max_pause,
            listening_window,
            no_speech_close,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutReason {
    /// Every word was heard.
    Complete,
    /// A long pause ended listening early.
    Pause,
    /// The listening window ran out.
    Window,
    /// Nothing was heard within the window.
    Silence,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpokenTurn {
    pub spoken: Vec<ScriptWord>,
    /// Words left for the next listening window.
    pub remainder: Vec<ScriptWord>,
    pub reason: CutReason,
    /// Time from the start of listening until the device sends the utterance.
    pub sent_after: Duration,
    /// True when silence should close the skill.
    pub closes_skill: bool,
}

impl SpokenTurn {
    pub fn utterance(&self) -> String {
        join_words(&self.spoken)
    }
}

/// Plays `words` against the listening rules.
///
/// Word `i` is heard at the running sum of pauses up to and including its
/// own. The first word is bounded only by the window, since the user may take
/// a moment to start. Each later word is cut when its pause exceeds
/// `max_pause` or when it would land after the window closes. The device
/// sends the utterance once it has heard `max_pause` of silence after the last
/// word, or when the window closes, whichever is first.
pub fn speak_turn(words: &[ScriptWord], model: &CutoffModel) -> SpokenTurn {
    let mut elapsed = Duration::ZERO;
    let mut heard = 0;
    let mut reason = CutReason::Complete;
    for (i, w) in words.iter().enumerate() {
        let at = elapsed + w.pre_pause;
        if i > 0 && w.pre_pause > model.max_pause {
            reason = CutReason::Pause;
            break;
        }
        if at > model.listening_window {
            reason = if i == 0 {
                CutReason::Silence
            } else {
                CutReason::Window
            };
            break;
        }
        elapsed = at;
        heard = i + 1;
    }
    if words.is_empty() {
        reason = CutReason::Silence;
    }
    let sent_after = match reason {
        CutReason::Silence | CutReason::Window => model.listening_window,
        CutReason::Complete | CutReason::Pause => {
            (elapsed + model.max_pause).min(model.listening_window)
        }
    };
    SpokenTurn {
        spoken: words[..heard].to_vec(),
        remainder: words[heard..].to_vec(),
        reason,
        sent_after,
        closes_skill: reason == CutReason::Silence && model.no_speech_close,
    }
}

/// Time the speaker spends reading a response aloud.
pub fn readout_duration(text: &str) -> Duration {
    Duration::from_millis(60 * text.chars().count() as u64)
}
