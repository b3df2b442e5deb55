use std::path::Path;
use std::time::Duration;

use super::DeviceError;

/// A word and the silence before it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptWord {
    pub word: String,
    pub pre_pause: Duration,
}

impl ScriptWord {
    pub fn new(word: impl Into<String>, pre_pause: Duration) -> Self {
        Self {
            word: word.into(),
            pre_pause,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScriptTurn {
    pub words: Vec<ScriptWord>,
}

impl ScriptTurn {
    pub fn text(&self) -> String {
        join_words(&self.words)
    }
}

pub fn join_words(words: &[ScriptWord]) -> String {
    words
        .iter()
        .map(|w| w.word.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

/// What a scripted user says, turn by turn.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Script {
    pub persona: Option<String>,
    pub turns: Vec<ScriptTurn>,
}

impl Script {
    /// Lines are `pre_pause_seconds word`; a blank line ends a turn and `#`
    /// starts a comment. `# persona: name` labels the script.
    pub fn parse(text: &str) -> Result<Self, DeviceError> {
        let mut script = Script::default();
        let mut current = ScriptTurn::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let trimmed = raw.trim();
            if let Some(comment) = trimmed.strip_prefix('#') {
                if let Some(name) = comment.trim().strip_prefix("persona:") {
                    script.persona = Some(name.trim().to_owned());
                }
                continue;
            }
            let content = trimmed.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                if trimmed.is_empty() && !current.words.is_empty() {
                    script.turns.push(std::mem::take(&mut current));
                }
                continue;
            }
            let malformed = |reason: &str| DeviceError::Malformed {
                line: line_no,
                reason: reason.to_owned(),
            };
            let mut parts = content.split_whitespace();
            let (Some(pause), Some(word), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(malformed("expected `pre_pause_seconds word`"));
            };
            let pause: f64 = pause.parse().map_err(|_| malformed("pause is not a number"))?;
            if !pause.is_finite() || pause < 0.0 {
                return Err(malformed("pause must be >= 0"));
            }
            current.words.push(ScriptWord::new(word, Duration::from_secs_f64(pause)));
        }
        if !current.words.is_empty() {
            script.turns.push(current);
        }
        Ok(script)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DeviceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| DeviceError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Builds a script where every word follows a uniform pause.
    pub fn from_sentences<S: AsRef<str>>(sentences: &[S], pause: Duration) -> Self {
        Self {
            persona: None,
            turns: sentences
                .iter()
                .map(|s| ScriptTurn {
                    words: s
                        .as_ref()
                        .split_whitespace()
                        .map(|w| ScriptWord::new(w, pause))
                        .collect(),
                })
                .filter(|t| !t.words.is_empty())
                .collect(),
        }
    }

    /// Renders back to the file format; `parse(render(s)) == s`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(p) = &self.persona {
            out.push_str(&format!("# persona: {p}\n"));
        }
        for (i, turn) in self.turns.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            for w in &turn.words {
                out.push_str(&format!("{} {}\n", w.pre_pause.as_secs_f64(), w.word));
            }
        }
        out
    }
}
