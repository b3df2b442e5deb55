//! JSON wire messages shared by devices, consoles and the hub.
//!
//! Every message is one JSON object with the fields `type`, `seq`,
//! `session_id`, `turn_id`, `at` and `payload`. Encoding goes through
//! `serde_json::Value`, whose maps keep keys sorted, so the text form is
//! canonical and can be byte-compared.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use relay_core::engine::CueKind;
use relay_core::model::{ScoredText, Suggestion, TranscriptBundle, WorkerActionKind};
use relay_core::{ResponseKind, SessionId, Timestamp, TurnId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageType {
    SkillOpen,
    UserUtterance,
    TranscriptBundle,
    Suggestion,
    Cue,
    WorkerAction,
    SystemResponse,
    SkillClose,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    #[serde(rename = "type")]
    pub kind: MessageType,
    #[serde(default)]
    pub seq: u64,
    #[serde(default)]
    pub session_id: Option<SessionId>,
    #[serde(default)]
    pub turn_id: Option<TurnId>,
    #[serde(default)]
    pub at: Timestamp,
    #[serde(default = "empty_object")]
    pub payload: Value,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Malformed(#[from] serde_json::Error),
}

impl WireMessage {
    pub fn new(kind: MessageType, at: Timestamp, payload: Value) -> Self {
        Self {
            kind,
            seq: 0,
            session_id: None,
            turn_id: None,
            at,
            payload,
        }
    }

    pub fn in_session(mut self, session: &SessionId) -> Self {
        self.session_id = Some(session.clone());
        self
    }

    pub fn in_turn(mut self, turn: &TurnId) -> Self {
        self.turn_id = Some(turn.clone());
        self
    }

    /// Canonical text form: sorted keys, no whitespace.
    pub fn to_json(&self) -> String {
        to_canonical(self)
    }

    pub fn from_json(text: &str) -> Result<Self, ProtocolError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Parses the payload into a typed view.
    pub fn payload_as<T: for<'de> Deserialize<'de>>(&self) -> Result<T, ProtocolError> {
        Ok(serde_json::from_value(self.payload.clone())?)
    }

    pub fn user_utterance(text: &str, at: Timestamp) -> Self {
        Self::new(MessageType::UserUtterance, at, json!({ "text": text }))
    }

    pub fn worker_action(
        session: &SessionId,
        turn: &TurnId,
        action: &WorkerActionKind,
        at: Timestamp,
    ) -> Self {
        let payload = serde_json::to_value(action).expect("actions serialize");
        Self::new(MessageType::WorkerAction, at, payload)
            .in_session(session)
            .in_turn(turn)
    }

    pub fn error(code: ErrorCode, message: impl Into<String>, at: Timestamp) -> Self {
        Self::new(
            MessageType::Error,
            at,
            serde_json::to_value(ErrorPayload {
                code,
                message: message.into(),
                remaining_ms: None,
            })
            .expect("errors serialize"),
        )
    }
}

/// Serializes any value with sorted object keys.
pub fn to_canonical<T: Serialize>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("wire values serialize");
    serde_json::to_string(&value).expect("values print")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtterancePayload {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundlePayload {
    pub original: String,
    pub alternatives: Vec<ScoredText<f64>>,
    pub user_message_received_at: Timestamp,
    pub opened_at: Timestamp,
    pub deadline_at: Timestamp,
    pub lock_until: Timestamp,
}

impl BundlePayload {
    pub fn new(
        bundle: &TranscriptBundle,
        received: Timestamp,
        opened: Timestamp,
        deadline: Timestamp,
        lock_until: Timestamp,
    ) -> Self {
        Self {
            original: bundle.original.clone(),
            alternatives: bundle.alternatives.clone(),
            user_message_received_at: received,
            opened_at: opened,
            deadline_at: deadline,
            lock_until,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionPayload {
    /// Position in the turn's suggestion list, used by `select_suggestion`.
    pub index: usize,
    pub text: String,
    pub variant_index: usize,
    pub slot: usize,
    pub source: String,
}

impl SuggestionPayload {
    pub fn new(index: usize, s: &Suggestion) -> Self {
        Self {
            index,
            text: s.text.clone(),
            variant_index: s.variant_index,
            slot: s.slot,
            source: s.source.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuePayload {
    pub kind: CueKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponsePayload {
    pub text: String,
    pub kind: ResponseKind,
    pub latency_ms: u64,
    /// The transcript kept in history for this turn.
    pub transcript: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloseReason {
    /// The user said "cancel" or "stop".
    User,
    /// The device heard nothing in its listening window.
    Silence,
    Disconnect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosePayload {
    pub reason: CloseReason,
    #[serde(default)]
    pub abandoned_turn_id: Option<TurnId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadMessage,
    SkillNotOpen,
    SkillAlreadyOpen,
    TurnInFlight,
    UnknownSession,
    UnknownTurn,
    SuggestionLocked,
    StaleAction,
    IndexOutOfRange,
    EmptyDraft,
    DeadlinePassed,
    Unauthorized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remaining_ms: Option<u64>,
}

/// What a device utterance means to the gateway.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeviceIntent {
    Open,
    Close,
    Say(String),
}

/// Classifies a device utterance.
///
/// Matching is case-insensitive and ignores punctuation and a leading
/// "alexa". "open echopal" opens the skill; "cancel" or "stop" as the whole
/// utterance closes it; anything else is conversation.
pub fn classify_utterance(text: &str) -> DeviceIntent {
    let cleaned: String = text
        .chars()
        .map(|c| {
            if c.is_alphanumeric() {
                c.to_lowercase().next().unwrap_or(c)
            } else if c == '\'' || c == '’' {
                '\0'
            } else {
                ' '
            }
        })
        .filter(|&c| c != '\0')
        .collect();
    let mut words: Vec<&str> = cleaned.split_whitespace().collect();
    if words.first() == Some(&"alexa") {
        words.remove(0);
    }
    match words.as_slice() {
        ["open", "echopal"] | ["open", "echo", "pal"] => DeviceIntent::Open,
        ["cancel"] | ["stop"] => DeviceIntent::Close,
        _ => DeviceIntent::Say(text.trim().to_owned()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phrases() {
        assert_eq!(classify_utterance("Alexa, open EchoPal"), DeviceIntent::Open);
        assert_eq!(classify_utterance("alexa, open echopal"), DeviceIntent::Open);
        assert_eq!(classify_utterance("stop"), DeviceIntent::Close);
        assert_eq!(classify_utterance("Cancel."), DeviceIntent::Close);
        assert_eq!(
            classify_utterance("how many bones are in my hand"),
            DeviceIntent::Say("how many bones are in my hand".into())
        );
        assert!(matches!(classify_utterance("stop the music"), DeviceIntent::Say(_)));
        assert!(matches!(classify_utterance("open echopal please"), DeviceIntent::Say(_)));
    }

    #[test]
    fn canonical_json_sorts_keys() {
        let msg = WireMessage::user_utterance("hi", Timestamp::from_millis(1500));
        assert_eq!(
            msg.to_json(),
            r#"{"at":1500,"payload":{"text":"hi"},"seq":0,"session_id":null,"turn_id":null,"type":"user_utterance"}"#
        );
        assert_eq!(WireMessage::from_json(&msg.to_json()).unwrap(), msg);
    }

    #[test]
    fn worker_action_payload_shape() {
        let msg = WireMessage::worker_action(
            &SessionId("s0001".into()),
            &TurnId::from("s0001-t001"),
            &WorkerActionKind::PressDefault { index: 2 },
            Timestamp::ZERO,
        );
        assert_eq!(msg.payload, json!({"kind": "press_default", "index": 2}));
        let back: WorkerActionKind = msg.payload_as().unwrap();
        assert_eq!(back, WorkerActionKind::PressDefault { index: 2 });
    }

    #[test]
    fn minimal_inbound_message_parses() {
        let msg = WireMessage::from_json(r#"{"type":"user_utterance","payload":{"text":"stop"}}"#).unwrap();
        assert_eq!(msg.kind, MessageType::UserUtterance);
        assert_eq!(msg.seq, 0);
        assert!(WireMessage::from_json(r#"{"type":"shout"}"#).is_err());
    }
}
