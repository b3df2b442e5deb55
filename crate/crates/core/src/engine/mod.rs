//! Per-turn deadline state machine and the session that owns its turns.

mod session;
mod turn;

use std::time::Duration;

use thiserror::Error;

use crate::model::TurnId;

pub use session::Session;
pub use turn::{ActionOutcome, CueEvent, CueKind, Turn, TurnEvent, TurnPhase};

/// Why a worker action was refused. The turn is unchanged.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionError {
    #[error("suggestions are locked for another {remaining:?}")]
    SuggestionLocked { remaining: Duration },
    #[error("turn is no longer awaiting the worker")]
    Stale,
    #[error("{what} index {index} out of range ({len} available)")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("nothing to send")]
    EmptyDraft,
    #[error("the worker budget has run out")]
    DeadlinePassed,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("turn {0} already resolved")]
    AlreadyResolved(TurnId),
    #[error("response text is empty")]
    EmptyResponse,
    #[error("timestamp precedes the turn's message receipt")]
    ClockWentBackwards,
    #[error("turn in flight")]
    TurnInFlight,
    #[error("skill not open")]
    SkillNotOpen,
    #[error("session closed")]
    SessionClosed,
    #[error("no active turn")]
    NoActiveTurn,
    #[error(transparent)]
    Action(#[from] ActionError),
}
