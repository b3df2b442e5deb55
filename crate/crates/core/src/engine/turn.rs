use std::collections::BTreeSet;
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ActionError, EngineError};
use crate::config::DeadlineConfig;
use crate::model::{
    LatencyRecord, Resolution, ResponseKind, Suggestion, TranscriptBundle, TurnId, WorkerAction,
    WorkerActionKind,
};
use crate::seed;
use crate::suggest::DEFAULT_RESPONSES;
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnPhase {
    AwaitingWorker,
    Resolved,
    /// The user closed the skill mid-turn; nothing was sent.
    Abandoned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CueKind {
    NewMessageDing,
    TenSecondsDong,
    SuggestionsUnlocked,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CueEvent {
    pub kind: CueKind,
    pub turn_id: TurnId,
    pub at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TurnEvent {
    Cue(CueEvent),
    Resolved(LatencyRecord),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionOutcome {
    DraftUpdated,
    TranscriptSelected(usize),
    Resolved(LatencyRecord),
}

/// One user message and the single response that answers it.
///
/// Two clocks matter: the latency clock starts when the gateway received the
/// user message, while the worker's budget starts when the transcript bundle
/// was delivered (`opened_at`). Repair time therefore shows up in latency but
/// does not eat into the worker's budget.
#[derive(Debug, Clone)]
pub struct Turn {
    id: TurnId,
    index: usize,
    seed: u64,
    user_message_received_at: Timestamp,
    opened_at: Timestamp,
    deadline: Timestamp,
    lock_until: Timestamp,
    warn_at: Timestamp,
    bundle: TranscriptBundle,
    suggestions: Vec<Suggestion>,
    draft: Option<String>,
    phase: TurnPhase,
    kind: Option<ResponseKind>,
    response_text: Option<String>,
    response_recorded_at: Option<Timestamp>,
    latency: Option<Duration>,
    cues: BTreeSet<CueKind>,
}

impl Turn {
    /// Delivers `bundle` to the worker at `now` and arms the deadline, lock
    /// and warning timers. Emits the new-message cue.
    pub fn open(
        id: TurnId,
        index: usize,
        user_message_received_at: Timestamp,
        bundle: TranscriptBundle,
        cfg: &DeadlineConfig,
        now: Timestamp,
        seed: u64,
    ) -> Result<(Self, CueEvent), EngineError> {
        if now < user_message_received_at {
            return Err(EngineError::ClockWentBackwards);
        }
        let deadline = now + cfg.worker_budget;
        let mut turn = Self {
            id: id.clone(),
            index,
            seed,
            user_message_received_at,
            opened_at: now,
            deadline,
            lock_until: now + cfg.suggestion_lock,
            warn_at: deadline - cfg.warning_at_remaining,
            bundle,
            suggestions: Vec::new(),
            draft: None,
            phase: TurnPhase::AwaitingWorker,
            kind: None,
            response_text: None,
            response_recorded_at: None,
            latency: None,
            cues: BTreeSet::new(),
        };
        turn.cues.insert(CueKind::NewMessageDing);
        let ding = CueEvent {
            kind: CueKind::NewMessageDing,
            turn_id: id,
            at: now,
        };
        Ok((turn, ding))
    }

    pub fn id(&self) -> &TurnId {
        &self.id
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn phase(&self) -> TurnPhase {
        self.phase
    }

    pub fn is_open(&self) -> bool {
        self.phase == TurnPhase::AwaitingWorker
    }

    pub fn user_message_received_at(&self) -> Timestamp {
        self.user_message_received_at
    }

    pub fn opened_at(&self) -> Timestamp {
        self.opened_at
    }

    pub fn deadline(&self) -> Timestamp {
        self.deadline
    }

    pub fn lock_until(&self) -> Timestamp {
        self.lock_until
    }

    pub fn bundle(&self) -> &TranscriptBundle {
        &self.bundle
    }

    pub fn suggestions(&self) -> &[Suggestion] {
        &self.suggestions
    }

    pub fn draft(&self) -> Option<&str> {
        self.draft.as_deref()
    }

    pub fn response_text(&self) -> Option<&str> {
        self.response_text.as_deref()
    }

    pub fn response_kind(&self) -> Option<ResponseKind> {
        self.kind
    }

    pub fn resolution(&self) -> Option<Resolution> {
        self.kind.map(ResponseKind::resolution)
    }

    pub fn response_recorded_at(&self) -> Option<Timestamp> {
        self.response_recorded_at
    }

    pub fn latency(&self) -> Option<Duration> {
        self.latency
    }

    /// Earliest time at which [`Turn::tick`] has something to do.
    pub fn next_wakeup(&self) -> Option<Timestamp> {
        if !self.is_open() {
            return None;
        }
        let pending = [
            (CueKind::SuggestionsUnlocked, self.lock_until),
            (CueKind::TenSecondsDong, self.warn_at),
        ];
        pending
            .iter()
            .filter(|(kind, _)| !self.cues.contains(kind))
            .map(|&(_, at)| at)
            .chain([self.deadline])
            .min()
    }

    /// Adds a suggestion; ignored once the turn is no longer open.
    pub fn push_suggestion(&mut self, suggestion: Suggestion) -> bool {
        if !self.is_open() || suggestion.text.trim().is_empty() {
            return false;
        }
        self.suggestions.push(suggestion);
        true
    }

    pub fn apply(&mut self, action: &WorkerAction) -> Result<ActionOutcome, ActionError> {
        if !self.is_open() {
            return Err(ActionError::Stale);
        }
        let now = action.at;
        if now >= self.deadline {
            return Err(ActionError::DeadlinePassed);
        }
        match &action.kind {
            WorkerActionKind::TypeDraft { text } => {
                self.draft = Some(text.clone());
                Ok(ActionOutcome::DraftUpdated)
            }
            WorkerActionKind::SendDraft { text } => {
                let text = text
                    .clone()
                    .or_else(|| self.draft.clone())
                    .filter(|t| !t.trim().is_empty())
                    .ok_or(ActionError::EmptyDraft)?;
                self.finish(text, ResponseKind::Typed, now)
            }
            WorkerActionKind::PressDefault { index } => {
                let text = DEFAULT_RESPONSES
                    .get(*index)
                    .ok_or(ActionError::IndexOutOfRange {
                        what: "default response",
                        index: *index,
                        len: DEFAULT_RESPONSES.len(),
                    })?;
                self.finish((*text).to_owned(), ResponseKind::DefaultButton, now)
            }
            WorkerActionKind::SelectSuggestion { index } => {
                if now < self.lock_until {
                    return Err(ActionError::SuggestionLocked {
                        remaining: self.lock_until.saturating_since(now),
                    });
                }
                let text = self
                    .suggestions
                    .get(*index)
                    .ok_or(ActionError::IndexOutOfRange {
                        what: "suggestion",
                        index: *index,
                        len: self.suggestions.len(),
                    })?
                    .text
                    .clone();
                self.finish(text, ResponseKind::Suggested, now)
            }
            WorkerActionKind::SelectTranscript { index } => {
                self.bundle
                    .select(*index)
                    .map_err(|_| ActionError::IndexOutOfRange {
                        what: "transcript",
                        index: *index,
                        len: self.bundle.len(),
                    })?;
                Ok(ActionOutcome::TranscriptSelected(*index))
            }
        }
    }

    /// Advances timers to `now`: unlock and warning cues, then the timeout
    /// fallback once the deadline is reached.
    ///
    /// On timeout the draft is sent if one exists, else a random received
    /// suggestion, else a random default response. Random picks come from a
    /// generator seeded by the turn seed.
    pub fn tick(&mut self, now: Timestamp) -> Vec<TurnEvent> {
        let mut events = Vec::new();
        if !self.is_open() {
            return events;
        }
        let timers = [
            (CueKind::SuggestionsUnlocked, self.lock_until),
            (CueKind::TenSecondsDong, self.warn_at),
        ];
        let mut due: Vec<_> = timers
            .into_iter()
            .filter(|&(kind, at)| now >= at && !self.cues.contains(&kind))
            .collect();
        due.sort_by_key(|&(kind, at)| (at, kind));
        for (kind, at) in due {
            self.cues.insert(kind);
            events.push(TurnEvent::Cue(CueEvent {
                kind,
                turn_id: self.id.clone(),
                at: at.max(self.opened_at).min(now),
            }));
        }
        if now >= self.deadline {
            let (text, kind) = self.timeout_response();
            let record = self
                .finish(text, kind, now)
                .map(|outcome| match outcome {
                    ActionOutcome::Resolved(r) => r,
                    _ => unreachable!("finish always resolves"),
                })
                .expect("open turn resolves");
            events.push(TurnEvent::Resolved(record));
        }
        events
    }

    fn timeout_response(&self) -> (String, ResponseKind) {
        if let Some(draft) = self.draft.as_ref().filter(|d| !d.trim().is_empty()) {
            return (draft.clone(), ResponseKind::TimeoutDraft);
        }
        let mut rng = seed::rng_for(self.seed, &[]);
        if !self.suggestions.is_empty() {
            let i = rng.gen_range(0..self.suggestions.len() as u32) as usize;
            return (self.suggestions[i].text.clone(), ResponseKind::TimeoutRandom);
        }
        let i = rng.gen_range(0..DEFAULT_RESPONSES.len() as u32) as usize;
        (DEFAULT_RESPONSES[i].to_owned(), ResponseKind::TimeoutDefault)
    }

    /// Records the response and computes latency from message receipt.
    pub fn resolve(
        &mut self,
        text: impl Into<String>,
        kind: ResponseKind,
        now: Timestamp,
    ) -> Result<LatencyRecord, EngineError> {
        if !self.is_open() {
            return Err(EngineError::AlreadyResolved(self.id.clone()));
        }
        let text = text.into();
        if text.trim().is_empty() {
            return Err(EngineError::EmptyResponse);
        }
        let latency = now
            .checked_since(self.user_message_received_at)
            .ok_or(EngineError::ClockWentBackwards)?;
        if self.bundle.selected_index.is_none() {
            self.bundle.selected_index = Some(0);
        }
        self.phase = TurnPhase::Resolved;
        self.kind = Some(kind);
        self.response_text = Some(text);
        self.response_recorded_at = Some(now);
        self.latency = Some(latency);
        Ok(LatencyRecord {
            turn_id: self.id.clone(),
            latency,
            kind,
        })
    }

    fn finish(
        &mut self,
        text: String,
        kind: ResponseKind,
        now: Timestamp,
    ) -> Result<ActionOutcome, ActionError> {
        self.resolve(text, kind, now)
            .map(ActionOutcome::Resolved)
            .map_err(|_| ActionError::Stale)
    }

    /// Marks an open turn abandoned. Returns false if it had already ended.
    pub fn abandon(&mut self) -> bool {
        if !self.is_open() {
            return false;
        }
        self.phase = TurnPhase::Abandoned;
        true
    }
}
