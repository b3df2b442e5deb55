use super::{ActionOutcome, CueEvent, EngineError, Turn, TurnEvent};
use crate::config::DeadlineConfig;
use crate::model::{SessionId, SessionState, TranscriptBundle, TurnId, WorkerAction};
use crate::seed;
use crate::time::Timestamp;

/// One conversation: idle until the skill opens, closed for good afterwards.
#[derive(Debug, Clone)]
pub struct Session {
    id: SessionId,
    cfg: DeadlineConfig,
    seed: u64,
    state: SessionState,
    turns: Vec<Turn>,
    opened_at: Option<Timestamp>,
    closed_at: Option<Timestamp>,
}

impl Session {
    pub fn new(id: SessionId, cfg: DeadlineConfig, seed: u64) -> Self {
        Self {
            id,
            cfg,
            seed,
            state: SessionState::Idle,
            turns: Vec::new(),
            opened_at: None,
            closed_at: None,
        }
    }

    pub fn id(&self) -> &SessionId {
        &self.id
    }

    pub fn config(&self) -> &DeadlineConfig {
        &self.cfg
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn opened_at(&self) -> Option<Timestamp> {
        self.opened_at
    }

    pub fn closed_at(&self) -> Option<Timestamp> {
        self.closed_at
    }

    pub fn open(&mut self, now: Timestamp) -> Result<(), EngineError> {
        match self.state {
            SessionState::Idle => {
                self.state = SessionState::Open;
                self.opened_at = Some(now);
                Ok(())
            }
            SessionState::Open => Ok(()),
            SessionState::Closed => Err(EngineError::SessionClosed),
        }
    }

    /// Closes the session. An unresolved turn is abandoned and its id returned.
    pub fn close(&mut self, now: Timestamp) -> Result<Option<TurnId>, EngineError> {
        if self.state == SessionState::Closed {
            return Err(EngineError::SessionClosed);
        }
        self.state = SessionState::Closed;
        self.closed_at = Some(now);
        Ok(self
            .turns
            .last_mut()
            .filter(|t| t.is_open())
            .map(|t| {
                t.abandon();
                t.id().clone()
            }))
    }

    /// Id the next turn will get: `<session>-t<index>` with a 1-based, zero-padded index.
    pub fn next_turn_id(&self) -> TurnId {
        TurnId(format!("{}-t{:03}", self.id, self.turns.len() + 1))
    }

    pub fn active_turn(&self) -> Option<&Turn> {
        self.turns.last().filter(|t| t.is_open())
    }

    pub fn active_turn_mut(&mut self) -> Option<&mut Turn> {
        self.turns.last_mut().filter(|t| t.is_open())
    }

    pub fn turn(&self, id: &TurnId) -> Option<&Turn> {
        self.turns.iter().find(|t| t.id() == id)
    }

    pub fn turn_mut(&mut self, id: &TurnId) -> Option<&mut Turn> {
        self.turns.iter_mut().find(|t| t.id() == id)
    }

    /// Starts a turn for a user message received at `received_at`, delivered
    /// to the worker at `now`.
    pub fn open_turn(
        &mut self,
        received_at: Timestamp,
        bundle: TranscriptBundle,
        now: Timestamp,
    ) -> Result<CueEvent, EngineError> {
        match self.state {
            SessionState::Open => {}
            SessionState::Idle => return Err(EngineError::SkillNotOpen),
            SessionState::Closed => return Err(EngineError::SessionClosed),
        }
        if self.active_turn().is_some() {
            return Err(EngineError::TurnInFlight);
        }
        let index = self.turns.len() + 1;
        let turn_seed = seed::derive_seed(self.seed, &[index as u64]);
        let (turn, ding) = Turn::open(
            self.next_turn_id(),
            index,
            received_at,
            bundle,
            &self.cfg,
            now,
            turn_seed,
        )?;
        self.turns.push(turn);
        Ok(ding)
    }

    /// Applies a worker action to the turn it names.
    pub fn apply(
        &mut self,
        turn_id: &TurnId,
        action: &WorkerAction,
    ) -> Result<ActionOutcome, EngineError> {
        if self.state == SessionState::Closed {
            return Err(EngineError::SessionClosed);
        }
        let turn = self.turn_mut(turn_id).ok_or(EngineError::NoActiveTurn)?;
        Ok(turn.apply(action)?)
    }

    pub fn tick(&mut self, now: Timestamp) -> Vec<TurnEvent> {
        self.active_turn_mut()
            .map(|t| t.tick(now))
            .unwrap_or_default()
    }

    pub fn next_wakeup(&self) -> Option<Timestamp> {
        self.active_turn().and_then(Turn::next_wakeup)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ResponseKind, WorkerActionKind};
    use crate::engine::TurnPhase;

    fn secs(s: f64) -> Timestamp {
        Timestamp::from_secs_f64(s)
    }

    fn session() -> Session {
        Session::new(SessionId("s0001".into()), DeadlineConfig::default(), 7)
    }

    #[test]
    fn lifecycle_is_idle_open_closed() {
        let mut s = session();
        assert_eq!(s.state(), SessionState::Idle);
        assert_eq!(
            s.open_turn(secs(0.0), TranscriptBundle::original_only("hi"), secs(0.0)),
            Err(EngineError::SkillNotOpen)
        );
        s.open(secs(0.0)).unwrap();
        s.close(secs(1.0)).unwrap();
        assert_eq!(s.state(), SessionState::Closed);
        assert_eq!(s.open(secs(2.0)), Err(EngineError::SessionClosed));
        assert_eq!(s.close(secs(2.0)), Err(EngineError::SessionClosed));
        assert_eq!(
            s.open_turn(secs(3.0), TranscriptBundle::original_only("hi"), secs(3.0)),
            Err(EngineError::SessionClosed)
        );
    }

    #[test]
    fn second_turn_while_first_unresolved_is_refused() {
        let mut s = session();
        s.open(secs(0.0)).unwrap();
        let ding = s
            .open_turn(secs(0.0), TranscriptBundle::original_only("hi"), secs(0.0))
            .unwrap();
        assert_eq!(ding.turn_id, TurnId::from("s0001-t001"));
        assert_eq!(
            s.open_turn(secs(1.0), TranscriptBundle::original_only("again"), secs(1.0)),
            Err(EngineError::TurnInFlight)
        );
        let id = ding.turn_id;
        s.apply(
            &id,
            &WorkerAction::new(WorkerActionKind::PressDefault { index: 2 }, secs(2.0)),
        )
        .unwrap();
        let next = s
            .open_turn(secs(3.0), TranscriptBundle::original_only("again"), secs(3.0))
            .unwrap();
        assert_eq!(next.turn_id, TurnId::from("s0001-t002"));
        assert_eq!(s.turns()[0].response_kind(), Some(ResponseKind::DefaultButton));
    }

    #[test]
    fn close_abandons_the_turn_in_flight() {
        let mut s = session();
        s.open(secs(0.0)).unwrap();
        s.open_turn(secs(0.0), TranscriptBundle::original_only("hi"), secs(0.0))
            .unwrap();
        let abandoned = s.close(secs(4.0)).unwrap();
        assert_eq!(abandoned, Some(TurnId::from("s0001-t001")));
        assert_eq!(s.turns()[0].phase(), TurnPhase::Abandoned);
        assert!(s.tick(secs(30.0)).is_empty());
        assert_eq!(s.turns()[0].latency(), None);
    }

    #[test]
    fn turn_seeds_differ_but_repeat() {
        let run = || {
            let mut s = session();
            s.open(secs(0.0)).unwrap();
            let mut texts = Vec::new();
            for i in 0..5 {
                let t = secs(i as f64 * 30.0);
                s.open_turn(t, TranscriptBundle::original_only("x"), t).unwrap();
                s.tick(t + std::time::Duration::from_secs(25));
                texts.push(s.turns()[i].response_text().unwrap().to_owned());
            }
            texts
        };
        assert_eq!(run(), run());
    }
}
