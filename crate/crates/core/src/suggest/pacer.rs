use std::sync::Mutex;
use std::time::Duration;

use crate::time::Timestamp;

/// Spacing limiter shared by every turn that calls the same suggester.
///
/// Each reservation is at least `min_interval` after the previous one, so the
/// external quota holds across concurrent sessions.
#[derive(Debug)]
pub struct Pacer {
    min_interval: Duration,
    state: Mutex<PacerState>,
}

#[derive(Debug, Default)]
struct PacerState {
    last: Option<Timestamp>,
    before_last: Option<Timestamp>,
}

impl Pacer {
    pub fn new(min_interval: Duration) -> Self {
        Self {
            min_interval,
            state: Mutex::new(PacerState::default()),
        }
    }

    pub fn min_interval(&self) -> Duration {
        self.min_interval
    }

    /// Earliest slot at or after `now`, reserved for the caller.
    pub fn reserve(&self, now: Timestamp) -> Timestamp {
        let mut state = self.state.lock().expect("pacer lock");
        let slot = match state.last {
            Some(last) => now.max(last + self.min_interval),
            None => now,
        };
        state.before_last = state.last;
        state.last = Some(slot);
        slot
    }

    /// Returns an unused reservation if it is still the latest one.
    pub fn release(&self, slot: Timestamp) {
        let mut state = self.state.lock().expect("pacer lock");
        if state.last == Some(slot) {
            state.last = state.before_last.take();
        }
    }
}
