use std::time::{Duration, Instant};

use thiserror::Error;
use tracing::warn;

use super::{Pacer, SuggestionRequest};
use crate::model::{Suggestion, TranscriptBundle, TurnId};
use crate::time::Timestamp;

/// What a suggester is asked for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuggestRequest {
    pub utterance: String,
    pub variant_index: usize,
    pub slot: usize,
    pub turn_id: TurnId,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SuggestError {
    #[error("suggester unavailable")]
    Unavailable,
    #[error("suggester timed out after {0:?}")]
    Timeout(Duration),
    #[error("suggester returned an empty reply")]
    Empty,
    #[error("suggester failed: {0}")]
    Failed(String),
}

/// A source of automatic replies: a third-party chatbot, a corpus lookup, a test double.
pub trait Suggester: Send + Sync {
    fn name(&self) -> &str;

    /// Calls slower than this count as failures.
    fn timeout(&self) -> Duration {
        Duration::from_secs(3)
    }

    fn is_available(&self) -> bool {
        true
    }

    fn suggest(&self, request: &SuggestRequest) -> Result<String, SuggestError>;
}

/// Progress through one turn's plan.
///
/// The schedule only decides what to ask next and when to stop; the caller
/// performs the call, which lets the same logic run on a virtual clock or
/// against a real network service.
#[derive(Debug, Clone)]
pub struct Schedule {
    turn_id: TurnId,
    plan: Vec<SuggestionRequest>,
    utterances: Vec<String>,
    deadline: Timestamp,
    next: usize,
    issued_at: Vec<Timestamp>,
    cancelled: bool,
}

impl Schedule {
    pub fn new(
        turn_id: TurnId,
        bundle: &TranscriptBundle,
        plan: Vec<SuggestionRequest>,
        deadline: Timestamp,
    ) -> Self {
        let utterances = (0..bundle.len())
            .map(|i| bundle.transcript(i).unwrap_or_default().to_owned())
            .collect();
        Self {
            turn_id,
            plan,
            utterances,
            deadline,
            next: 0,
            issued_at: Vec::new(),
            cancelled: false,
        }
    }

    pub fn turn_id(&self) -> &TurnId {
        &self.turn_id
    }

    pub fn deadline(&self) -> Timestamp {
        self.deadline
    }

    pub fn is_finished(&self) -> bool {
        self.cancelled || self.next >= self.plan.len()
    }

    pub fn cancel(&mut self) {
        self.cancelled = true;
    }

    pub fn issued_at(&self) -> &[Timestamp] {
        &self.issued_at
    }

    /// Whether a request may still be issued at `at`.
    pub fn can_issue_at(&self, at: Timestamp) -> bool {
        !self.is_finished() && at < self.deadline
    }

    /// Issues the next request at `now`, or finishes the schedule if the
    /// deadline has passed.
    pub fn issue(&mut self, now: Timestamp) -> Option<(SuggestionRequest, SuggestRequest)> {
        if !self.can_issue_at(now) {
            self.cancelled |= now >= self.deadline;
            return None;
        }
        let planned = self.plan[self.next];
        self.next += 1;
        self.issued_at.push(now);
        let request = SuggestRequest {
            utterance: self.utterances[planned.variant_index].clone(),
            variant_index: planned.variant_index,
            slot: planned.slot,
            turn_id: self.turn_id.clone(),
        };
        Some((planned, request))
    }
}

/// Result of driving a schedule to completion on a virtual timeline.
#[derive(Debug, Clone, Default)]
pub struct ScheduleRun {
    pub suggestions: Vec<Suggestion>,
    pub issued_at: Vec<Timestamp>,
    pub failures: usize,
}

/// Runs a plan synchronously: requests go out in plan order, each at the
/// pacer's next free slot, until the plan ends or the next slot would fall at
/// or after `turn_deadline`. Failed calls are skipped, not retried.
///
/// Calls are treated as instantaneous on the timeline; a call whose wall time
/// exceeds the suggester's timeout counts as failed.
pub fn run_schedule(
    mut schedule: Schedule,
    suggester: &dyn Suggester,
    start: Timestamp,
    pacer: &Pacer,
) -> ScheduleRun {
    let mut run = ScheduleRun::default();
    if !suggester.is_available() {
        warn!(suggester = suggester.name(), turn = %schedule.turn_id(), "suggester unavailable, turn proceeds without suggestions");
        return run;
    }
    let mut now = start;
    while !schedule.is_finished() {
        let slot = pacer.reserve(now);
        if !schedule.can_issue_at(slot) {
            pacer.release(slot);
            break;
        }
        now = slot;
        let Some((planned, request)) = schedule.issue(now) else {
            break;
        };
        match call_with_timeout(suggester, &request) {
            Ok(text) => run.suggestions.push(Suggestion {
                text,
                variant_index: planned.variant_index,
                slot: planned.slot,
                received_at: now,
                source: suggester.name().to_owned(),
            }),
            Err(e) => {
                run.failures += 1;
                warn!(suggester = suggester.name(), turn = %request.turn_id, error = %e, "suggestion request skipped");
            }
        }
    }
    run.issued_at = schedule.issued_at().to_vec();
    run
}

/// Calls the suggester and enforces its timeout and non-empty contract.
pub fn call_with_timeout(
    suggester: &dyn Suggester,
    request: &SuggestRequest,
) -> Result<String, SuggestError> {
    let started = Instant::now();
    let text = suggester.suggest(request)?;
    if started.elapsed() > suggester.timeout() {
        return Err(SuggestError::Timeout(suggester.timeout()));
    }
    if text.trim().is_empty() {
        return Err(SuggestError::Empty);
    }
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DeadlineConfig;
    use crate::suggest::plan_for;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Echo;

    impl Suggester for Echo {
        fn name(&self) -> &str {
            "echo"
        }

        fn suggest(&self, r: &SuggestRequest) -> Result<String, SuggestError> {
            Ok(format!("{} #{}", r.utterance, r.slot))
        }
    }

    /// Fails on the n-th call (1-based).
    struct FailsOn {
        n: usize,
        calls: AtomicUsize,
    }

    impl Suggester for FailsOn {
        fn name(&self) -> &str {
            "flaky"
        }

        fn suggest(&self, _: &SuggestRequest) -> Result<String, SuggestError> {
            let call = self.calls.fetch_add(1, Ordering::SeqCst) + 1;
            if call == self.n {
                Err(SuggestError::Failed("boom".into()))
            } else {
                Ok(format!("reply {call}"))
            }
        }
    }

    struct Down;

    impl Suggester for Down {
        fn name(&self) -> &str {
            "down"
        }

        fn is_available(&self) -> bool {
            false
        }

        fn suggest(&self, _: &SuggestRequest) -> Result<String, SuggestError> {
            unreachable!("never called when unavailable")
        }
    }

    fn bundle(alternatives: usize) -> TranscriptBundle {
        let alts = (0..alternatives)
            .map(|i| crate::model::ScoredText {
                text: format!("alt {i}"),
                distance: 0.1 * i as f64,
            })
            .collect();
        TranscriptBundle::new("original", alts, 3).unwrap()
    }

    fn schedule(alternatives: usize, quota: usize, deadline_s: u64) -> Schedule {
        Schedule::new(
            TurnId::from("t1"),
            &bundle(alternatives),
            plan_for(alternatives, quota),
            Timestamp::from_millis(deadline_s * 1000),
        )
    }

    #[test]
    fn full_plan_fits_in_budget() {
        let cfg = DeadlineConfig::default();
        let pacer = Pacer::new(cfg.suggester_min_interval);
        let run = run_schedule(schedule(3, 5, 25), &Echo, Timestamp::ZERO, &pacer);
        assert_eq!(run.suggestions.len(), 20);
        assert_eq!(run.issued_at.len(), 20);
        assert!(run.issued_at.windows(2).all(|w| w[1].saturating_since(w[0]) >= Duration::from_secs(1)));
        let span = run.issued_at[19].saturating_since(run.issued_at[0]);
        assert!(span >= Duration::from_secs(19));
        assert_eq!(run.suggestions[0].text, "original #1");
        assert_eq!(run.suggestions[3].text, "alt 0 #1");
    }

    #[test]
    fn deadline_already_passed() {
        let pacer = Pacer::new(Duration::from_secs(1));
        let run = run_schedule(schedule(3, 5, 25), &Echo, Timestamp::from_millis(25_000), &pacer);
        assert!(run.issued_at.is_empty());
        assert!(run.suggestions.is_empty());
    }

    #[test]
    fn short_budget_truncates_plan() {
        let pacer = Pacer::new(Duration::from_secs(1));
        let run = run_schedule(schedule(3, 5, 10), &Echo, Timestamp::ZERO, &pacer);
        // Slots at 0..=9 s are before the 10 s deadline.
        assert_eq!(run.issued_at.len(), 10);
    }

    #[test]
    fn failure_is_skipped_not_retried() {
        let pacer = Pacer::new(Duration::from_secs(1));
        let flaky = FailsOn {
            n: 2,
            calls: AtomicUsize::new(0),
        };
        let run = run_schedule(schedule(0, 5, 25), &flaky, Timestamp::ZERO, &pacer);
        assert_eq!(run.suggestions.len(), 4);
        assert_eq!(run.failures, 1);
        assert_eq!(flaky.calls.load(Ordering::SeqCst), 5);
    }

    #[test]
    fn unavailable_suggester_yields_nothing() {
        let pacer = Pacer::new(Duration::from_secs(1));
        let run = run_schedule(schedule(3, 5, 25), &Down, Timestamp::ZERO, &pacer);
        assert!(run.suggestions.is_empty());
        assert!(run.issued_at.is_empty());
    }

    #[test]
    fn shared_pacer_spaces_two_turns() {
        let pacer = Pacer::new(Duration::from_secs(1));
        let a = run_schedule(schedule(0, 5, 25), &Echo, Timestamp::ZERO, &pacer);
        let b = run_schedule(schedule(0, 5, 25), &Echo, Timestamp::ZERO, &pacer);
        assert_eq!(b.issued_at[0].as_millis(), a.issued_at[4].as_millis() + 1000);
    }
}
