//! Automatic reply suggestions: which requests to make, in what order, and how
//! fast.

mod corpus_suggester;
mod defaults;
mod pacer;
mod plan;
mod schedule;

pub use corpus_suggester::{
    corpus_reply_suggester, CorpusReplySuggester, DialogueCorpus, DialoguePair,
};
pub use defaults::{default_responses, DEFAULT_RESPONSES};
pub use pacer::Pacer;
pub use plan::{plan_for, plan_requests, SuggestionRequest, ORIGINAL_HEAD};
pub use schedule::{
    call_with_timeout, run_schedule, Schedule, ScheduleRun, SuggestError, SuggestRequest,
    Suggester,
};
