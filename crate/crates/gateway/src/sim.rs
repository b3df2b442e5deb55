//! Discrete-event simulation of one scripted device and one synthetic worker
//! talking to a [`Hub`] on a virtual clock.
//!
//! Events at equal times run in the order they were scheduled, and suggester
//! calls complete at the instant they are issued, so a run is a pure function
//! of the script, the configuration and the seed.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use rand::Rng;
use tracing::warn;

use relay_core::device::{readout_duration, AsrSimulator, CutoffModel, Script, SpeechQueue};
use relay_core::metrics::MetricsStore;
use relay_core::phonetics::Lexicon;
use relay_core::repair::{NoiseParams, RepairModel};
use relay_core::suggest::{corpus_reply_suggester, DialogueCorpus, SuggestError, Suggester};
use relay_core::{seed, LatencyRecord, SessionId, Timestamp, TurnId, WorkerActionKind};

use crate::hub::{ConnId, Hub, HubConfig, Output, Role, SuggestCall};
use crate::protocol::{
    BundlePayload, ClosePayload, CloseReason, MessageType, ResponsePayload, WireMessage,
};

/// Synthetic operator behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkerModel {
    /// Presses a random default response after a uniform 2 to 4 s.
    Button,
    /// Reacts after 1 to 2 s, then types a reply one character at a time.
    Typist,
    /// Never acts, so every turn times out.
    Absent,
}

impl WorkerModel {
    pub fn as_str(self) -> &'static str {
        match self {
            WorkerModel::Button => "button",
            WorkerModel::Typist => "typist",
            WorkerModel::Absent => "absent",
        }
    }
}

impl fmt::Display for WorkerModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WorkerModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "button" => Ok(WorkerModel::Button),
            "typist" => Ok(WorkerModel::Typist),
            "absent" => Ok(WorkerModel::Absent),
            other => Err(format!("unknown worker model {other:?} (button, typist, absent)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub hub: HubConfig,
    pub cutoff: CutoffModel,
    pub worker: WorkerModel,
    /// Word-level recognition noise applied to what the device heard.
    pub asr_noise: NoiseParams,
    pub typing_per_char: Duration,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            hub: HubConfig::default(),
            cutoff: CutoffModel::default(),
            worker: WorkerModel::Absent,
            asr_noise: NoiseParams::silent(0),
            typing_per_char: Duration::from_millis(250),
        }
    }
}

/// Shared read-only parts a simulation needs.
#[derive(Clone)]
pub struct SimComponents {
    pub repair: Arc<dyn RepairModel>,
    pub suggester: Arc<dyn Suggester>,
    /// Replies the typist model types.
    pub replies: Arc<DialogueCorpus>,
    pub lexicon: Arc<Lexicon>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurnOutcome {
    pub turn_id: TurnId,
    pub heard: String,
    pub response: ResponsePayload,
}

#[derive(Debug, Clone, Default)]
pub struct SimReport {
    pub records: Vec<LatencyRecord>,
    pub turns: Vec<TurnOutcome>,
    pub abandoned: Vec<TurnId>,
    /// Canonical JSONL of every message in and out of the hub.
    pub event_log: Vec<String>,
    pub finished_at: Timestamp,
}

impl SimReport {
    pub fn event_log_text(&self) -> String {
        let mut s = self.event_log.join("\n");
        s.push('\n');
        s
    }
}

enum Event {
    DeviceSends(WireMessage),
    ConsoleSends(WireMessage),
    Listen,
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    parts: &'a SimComponents,
    hub: Hub,
    device: ConnId,
    console: ConnId,
    queue: BTreeMap<(Timestamp, u64), Event>,
    order: u64,
    now: Timestamp,
    speech: SpeechQueue,
    asr: AsrSimulator,
    windows: u64,
    bundles_seen: u64,
    heard: BTreeMap<TurnId, String>,
    last_heard: Option<String>,
    device_done: bool,
    report: SimReport,
}

/// Runs `script` to completion and returns what happened.
pub fn simulate(script: &Script, cfg: &SimConfig, parts: &SimComponents) -> SimReport {
    let mut hub = Hub::new(cfg.hub.clone(), parts.repair.clone(), Arc::new(MetricsStore::new())).with_event_log();
    let device = hub.connect(Role::Device);
    let console = hub.connect(Role::Console);
    let mut sim = Sim {
        cfg,
        parts,
        hub,
        device,
        console,
        queue: BTreeMap::new(),
        order: 0,
        now: Timestamp::ZERO,
        speech: SpeechQueue::new(script, cfg.cutoff),
        asr: AsrSimulator::new(cfg.asr_noise, &parts.lexicon),
        windows: 0,
        bundles_seen: 0,
        heard: BTreeMap::new(),
        last_heard: None,
        device_done: false,
        report: SimReport::default(),
    };
    sim.schedule(
        Timestamp::ZERO,
        Event::DeviceSends(WireMessage::user_utterance("Alexa, open EchoPal", Timestamp::ZERO)),
    );
    sim.run();
    sim.report.event_log = sim.hub.take_log();
    sim.report.finished_at = sim.now;
    sim.report
}

impl Sim<'_> {
    fn schedule(&mut self, at: Timestamp, event: Event) {
        self.order += 1;
        self.queue.insert((at.max(self.now), self.order), event);
    }

    fn run(&mut self) {
        loop {
            let next_event = self.queue.first_key_value().map(|(&(t, _), _)| t);
            let wake = self.hub.next_wakeup();
            let out = match (wake, next_event) {
                (None, None) => break,
                (Some(w), e) if e.is_none_or(|e| w <= e) => {
                    self.now = self.now.max(w);
                    self.hub.tick(self.now)
                }
                _ => {
                    let ((t, _), event) = self.queue.pop_first().expect("peeked");
                    self.now = self.now.max(t);
                    match event {
                        Event::DeviceSends(msg) => self.hub.handle(self.device, msg, self.now),
                        Event::ConsoleSends(msg) => self.hub.handle(self.console, msg, self.now),
                        Event::Listen => {
                            self.listen();
                            Output::default()
                        }
                    }
                }
            };
            self.process(out);
        }
    }

    fn process(&mut self, out: Output) {
        let mut pending = vec![out];
        while let Some(out) = pending.pop() {
            for (conn, msg) in out.messages {
                if conn == self.device {
                    self.on_device_message(&msg);
                } else if conn == self.console {
                    self.on_console_message(&msg);
                }
            }
            self.report.records.extend(out.records);
            for call in out.calls {
                pending.push(self.call_suggester(&call));
            }
        }
    }

    fn call_suggester(&mut self, call: &SuggestCall) -> Output {
        let suggester = &self.parts.suggester;
        let result = if suggester.is_available() {
            suggester
                .suggest(&call.request)
                .and_then(|t| if t.trim().is_empty() { Err(SuggestError::Empty) } else { Ok(t) })
        } else {
            Err(SuggestError::Unavailable)
        };
        self.hub.suggestion_result(call, suggester.name(), result, self.now)
    }

    fn listen(&mut self) {
        if self.device_done {
            return;
        }
        let Some(spoken) = self.speech.listen() else {
            self.device_done = true;
            self.schedule(self.now, Event::DeviceSends(WireMessage::user_utterance("stop", self.now)));
            return;
        };
        self.windows += 1;
        let at = self.now + spoken.sent_after;
        if spoken.closes_skill {
            self.device_done = true;
            let payload = ClosePayload {
                reason: CloseReason::Silence,
                abandoned_turn_id: None,
            };
            let msg = WireMessage::new(MessageType::SkillClose, at, serde_json::to_value(payload).expect("serializes"));
            self.schedule(at, Event::DeviceSends(msg));
            return;
        }
        let heard = self
            .asr
            .transcribe(&spoken.utterance(), &self.parts.lexicon, &[self.windows]);
        if heard.is_empty() {
            // Nothing recognizable: the device keeps listening.
            self.schedule(at, Event::Listen);
            return;
        }
        self.last_heard = Some(heard.clone());
        self.schedule(at, Event::DeviceSends(WireMessage::user_utterance(&heard, at)));
    }

    fn on_device_message(&mut self, msg: &WireMessage) {
        match msg.kind {
            MessageType::SkillOpen => self.schedule(self.now, Event::Listen),
            MessageType::SystemResponse => {
                let Ok(response) = msg.payload_as::<ResponsePayload>() else {
                    return;
                };
                let turn_id = msg.turn_id.clone().unwrap_or_else(|| TurnId::from(""));
                let heard = self.heard.remove(&turn_id).unwrap_or_default();
                let readout = readout_duration(&response.text);
                self.report.turns.push(TurnOutcome {
                    turn_id,
                    heard,
                    response,
                });
                self.schedule(self.now + readout, Event::Listen);
            }
            MessageType::SkillClose => {
                self.device_done = true;
                if let Some(turn) = msg
                    .payload_as::<ClosePayload>()
                    .ok()
                    .and_then(|p| p.abandoned_turn_id)
                {
                    self.report.abandoned.push(turn);
                }
            }
            MessageType::Error => {
                warn!(payload = %msg.payload, "device received an error");
                self.device_done = true;
                self.schedule(self.now, Event::DeviceSends(WireMessage::user_utterance("stop", self.now)));
            }
            _ => {}
        }
    }

    fn on_console_message(&mut self, msg: &WireMessage) {
        if msg.kind != MessageType::TranscriptBundle {
            return;
        }
        let (Some(session), Some(turn)) = (msg.session_id.clone(), msg.turn_id.clone()) else {
            return;
        };
        let Ok(bundle) = msg.payload_as::<BundlePayload>() else {
            return;
        };
        if let Some(heard) = self.last_heard.take() {
            self.heard.insert(turn.clone(), heard);
        }
        self.bundles_seen += 1;
        let mut rng = seed::rng_for(self.cfg.hub.seed, &[0x574f_524b, self.bundles_seen]);
        let opened = bundle.opened_at;
        match self.cfg.worker {
            WorkerModel::Absent => {}
            WorkerModel::Button => {
                let delay = Duration::from_millis(rng.gen_range(2000..=4000u32).into());
                let index = rng.gen_range(0..4u32) as usize;
                self.act(&session, &turn, WorkerActionKind::PressDefault { index }, opened + delay);
            }
            WorkerModel::Typist => {
                let reaction = Duration::from_millis(rng.gen_range(1000..=2000u32).into());
                let reply = corpus_reply_suggester(&bundle.original, &self.parts.replies, &self.parts.lexicon);
                self.type_reply(&session, &turn, &reply, opened + reaction);
            }
        }
    }

    /// Schedules one `type_draft` per completed word and a final `send_draft`.
    fn type_reply(&mut self, session: &SessionId, turn: &TurnId, reply: &str, start: Timestamp) {
        let chars: Vec<char> = reply.chars().collect();
        let per_char = self.cfg.typing_per_char;
        let mut typed = String::new();
        let mut at = start;
        for (i, &c) in chars.iter().enumerate() {
            typed.push(c);
            at = at + per_char;
            let word_done = chars.get(i + 1).is_none_or(|n| n.is_whitespace()) && !c.is_whitespace();
            if word_done {
                self.act(session, turn, WorkerActionKind::TypeDraft { text: typed.clone() }, at);
            }
        }
        if !chars.is_empty() {
            self.act(session, turn, WorkerActionKind::SendDraft { text: None }, at);
        }
    }

    fn act(&mut self, session: &SessionId, turn: &TurnId, kind: WorkerActionKind, at: Timestamp) {
        let msg = WireMessage::worker_action(session, turn, &kind, at);
        self.schedule(at, Event::ConsoleSends(msg));
    }
}

/// Standard parts built from the bundled lexicon, corpus and dialogue pairs.
pub fn bundled_components() -> SimComponents {
    use relay_core::data;
    use relay_core::repair::{build_corpus_index, RetrievalRepair};
    use relay_core::suggest::CorpusReplySuggester;
    let lexicon = Arc::new(data::lexicon());
    let index = build_corpus_index(&data::corpus_sentences(), &lexicon, "bundled corpus")
        .expect("bundled corpus is non-empty");
    let replies = Arc::new(
        DialogueCorpus::parse(data::DIALOGUE_PAIRS, &lexicon).expect("bundled pairs parse"),
    );
    SimComponents {
        repair: Arc::new(RetrievalRepair::new(Arc::new(index), lexicon.clone())),
        suggester: Arc::new(CorpusReplySuggester::new(replies.clone(), lexicon.clone())),
        replies,
        lexicon,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use relay_core::ResponseKind;

    fn script(n: usize) -> Script {
        let sentences: Vec<String> = relay_core::data::corpus_sentences()
            .into_iter()
            .take(n)
            .map(str::to_owned)
            .collect();
        Script::from_sentences(&sentences, Duration::from_millis(200))
    }

    #[test]
    fn absent_worker_times_out_every_turn() {
        let parts = bundled_components();
        let cfg = SimConfig::default();
        let report = simulate(&script(4), &cfg, &parts);
        assert_eq!(report.records.len(), 4);
        assert!(report
            .records
            .iter()
            .all(|r| r.kind == ResponseKind::TimeoutRandom && r.latency == Duration::from_secs(25)));
        assert!(report.abandoned.is_empty());
    }

    #[test]
    fn no_suggestions_means_default_fallback() {
        let parts = bundled_components();
        let mut cfg = SimConfig::default();
        cfg.hub.suggestions = false;
        let report = simulate(&script(3), &cfg, &parts);
        assert!(report.records.iter().all(|r| r.kind == ResponseKind::TimeoutDefault));
    }

    #[test]
    fn button_is_quick_and_typist_types() {
        let parts = bundled_components();
        let mut cfg = SimConfig {
            worker: WorkerModel::Button,
            ..SimConfig::default()
        };
        let button = simulate(&script(5), &cfg, &parts);
        assert!(button.records.iter().all(|r| r.kind == ResponseKind::DefaultButton
            && r.latency >= Duration::from_secs(2)
            && r.latency <= Duration::from_secs(4)));
        cfg.worker = WorkerModel::Typist;
        let typist = simulate(&script(5), &cfg, &parts);
        assert_eq!(typist.records.len(), 5);
        for (turn, record) in typist.turns.iter().zip(&typist.records) {
            let expected = corpus_reply_suggester(&turn.response.transcript, &parts.replies, &parts.lexicon);
            if record.kind == ResponseKind::Typed {
                assert_eq!(turn.response.text, expected);
            }
        }
    }

    #[test]
    fn same_seed_same_log() {
        let parts = bundled_components();
        let cfg = SimConfig {
            worker: WorkerModel::Typist,
            ..SimConfig::default()
        };
        let a = simulate(&script(3), &cfg, &parts);
        let b = simulate(&script(3), &cfg, &parts);
        assert_eq!(a.event_log, b.event_log);
        assert!(!a.event_log.is_empty());
    }

    #[test]
    fn worker_model_names() {
        for m in [WorkerModel::Button, WorkerModel::Typist, WorkerModel::Absent] {
            assert_eq!(m.as_str().parse::<WorkerModel>().unwrap(), m);
        }
        assert!("lazy".parse::<WorkerModel>().is_err());
    }
}
