//! Sans-IO routing core.
//!
//! The hub owns every session and connection. Drivers feed it inbound
//! messages, suggester results and the current time; it returns the messages
//! to deliver and the suggester calls to make. Nothing in here blocks, sleeps
//! or reads a clock, so the same hub runs under the network server and under
//! the virtual-clock simulation.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Value};
use tracing::{debug, warn};

use relay_core::engine::{ActionError, ActionOutcome, EngineError, Session, TurnEvent};
use relay_core::metrics::MetricsStore;
use relay_core::repair::{build_bundle, RepairModel};
use relay_core::suggest::{plan_requests, Schedule, SuggestError, SuggestRequest, SuggestionRequest};
use relay_core::{
    seed, DeadlineConfig, LatencyRecord, SessionId, Suggestion, Timestamp, WorkerAction,
    WorkerActionKind,
};

use crate::protocol::{
    classify_utterance, to_canonical, BundlePayload, ClosePayload, CloseReason, CuePayload,
    DeviceIntent, ErrorCode, ErrorPayload, MessageType, ResponsePayload, SuggestionPayload,
    UtterancePayload, WireMessage,
};

pub type ConnId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Device,
    Console,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Device => "device",
            Role::Console => "console",
        }
    }

    pub fn from_path(path: &str) -> Option<Self> {
        match path.trim_end_matches('/') {
            "/device" => Some(Role::Device),
            "/console" => Some(Role::Console),
            _ => None,
        }
    }
}

/// A suggester call the driver must perform and report back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuggestCall {
    pub session_id: SessionId,
    pub planned: SuggestionRequest,
    pub request: SuggestRequest,
    pub issued_at: Timestamp,
}

#[derive(Debug, Default)]
pub struct Output {
    pub messages: Vec<(ConnId, WireMessage)>,
    pub calls: Vec<SuggestCall>,
    pub records: Vec<LatencyRecord>,
}

impl Output {
    pub fn is_empty(&self) -> bool {
        self.messages.is_empty() && self.calls.is_empty() && self.records.is_empty()
    }

    pub fn extend(&mut self, other: Output) {
        self.messages.extend(other.messages);
        self.calls.extend(other.calls);
        self.records.extend(other.records);
    }
}

#[derive(Debug, Clone)]
pub struct HubConfig {
    pub deadline: DeadlineConfig,
    pub seed: u64,
    /// Whether turns fetch automatic suggestions at all.
    pub suggestions: bool,
}

impl Default for HubConfig {
    fn default() -> Self {
        Self {
            deadline: DeadlineConfig::default(),
            seed: 0,
            suggestions: true,
        }
    }
}

struct Conn {
    role: Role,
    seq: u64,
    session: Option<SessionId>,
}

struct Slot {
    session: Session,
    device: ConnId,
    schedule: Option<Schedule>,
}

pub struct Hub {
    cfg: HubConfig,
    repair: Arc<dyn RepairModel>,
    metrics: Arc<MetricsStore>,
    conns: BTreeMap<ConnId, Conn>,
    sessions: BTreeMap<SessionId, Slot>,
    next_conn: ConnId,
    session_counter: u64,
    next_suggest_at: Timestamp,
    last_served: Option<SessionId>,
    log: Option<Vec<String>>,
}

impl Hub {
    pub fn new(cfg: HubConfig, repair: Arc<dyn RepairModel>, metrics: Arc<MetricsStore>) -> Self {
        Self {
            cfg,
            repair,
            metrics,
            conns: BTreeMap::new(),
            sessions: BTreeMap::new(),
            next_conn: 1,
            session_counter: 0,
            next_suggest_at: Timestamp::ZERO,
            last_served: None,
            log: None,
        }
    }

    /// Keeps a JSONL record of every inbound and outbound message.
    pub fn with_event_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn take_log(&mut self) -> Vec<String> {
        self.log.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn config(&self) -> &HubConfig {
        &self.cfg
    }

    pub fn metrics(&self) -> &Arc<MetricsStore> {
        &self.metrics
    }

    pub fn session(&self, id: &SessionId) -> Option<&Session> {
        self.sessions.get(id).map(|s| &s.session)
    }

    pub fn session_of(&self, conn: ConnId) -> Option<&SessionId> {
        self.conns.get(&conn)?.session.as_ref()
    }

    pub fn connect(&mut self, role: Role) -> ConnId {
        let id = self.next_conn;
        self.next_conn += 1;
        self.conns.insert(
            id,
            Conn {
                role,
                seq: 0,
                session: None,
            },
        );
        debug!(conn = id, role = role.as_str(), "connected");
        id
    }

    /// Drops a connection. A device leaving closes its session.
    pub fn disconnect(&mut self, conn: ConnId, now: Timestamp) -> Output {
        let mut out = Output::default();
        self.pump(now, &mut out);
        if let Some(session) = self.conns.get(&conn).and_then(|c| c.session.clone()) {
            self.close_session(&session, CloseReason::Disconnect, now, &mut out);
        }
        self.conns.remove(&conn);
        out
    }

    pub fn handle_text(&mut self, conn: ConnId, text: &str, now: Timestamp) -> Output {
        match WireMessage::from_json(text) {
            Ok(msg) => self.handle(conn, msg, now),
            Err(e) => {
                self.log_line(conn, "in", "raw", Value::String(text.to_owned()));
                let mut out = Output::default();
                self.pump(now, &mut out);
                self.send(conn, WireMessage::error(ErrorCode::BadMessage, e.to_string(), now), &mut out);
                out
            }
        }
    }

    pub fn handle(&mut self, conn: ConnId, msg: WireMessage, now: Timestamp) -> Output {
        let mut out = Output::default();
        self.log_line(conn, "in", "msg", serde_json::to_value(&msg).expect("message serializes"));
        // Timers due at or before `now` fire before the message is applied.
        self.pump(now, &mut out);
        let Some(role) = self.conns.get(&conn).map(|c| c.role) else {
            return out;
        };
        match (role, msg.kind) {
            (Role::Device, MessageType::UserUtterance) => self.device_utterance(conn, &msg, now, &mut out),
            (Role::Device, MessageType::SkillClose) => {
                let reason = msg
                    .payload_as::<ClosePayload>()
                    .map(|p| p.reason)
                    .unwrap_or(CloseReason::User);
                match self.conns[&conn].session.clone() {
                    Some(session) => self.close_session(&session, reason, now, &mut out),
                    None => self.send(conn, WireMessage::error(ErrorCode::SkillNotOpen, "skill not open", now), &mut out),
                }
            }
            (Role::Console, MessageType::WorkerAction) => self.console_action(conn, &msg, now, &mut out),
            (role, kind) => {
                let text = format!("{} cannot send {}", role.as_str(), to_canonical(&kind));
                self.send(conn, WireMessage::error(ErrorCode::BadMessage, text, now), &mut out);
            }
        }
        self.pump(now, &mut out);
        out
    }

    /// Advances timers and issues any suggester call that is due.
    pub fn tick(&mut self, now: Timestamp) -> Output {
        let mut out = Output::default();
        self.pump(now, &mut out);
        out
    }

    /// Reports the outcome of a [`SuggestCall`] made by the driver.
    pub fn suggestion_result(
        &mut self,
        call: &SuggestCall,
        source: &str,
        result: Result<String, SuggestError>,
        now: Timestamp,
    ) -> Output {
        let mut out = Output::default();
        self.pump(now, &mut out);
        let turn_id = &call.request.turn_id;
        match result {
            Ok(text) => {
                let Some(slot) = self.sessions.get_mut(&call.session_id) else {
                    return out;
                };
                let Some(turn) = slot.session.turn_mut(turn_id) else {
                    return out;
                };
                let accepted = turn.push_suggestion(Suggestion {
                    text,
                    variant_index: call.planned.variant_index,
                    slot: call.planned.slot,
                    received_at: now,
                    source: source.to_owned(),
                });
                if accepted {
                    let index = turn.suggestions().len() - 1;
                    let payload = SuggestionPayload::new(index, &turn.suggestions()[index]);
                    let msg = WireMessage::new(MessageType::Suggestion, now, value(&payload))
                        .in_session(&call.session_id)
                        .in_turn(turn_id);
                    self.broadcast(msg, &mut out);
                }
            }
            Err(SuggestError::Unavailable) => {
                warn!(suggester = source, turn = %turn_id, "suggester unavailable, turn proceeds without suggestions");
                if let Some(slot) = self.sessions.get_mut(&call.session_id) {
                    if let Some(s) = slot.schedule.as_mut().filter(|s| s.turn_id() == turn_id) {
                        s.cancel();
                    }
                }
            }
            Err(e) => warn!(suggester = source, turn = %turn_id, error = %e, "suggestion request skipped"),
        }
        self.pump(now, &mut out);
        out
    }

    /// Earliest time the hub needs [`Hub::tick`] again.
    pub fn next_wakeup(&self) -> Option<Timestamp> {
        let timers = self.sessions.values().filter_map(|s| s.session.next_wakeup());
        let suggest = self
            .sessions
            .values()
            .filter_map(|s| s.schedule.as_ref())
            .any(|s| s.can_issue_at(self.next_suggest_at))
            .then_some(self.next_suggest_at);
        timers.chain(suggest).min()
    }

    fn device_utterance(&mut self, conn: ConnId, msg: &WireMessage, now: Timestamp, out: &mut Output) {
        let Ok(UtterancePayload { text }) = msg.payload_as::<UtterancePayload>() else {
            self.send(conn, WireMessage::error(ErrorCode::BadMessage, "user_utterance needs a text payload", now), out);
            return;
        };
        let current = self.conns[&conn].session.clone();
        match (classify_utterance(&text), current) {
            (DeviceIntent::Open, Some(_)) => {
                self.send(conn, WireMessage::error(ErrorCode::SkillAlreadyOpen, "skill already open", now), out);
            }
            (DeviceIntent::Open, None) => self.open_session(conn, now, out),
            (DeviceIntent::Close, Some(session)) => self.close_session(&session, CloseReason::User, now, out),
            (_, None) => {
                self.send(conn, WireMessage::error(ErrorCode::SkillNotOpen, "skill not open", now), out);
            }
            (DeviceIntent::Say(text), Some(session)) => {
                if text.is_empty() {
                    self.send(conn, WireMessage::error(ErrorCode::BadMessage, "empty utterance", now), out);
                } else {
                    self.open_turn(conn, &session, &text, now, out);
                }
            }
        }
    }

    fn open_session(&mut self, conn: ConnId, now: Timestamp, out: &mut Output) {
        self.session_counter += 1;
        let id = SessionId(format!("s{:04}", self.session_counter));
        let mut session = Session::new(
            id.clone(),
            self.cfg.deadline.clone(),
            seed::derive_seed(self.cfg.seed, &[self.session_counter]),
        );
        session.open(now).expect("fresh session opens");
        self.sessions.insert(
            id.clone(),
            Slot {
                session,
                device: conn,
                schedule: None,
            },
        );
        if let Some(c) = self.conns.get_mut(&conn) {
            c.session = Some(id.clone());
        }
        let msg = WireMessage::new(MessageType::SkillOpen, now, json!({})).in_session(&id);
        self.send(conn, msg.clone(), out);
        self.broadcast(msg, out);
    }

    fn open_turn(&mut self, conn: ConnId, session: &SessionId, text: &str, now: Timestamp, out: &mut Output) {
        let bundle = build_bundle(text, &*self.repair, self.cfg.deadline.alternatives_count);
        let slot = self.sessions.get_mut(session).expect("connection points at a live session");
        let ding = match slot.session.open_turn(now, bundle.clone(), now) {
            Ok(ding) => ding,
            Err(e) => {
                let code = match e {
                    EngineError::TurnInFlight => ErrorCode::TurnInFlight,
                    _ => ErrorCode::SkillNotOpen,
                };
                self.send(conn, WireMessage::error(code, e.to_string(), now), out);
                return;
            }
        };
        let turn = slot.session.active_turn().expect("just opened");
        let payload = BundlePayload::new(
            &bundle,
            turn.user_message_received_at(),
            turn.opened_at(),
            turn.deadline(),
            turn.lock_until(),
        );
        if self.cfg.suggestions {
            let plan = plan_requests(&bundle, &self.cfg.deadline);
            slot.schedule = Some(Schedule::new(turn.id().clone(), &bundle, plan, turn.deadline()));
        }
        let turn_id = ding.turn_id.clone();
        let bundle_msg = WireMessage::new(MessageType::TranscriptBundle, now, value(&payload))
            .in_session(session)
            .in_turn(&turn_id);
        self.broadcast(bundle_msg, out);
        let cue = WireMessage::new(MessageType::Cue, ding.at, value(&CuePayload { kind: ding.kind }))
            .in_session(session)
            .in_turn(&turn_id);
        self.broadcast(cue, out);
    }

    fn close_session(&mut self, session: &SessionId, reason: CloseReason, now: Timestamp, out: &mut Output) {
        let Some(mut slot) = self.sessions.remove(session) else {
            return;
        };
        let abandoned = slot.session.close(now).ok().flatten();
        if let Some(turn) = &abandoned {
            debug!(session = %session, turn = %turn, "turn abandoned");
        }
        if let Some(c) = self.conns.get_mut(&slot.device) {
            c.session = None;
        }
        let payload = ClosePayload {
            reason,
            abandoned_turn_id: abandoned,
        };
        let msg = WireMessage::new(MessageType::SkillClose, now, value(&payload)).in_session(session);
        if self.conns.contains_key(&slot.device) {
            self.send(slot.device, msg.clone(), out);
        }
        self.broadcast(msg, out);
    }

    fn console_action(&mut self, conn: ConnId, msg: &WireMessage, now: Timestamp, out: &mut Output) {
        let Ok(kind) = msg.payload_as::<WorkerActionKind>() else {
            self.send(conn, WireMessage::error(ErrorCode::BadMessage, "unrecognized worker action", now), out);
            return;
        };
        let Some(session) = msg.session_id.clone().filter(|s| self.sessions.contains_key(s)) else {
            self.send(conn, WireMessage::error(ErrorCode::UnknownSession, "unknown session", now), out);
            return;
        };
        let slot = self.sessions.get_mut(&session).expect("checked above");
        let turn_id = match msg.turn_id.clone().or_else(|| slot.session.active_turn().map(|t| t.id().clone())) {
            Some(t) if slot.session.turn(&t).is_some() => t,
            _ => {
                self.send(conn, WireMessage::error(ErrorCode::UnknownTurn, "unknown turn", now), out);
                return;
            }
        };
        match slot.session.apply(&turn_id, &WorkerAction::new(kind.clone(), now)) {
            Ok(outcome) => {
                let echo = WireMessage::worker_action(&session, &turn_id, &kind, now);
                self.broadcast(echo, out);
                if let ActionOutcome::Resolved(record) = outcome {
                    self.dispatch(&session, record, now, out);
                }
            }
            Err(e) => {
                let (code, remaining_ms) = match &e {
                    EngineError::Action(ActionError::SuggestionLocked { remaining }) => {
                        (ErrorCode::SuggestionLocked, Some(remaining.as_millis() as u64))
                    }
                    EngineError::Action(ActionError::IndexOutOfRange { .. }) => (ErrorCode::IndexOutOfRange, None),
                    EngineError::Action(ActionError::EmptyDraft) => (ErrorCode::EmptyDraft, None),
                    EngineError::Action(ActionError::DeadlinePassed) => (ErrorCode::DeadlinePassed, None),
                    _ => (ErrorCode::StaleAction, None),
                };
                let payload = ErrorPayload {
                    code,
                    message: e.to_string(),
                    remaining_ms,
                };
                let reply = WireMessage::new(MessageType::Error, now, value(&payload))
                    .in_session(&session)
                    .in_turn(&turn_id);
                self.send(conn, reply, out);
            }
        }
    }

    /// Sends the single response of a resolved turn to the device and consoles.
    fn dispatch(&mut self, session: &SessionId, record: LatencyRecord, now: Timestamp, out: &mut Output) {
        let slot = self.sessions.get_mut(session).expect("dispatch targets a live session");
        slot.schedule = None;
        let turn = slot.session.turn(&record.turn_id).expect("resolved turn exists");
        let payload = ResponsePayload {
            text: turn.response_text().unwrap_or_default().to_owned(),
            kind: record.kind,
            latency_ms: record.latency.as_millis() as u64,
            transcript: turn.bundle().selected().to_owned(),
        };
        let device = slot.device;
        let msg = WireMessage::new(MessageType::SystemResponse, now, value(&payload))
            .in_session(session)
            .in_turn(&record.turn_id);
        if self.conns.contains_key(&device) {
            self.send(device, msg.clone(), out);
        }
        self.broadcast(msg, out);
        self.metrics.record(record.clone());
        out.records.push(record);
    }

    fn pump(&mut self, now: Timestamp, out: &mut Output) {
        let ids: Vec<SessionId> = self.sessions.keys().cloned().collect();
        for id in &ids {
            let events = self.sessions.get_mut(id).map(|s| s.session.tick(now)).unwrap_or_default();
            for event in events {
                match event {
                    TurnEvent::Cue(cue) => {
                        let msg = WireMessage::new(MessageType::Cue, cue.at, value(&CuePayload { kind: cue.kind }))
                            .in_session(id)
                            .in_turn(&cue.turn_id);
                        self.broadcast(msg, out);
                    }
                    TurnEvent::Resolved(record) => self.dispatch(id, record, now, out),
                }
            }
        }
        self.issue_suggestion(now, out);
    }

    /// At most one call per pacing interval across all sessions, served
    /// round-robin starting after the session served last.
    fn issue_suggestion(&mut self, now: Timestamp, out: &mut Output) {
        if now < self.next_suggest_at {
            return;
        }
        let ready: Vec<SessionId> = self
            .sessions
            .iter()
            .filter(|(_, s)| s.schedule.as_ref().is_some_and(|sc| sc.can_issue_at(now)))
            .map(|(id, _)| id.clone())
            .collect();
        let pick = match &self.last_served {
            Some(last) => ready.iter().find(|id| *id > last).or(ready.first()),
            None => ready.first(),
        };
        let Some(id) = pick.cloned() else {
            return;
        };
        let slot = self.sessions.get_mut(&id).expect("ready session exists");
        let schedule = slot.schedule.as_mut().expect("ready session has a schedule");
        if let Some((planned, request)) = schedule.issue(now) {
            out.calls.push(SuggestCall {
                session_id: id.clone(),
                planned,
                request,
                issued_at: now,
            });
            self.next_suggest_at = now + self.cfg.deadline.suggester_min_interval;
            self.last_served = Some(id);
        }
    }

    fn broadcast(&mut self, msg: WireMessage, out: &mut Output) {
        let consoles: Vec<ConnId> = self
            .conns
            .iter()
            .filter(|(_, c)| c.role == Role::Console)
            .map(|(&id, _)| id)
            .collect();
        for conn in consoles {
            self.send(conn, msg.clone(), out);
        }
    }

    fn send(&mut self, conn: ConnId, mut msg: WireMessage, out: &mut Output) {
        let Some(c) = self.conns.get_mut(&conn) else {
            return;
        };
        c.seq += 1;
        msg.seq = c.seq;
        self.log_line(conn, "out", "msg", serde_json::to_value(&msg).expect("message serializes"));
        out.messages.push((conn, msg));
    }

    fn log_line(&mut self, conn: ConnId, dir: &str, key: &str, body: Value) {
        if let Some(log) = self.log.as_mut() {
            let mut line = serde_json::Map::new();
            line.insert("conn".into(), json!(conn));
            line.insert("dir".into(), json!(dir));
            line.insert(key.into(), body);
            log.push(to_canonical(&Value::Object(line)));
        }
    }
}

fn value<T: serde::Serialize>(payload: &T) -> Value {
    serde_json::to_value(payload).expect("payloads serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use relay_core::data;
    use relay_core::model::ScoredText;
    use relay_core::{ResponseKind, TurnId};
    use std::time::Duration;

    /// Repair that always proposes the same two sentences.
    struct Fixed;

    impl RepairModel for Fixed {
        fn name(&self) -> &str {
            "fixed"
        }

        fn candidates(&self, _: &str, k: usize) -> Vec<ScoredText<f64>> {
            [("alpha", 0.1), ("beta", 0.2)]
                .into_iter()
                .take(k)
                .map(|(t, d)| ScoredText { text: t.into(), distance: d })
                .collect()
        }
    }

    fn ms(v: u64) -> Timestamp {
        Timestamp::from_millis(v)
    }

    fn hub(suggestions: bool) -> (Hub, ConnId, ConnId) {
        let cfg = HubConfig {
            suggestions,
            seed: 5,
            ..HubConfig::default()
        };
        let mut hub = Hub::new(cfg, Arc::new(Fixed), Arc::new(MetricsStore::new())).with_event_log();
        let device = hub.connect(Role::Device);
        let console = hub.connect(Role::Console);
        (hub, device, console)
    }

    fn say(hub: &mut Hub, device: ConnId, text: &str, at: u64) -> Output {
        hub.handle(device, WireMessage::user_utterance(text, ms(at)), ms(at))
    }

    fn kinds_for(out: &Output, conn: ConnId) -> Vec<MessageType> {
        out.messages.iter().filter(|(c, _)| *c == conn).map(|(_, m)| m.kind).collect()
    }

    fn error_code(out: &Output, conn: ConnId) -> Option<ErrorCode> {
        out.messages
            .iter()
            .find(|(c, m)| *c == conn && m.kind == MessageType::Error)
            .map(|(_, m)| m.payload_as::<ErrorPayload>().unwrap().code)
    }

    #[test]
    fn talking_before_open_is_refused() {
        let (mut hub, device, _) = hub(false);
        let out = say(&mut hub, device, "hello there", 0);
        assert_eq!(error_code(&out, device), Some(ErrorCode::SkillNotOpen));
        let out = say(&mut hub, device, "stop", 0);
        assert_eq!(error_code(&out, device), Some(ErrorCode::SkillNotOpen));
    }

    #[test]
    fn open_turn_respond_close() {
        let (mut hub, device, console) = hub(false);
        let out = say(&mut hub, device, "Alexa, open EchoPal", 0);
        assert_eq!(kinds_for(&out, device), vec![MessageType::SkillOpen]);
        assert_eq!(kinds_for(&out, console), vec![MessageType::SkillOpen]);
        let session = hub.session_of(device).cloned().unwrap();
        assert_eq!(session.0, "s0001");

        let out = say(&mut hub, device, "how many bones are in my hand", 1000);
        assert_eq!(kinds_for(&out, console), vec![MessageType::TranscriptBundle, MessageType::Cue]);
        let bundle: BundlePayload = out.messages[0].1.payload_as().unwrap();
        assert_eq!(bundle.alternatives.len(), 2);
        assert_eq!(bundle.deadline_at, ms(26_000));

        let out = say(&mut hub, device, "are you there", 2000);
        assert_eq!(error_code(&out, device), Some(ErrorCode::TurnInFlight));

        let turn = TurnId::from("s0001-t001");
        let action = WireMessage::worker_action(&session, &turn, &WorkerActionKind::PressDefault { index: 0 }, ms(0));
        let out = hub.handle(console, action, ms(9000));
        let responses: Vec<_> = out.messages.iter().filter(|(_, m)| m.kind == MessageType::SystemResponse).collect();
        assert_eq!(responses.len(), 2);
        let payload: ResponsePayload = responses[0].1.payload_as().unwrap();
        assert_eq!(payload.text, "Yes, I agree.");
        assert_eq!(payload.kind, ResponseKind::DefaultButton);
        assert_eq!(payload.latency_ms, 8000);
        assert_eq!(responses[0].1.payload, responses[1].1.payload);
        assert_eq!(hub.metrics().len(), 1);

        let out = say(&mut hub, device, "stop", 12_000);
        assert_eq!(kinds_for(&out, device), vec![MessageType::SkillClose]);
        assert!(hub.session_of(device).is_none());
    }

    #[test]
    fn lock_rejection_carries_remaining_time() {
        let (mut hub, device, console) = hub(true);
        say(&mut hub, device, "open echopal", 0);
        let out = say(&mut hub, device, "what is your favorite movie", 0);
        assert_eq!(out.calls.len(), 1);
        let call = out.calls[0].clone();
        hub.suggestion_result(&call, "test", Ok("I like comedies.".into()), ms(0));
        let session = hub.session_of(device).cloned().unwrap();
        let action = WireMessage::worker_action(
            &session,
            &TurnId::from("s0001-t001"),
            &WorkerActionKind::SelectSuggestion { index: 0 },
            ms(0),
        );
        let out = hub.handle(console, action.clone(), ms(3000));
        let err: ErrorPayload = out.messages.iter().find(|(c, _)| *c == console).unwrap().1.payload_as().unwrap();
        assert_eq!(err.code, ErrorCode::SuggestionLocked);
        assert_eq!(err.remaining_ms, Some(2000));
        let out = hub.handle(console, action, ms(5000));
        assert!(out.records.iter().any(|r| r.kind == ResponseKind::Suggested));
    }

    #[test]
    fn sequence_numbers_increase_per_connection() {
        let (mut hub, device, console) = hub(true);
        let mut all = Output::default();
        all.extend(say(&mut hub, device, "open echopal", 0));
        all.extend(say(&mut hub, device, "tell me a joke", 100));
        let mut t = 100;
        while let Some(next) = hub.next_wakeup() {
            t = next.as_millis().max(t);
            let out = hub.tick(ms(t));
            let calls = out.calls.clone();
            all.extend(out);
            for call in calls {
                all.extend(hub.suggestion_result(&call, "test", Ok(format!("reply {}", call.planned.slot)), ms(t)));
            }
        }
        for conn in [device, console] {
            let seqs: Vec<u64> = all.messages.iter().filter(|(c, _)| *c == conn).map(|(_, m)| m.seq).collect();
            assert!(seqs.windows(2).all(|w| w[1] > w[0]), "{seqs:?}");
            assert_eq!(seqs.first(), Some(&1));
        }
        let console_kinds = kinds_for(&all, console);
        let bundle_pos = console_kinds.iter().position(|k| *k == MessageType::TranscriptBundle).unwrap();
        let first_suggestion = console_kinds.iter().position(|k| *k == MessageType::Suggestion).unwrap();
        assert!(bundle_pos < first_suggestion);
        assert_eq!(all.records.len(), 1);
        assert_eq!(all.records[0].kind, ResponseKind::TimeoutRandom);
        assert_eq!(all.records[0].latency, Duration::from_secs(25));
    }

    #[test]
    fn close_mid_turn_abandons_and_stops_suggestions() {
        let (mut hub, device, console) = hub(true);
        say(&mut hub, device, "open echopal", 0);
        let out = say(&mut hub, device, "tell me a joke", 0);
        let call = out.calls[0].clone();
        let out = say(&mut hub, device, "cancel", 2000);
        let close: ClosePayload = out.messages.iter().find(|(c, _)| *c == console).unwrap().1.payload_as().unwrap();
        assert_eq!(close.abandoned_turn_id, Some(TurnId::from("s0001-t001")));
        let late = hub.suggestion_result(&call, "test", Ok("late".into()), ms(2500));
        assert!(late.is_empty());
        assert_eq!(hub.next_wakeup(), None);
        assert!(hub.metrics().is_empty());
    }

    #[test]
    fn unavailable_suggester_cancels_the_schedule() {
        let (mut hub, device, _) = hub(true);
        say(&mut hub, device, "open echopal", 0);
        let out = say(&mut hub, device, "tell me a joke", 0);
        let call = out.calls[0].clone();
        hub.suggestion_result(&call, "test", Err(SuggestError::Unavailable), ms(0));
        assert_eq!(hub.next_wakeup(), Some(ms(5000)));
    }

    #[test]
    fn devices_cannot_send_worker_actions() {
        let (mut hub, device, console) = hub(false);
        let msg = WireMessage::worker_action(&SessionId("s0001".into()), &TurnId::from("x"), &WorkerActionKind::PressDefault { index: 0 }, ms(0));
        let out = hub.handle(device, msg, ms(0));
        assert_eq!(error_code(&out, device), Some(ErrorCode::BadMessage));
        let out = hub.handle_text(console, "{not json", ms(0));
        assert_eq!(error_code(&out, console), Some(ErrorCode::BadMessage));
        let out = hub.handle(console, WireMessage::user_utterance("hi", ms(0)), ms(0));
        assert_eq!(error_code(&out, console), Some(ErrorCode::BadMessage));
    }

    #[test]
    fn event_log_lines_are_canonical() {
        let (mut hub, device, _) = hub(false);
        say(&mut hub, device, "open echopal", 0);
        let log = hub.take_log();
        assert_eq!(log.len(), 3);
        assert!(log[0].starts_with(r#"{"conn":1,"dir":"in","msg":{"at":0,"#));
        for line in &log {
            let v: Value = serde_json::from_str(line).unwrap();
            assert_eq!(&to_canonical(&v), line);
        }
    }

    #[test]
    fn retrieval_repair_fills_the_bundle() {
        let lex = Arc::new(data::lexicon());
        let sentences = data::corpus_sentences();
        let index = relay_core::repair::build_corpus_index(&sentences, &lex, "bundled").unwrap();
        let repair = relay_core::repair::RetrievalRepair::new(Arc::new(index), lex);
        let mut hub = Hub::new(HubConfig::default(), Arc::new(repair), Arc::new(MetricsStore::new()));
        let device = hub.connect(Role::Device);
        let console = hub.connect(Role::Console);
        say(&mut hub, device, "open echopal", 0);
        let out = say(&mut hub, device, "what is your favorite seen in the movie", 0);
        let (_, msg) = out.messages.iter().find(|(c, m)| *c == console && m.kind == MessageType::TranscriptBundle).unwrap();
        let bundle: BundlePayload = msg.payload_as().unwrap();
        assert_eq!(bundle.alternatives.len(), 3);
        assert!(bundle.alternatives.windows(2).all(|w| w[0].distance <= w[1].distance));
    }
}
