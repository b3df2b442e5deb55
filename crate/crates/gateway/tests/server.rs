use std::time::Duration;

use futures::{SinkExt, StreamExt};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader, Lines};
use tokio::net::tcp::{OwnedReadHalf, OwnedWriteHalf};
use tokio::net::TcpStream;
use tokio::time::timeout;
use tokio_tungstenite::tungstenite::Message;

use relay_core::{DeadlineConfig, ResponseKind, TurnId, WorkerActionKind};
use relay_gateway::protocol::{ErrorCode, ErrorPayload, ResponsePayload};
use relay_gateway::{bundled_components, serve, system_clock, HubConfig, MessageType, ServerConfig, ServerHandle, WireMessage};

const TOKEN: &str = "secret";

fn short_budget() -> DeadlineConfig {
    DeadlineConfig {
        worker_budget: Duration::from_millis(1500),
        suggestion_lock: Duration::from_millis(300),
        warning_at_remaining: Duration::from_millis(500),
        suggester_min_interval: Duration::from_millis(50),
        tick: Duration::from_millis(20),
        ..DeadlineConfig::default()
    }
    .validate()
    .unwrap()
}

async fn start() -> ServerHandle {
    let parts = bundled_components();
    let cfg = ServerConfig {
        listen: "127.0.0.1:0".parse().unwrap(),
        tcp_listen: Some("127.0.0.1:0".parse().unwrap()),
        token: TOKEN.into(),
        hub: HubConfig {
            deadline: short_budget(),
            seed: 3,
            suggestions: true,
        },
    };
    serve(cfg, parts.repair, parts.suggester, system_clock()).await.unwrap()
}

struct Line {
    lines: Lines<BufReader<OwnedReadHalf>>,
    write: OwnedWriteHalf,
}

impl Line {
    async fn connect(handle: &ServerHandle, path: &str) -> Self {
        let stream = TcpStream::connect(handle.tcp_addr.unwrap()).await.unwrap();
        let (read, write) = stream.into_split();
        let mut conn = Line {
            lines: BufReader::new(read).lines(),
            write,
        };
        conn.raw(path).await;
        conn
    }

    async fn raw(&mut self, text: &str) {
        self.write.write_all(format!("{text}\n").as_bytes()).await.unwrap();
    }

    async fn send(&mut self, msg: &WireMessage) {
        self.raw(&msg.to_json()).await;
    }

    async fn next(&mut self) -> WireMessage {
        let line = timeout(Duration::from_secs(10), self.lines.next_line())
            .await
            .expect("message within 10 s")
            .unwrap()
            .expect("connection open");
        WireMessage::from_json(&line).unwrap()
    }

    async fn next_of(&mut self, kind: MessageType) -> WireMessage {
        loop {
            let msg = self.next().await;
            if msg.kind == kind {
                return msg;
            }
        }
    }
}

#[tokio::test]
async fn tcp_session_with_button_press() {
    let server = start().await;
    let mut console = Line::connect(&server, &format!("/console?token={TOKEN}")).await;
    let mut device = Line::connect(&server, &format!("/device?token={TOKEN}")).await;
    // Give the actor a moment to register both before traffic flows.
    tokio::time::sleep(Duration::from_millis(50)).await;

    device.send(&WireMessage::user_utterance("Alexa, open EchoPal", Default::default())).await;
    let open = device.next_of(MessageType::SkillOpen).await;
    let session = open.session_id.unwrap();

    device.send(&WireMessage::user_utterance("how many bones are in my hand", Default::default())).await;
    let bundle = console.next_of(MessageType::TranscriptBundle).await;
    let turn = bundle.turn_id.clone().unwrap();
    assert_eq!(turn, TurnId(format!("{}-t001", session)));

    console
        .send(&WireMessage::worker_action(&session, &turn, &WorkerActionKind::PressDefault { index: 3 }, Default::default()))
        .await;
    let response = device.next_of(MessageType::SystemResponse).await;
    let payload: ResponsePayload = response.payload_as().unwrap();
    assert_eq!(payload.kind, ResponseKind::DefaultButton);
    assert_eq!(payload.text, "I am thinking about it. Could you provide more information?");
    let mirrored: ResponsePayload = console.next_of(MessageType::SystemResponse).await.payload_as().unwrap();
    assert_eq!(mirrored, payload);

    device.send(&WireMessage::user_utterance("stop", Default::default())).await;
    device.next_of(MessageType::SkillClose).await;
    assert_eq!(server.metrics.len(), 1);
    server.shutdown().await;
}

#[tokio::test]
async fn tcp_absent_worker_times_out() {
    let server = start().await;
    let mut device = Line::connect(&server, &format!("/device?token={TOKEN}")).await;
    device.send(&WireMessage::user_utterance("open echopal", Default::default())).await;
    device.next_of(MessageType::SkillOpen).await;
    let started = std::time::Instant::now();
    device.send(&WireMessage::user_utterance("tell me a joke", Default::default())).await;
    let response: ResponsePayload = device.next_of(MessageType::SystemResponse).await.payload_as().unwrap();
    let waited = started.elapsed();
    assert!(response.kind.is_timeout(), "{:?}", response.kind);
    assert!(waited >= Duration::from_millis(1400), "{waited:?}");
    assert!(response.latency_ms >= 1500 && response.latency_ms <= 1500 + 200, "{}", response.latency_ms);
    server.shutdown().await;
}

#[tokio::test]
async fn tcp_rejects_bad_token_and_early_speech() {
    let server = start().await;
    let mut intruder = Line::connect(&server, "/device?token=wrong").await;
    let refusal: ErrorPayload = intruder.next().await.payload_as().unwrap();
    assert_eq!(refusal.code, ErrorCode::Unauthorized);

    let mut device = Line::connect(&server, &format!("/device?token={TOKEN}")).await;
    device.send(&WireMessage::user_utterance("hello", Default::default())).await;
    let err: ErrorPayload = device.next_of(MessageType::Error).await.payload_as().unwrap();
    assert_eq!(err.code, ErrorCode::SkillNotOpen);
    assert_eq!(err.message, "skill not open");
    device.raw("not json").await;
    let err: ErrorPayload = device.next_of(MessageType::Error).await.payload_as().unwrap();
    assert_eq!(err.code, ErrorCode::BadMessage);
    server.shutdown().await;
}

#[tokio::test]
async fn websocket_device_and_console() {
    let server = start().await;
    let base = format!("ws://{}", server.http_addr);
    let refused = tokio_tungstenite::connect_async(format!("{base}/console?token=nope")).await;
    assert!(refused.is_err());

    let (mut console, _) = tokio_tungstenite::connect_async(format!("{base}/console?token={TOKEN}")).await.unwrap();
    let (mut device, _) = tokio_tungstenite::connect_async(format!("{base}/device?token={TOKEN}")).await.unwrap();
    tokio::time::sleep(Duration::from_millis(50)).await;

    async fn next_of<S>(ws: &mut S, kind: MessageType) -> WireMessage
    where
        S: StreamExt<Item = Result<Message, tokio_tungstenite::tungstenite::Error>> + Unpin,
    {
        loop {
            let msg = timeout(Duration::from_secs(10), ws.next()).await.unwrap().unwrap().unwrap();
            if let Message::Text(text) = msg {
                let wire = WireMessage::from_json(text.as_str()).unwrap();
                if wire.kind == kind {
                    return wire;
                }
            }
        }
    }

    let send = |msg: WireMessage| Message::Text(msg.to_json().into());
    device.send(send(WireMessage::user_utterance("alexa open echopal", Default::default()))).await.unwrap();
    let session = next_of(&mut device, MessageType::SkillOpen).await.session_id.unwrap();
    device.send(send(WireMessage::user_utterance("what is your favorite movie", Default::default()))).await.unwrap();
    let bundle = next_of(&mut console, MessageType::TranscriptBundle).await;
    let turn = bundle.turn_id.unwrap();

    // Within the lock the server refuses, with the time left.
    let first = next_of(&mut console, MessageType::Suggestion).await;
    let select = WireMessage::worker_action(&session, &turn, &WorkerActionKind::SelectSuggestion { index: 0 }, Default::default());
    console.send(send(select.clone())).await.unwrap();
    let err: ErrorPayload = next_of(&mut console, MessageType::Error).await.payload_as().unwrap();
    assert_eq!(err.code, ErrorCode::SuggestionLocked);
    assert!(err.remaining_ms.unwrap() <= 300);

    next_of(&mut console, MessageType::Cue).await;
    tokio::time::sleep(Duration::from_millis(350)).await;
    console.send(send(select)).await.unwrap();
    let response: ResponsePayload = next_of(&mut device, MessageType::SystemResponse).await.payload_as().unwrap();
    assert_eq!(response.kind, ResponseKind::Suggested);
    assert_eq!(response.text, first.payload["text"].as_str().unwrap());
    server.shutdown().await;
}
