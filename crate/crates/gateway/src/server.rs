//! Real-time driver: WebSocket endpoints on `/device` and `/console`, a
//! line-delimited TCP fallback, and a single actor task that owns the hub.
//!
//! Every connection forwards its inbound text to the actor over a channel and
//! receives outbound text over its own channel, so all session state is
//! touched by one task and per-session ordering is the order the actor sees
//! messages. Suggester calls run on the blocking pool under a timeout and
//! report back to the actor when done.

use std::collections::HashMap;
use std::io;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use serde::Deserialize;
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{mpsc, oneshot};
use tokio::task::JoinHandle;
use tracing::{debug, info, warn};

use relay_core::metrics::MetricsStore;
use relay_core::repair::RepairModel;
use relay_core::suggest::{SuggestError, Suggester};
use relay_core::{Clock, SystemClock};

use crate::hub::{ConnId, Hub, HubConfig, Output, Role, SuggestCall};
use crate::protocol::{ErrorCode, WireMessage};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub listen: SocketAddr,
    /// Line-delimited TCP endpoint; disabled when `None`.
    pub tcp_listen: Option<SocketAddr>,
    /// Shared secret expected in `?token=`.
    pub token: String,
    pub hub: HubConfig,
}

/// A running server. Dropping the handle leaves it running; call
/// [`ServerHandle::shutdown`] to stop it.
pub struct ServerHandle {
    pub http_addr: SocketAddr,
    pub tcp_addr: Option<SocketAddr>,
    pub metrics: Arc<MetricsStore>,
    stop: Option<oneshot::Sender<()>>,
    tasks: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub async fn shutdown(mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        for task in self.tasks.drain(..) {
            task.abort();
            let _ = task.await;
        }
    }
}

enum Command {
    Connect {
        role: Role,
        outbound: mpsc::UnboundedSender<String>,
        reply: oneshot::Sender<ConnId>,
    },
    Inbound {
        conn: ConnId,
        text: String,
    },
    Disconnect {
        conn: ConnId,
    },
    SuggestDone {
        call: SuggestCall,
        result: Result<String, SuggestError>,
    },
}

#[derive(Clone)]
struct AppState {
    token: Arc<str>,
    commands: mpsc::UnboundedSender<Command>,
}

#[derive(Deserialize)]
struct AuthQuery {
    #[serde(default)]
    token: String,
}

/// Binds the listeners and starts the hub actor.
pub async fn serve(
    cfg: ServerConfig,
    repair: Arc<dyn RepairModel>,
    suggester: Arc<dyn Suggester>,
    clock: Arc<dyn Clock>,
) -> io::Result<ServerHandle> {
    let metrics = Arc::new(MetricsStore::new());
    let hub = Hub::new(cfg.hub.clone(), repair, metrics.clone());
    let (commands, inbox) = mpsc::unbounded_channel();
    let state = AppState {
        token: cfg.token.clone().into(),
        commands: commands.clone(),
    };
    let (stop, stopped) = oneshot::channel::<()>();
    let mut tasks = Vec::new();
    tasks.push(tokio::spawn(run_actor(hub, inbox, commands, suggester, clock, cfg.hub.deadline.tick)));

    let http = TcpListener::bind(cfg.listen).await?;
    let http_addr = http.local_addr()?;
    let app = Router::new()
        .route("/device", get(ws_device))
        .route("/console", get(ws_console))
        .route("/healthz", get(|| async { "ok" }))
        .with_state(state.clone());
    tasks.push(tokio::spawn(async move {
        let shutdown = async {
            let _ = stopped.await;
        };
        if let Err(e) = axum::serve(http, app).with_graceful_shutdown(shutdown).await {
            warn!(error = %e, "http server stopped");
        }
    }));

    let tcp_addr = match cfg.tcp_listen {
        Some(addr) => {
            let listener = TcpListener::bind(addr).await?;
            let local = listener.local_addr()?;
            let state = state.clone();
            tasks.push(tokio::spawn(async move {
                loop {
                    match listener.accept().await {
                        Ok((stream, peer)) => {
                            debug!(%peer, "tcp connection");
                            tokio::spawn(tcp_session(stream, state.clone()));
                        }
                        Err(e) => warn!(error = %e, "tcp accept failed"),
                    }
                }
            }));
            Some(local)
        }
        None => None,
    };
    info!(%http_addr, ?tcp_addr, "relay gateway listening");
    Ok(ServerHandle {
        http_addr,
        tcp_addr,
        metrics,
        stop: Some(stop),
        tasks,
    })
}

/// Convenience for callers that want the wall clock.
pub fn system_clock() -> Arc<dyn Clock> {
    Arc::new(SystemClock)
}

async fn run_actor(
    mut hub: Hub,
    mut inbox: mpsc::UnboundedReceiver<Command>,
    commands: mpsc::UnboundedSender<Command>,
    suggester: Arc<dyn Suggester>,
    clock: Arc<dyn Clock>,
    tick: Duration,
) {
    let mut outbound: HashMap<ConnId, mpsc::UnboundedSender<String>> = HashMap::new();
    loop {
        // Sleep until the hub's next timer, but never longer than one tick so
        // a stepped clock is noticed promptly.
        let sleep_for = hub
            .next_wakeup()
            .map(|w| w.saturating_since(clock.now()).min(tick))
            .unwrap_or(tick);
        let out = tokio::select! {
            cmd = inbox.recv() => {
                let Some(cmd) = cmd else { break };
                let now = clock.now();
                match cmd {
                    Command::Connect { role, outbound: tx, reply } => {
                        let conn = hub.connect(role);
                        outbound.insert(conn, tx);
                        let _ = reply.send(conn);
                        Output::default()
                    }
                    Command::Inbound { conn, text } => hub.handle_text(conn, &text, now),
                    Command::Disconnect { conn } => {
                        outbound.remove(&conn);
                        hub.disconnect(conn, now)
                    }
                    Command::SuggestDone { call, result } => {
                        hub.suggestion_result(&call, suggester.name(), result, now)
                    }
                }
            }
            _ = tokio::time::sleep(sleep_for) => hub.tick(clock.now()),
        };
        for (conn, msg) in out.messages {
            if let Some(tx) = outbound.get(&conn) {
                let _ = tx.send(msg.to_json());
            }
        }
        for call in out.calls {
            tokio::spawn(fetch_suggestion(call, suggester.clone(), commands.clone()));
        }
    }
}

async fn fetch_suggestion(
    call: SuggestCall,
    suggester: Arc<dyn Suggester>,
    commands: mpsc::UnboundedSender<Command>,
) {
    let result = if !suggester.is_available() {
        Err(SuggestError::Unavailable)
    } else {
        let limit = suggester.timeout();
        let request = call.request.clone();
        let worker = suggester.clone();
        let job = tokio::task::spawn_blocking(move || worker.suggest(&request));
        match tokio::time::timeout(limit, job).await {
            Ok(Ok(Ok(text))) if !text.trim().is_empty() => Ok(text),
            Ok(Ok(Ok(_))) => Err(SuggestError::Empty),
            Ok(Ok(Err(e))) => Err(e),
            Ok(Err(join)) => Err(SuggestError::Failed(join.to_string())),
            Err(_) => Err(SuggestError::Timeout(limit)),
        }
    };
    let _ = commands.send(Command::SuggestDone { call, result });
}

async fn register(
    state: &AppState,
    role: Role,
) -> Option<(ConnId, mpsc::UnboundedReceiver<String>)> {
    let (tx, rx) = mpsc::unbounded_channel();
    let (reply, conn) = oneshot::channel();
    state
        .commands
        .send(Command::Connect {
            role,
            outbound: tx,
            reply,
        })
        .ok()?;
    Some((conn.await.ok()?, rx))
}

async fn ws_device(ws: WebSocketUpgrade, Query(q): Query<AuthQuery>, State(state): State<AppState>) -> Response {
    upgrade(ws, q, state, Role::Device)
}

async fn ws_console(ws: WebSocketUpgrade, Query(q): Query<AuthQuery>, State(state): State<AppState>) -> Response {
    upgrade(ws, q, state, Role::Console)
}

fn upgrade(ws: WebSocketUpgrade, q: AuthQuery, state: AppState, role: Role) -> Response {
    if q.token != *state.token {
        return (StatusCode::UNAUTHORIZED, "bad token").into_response();
    }
    ws.on_upgrade(move |socket| ws_session(socket, role, state))
}

async fn ws_session(socket: WebSocket, role: Role, state: AppState) {
    let Some((conn, mut rx)) = register(&state, role).await else {
        return;
    };
    let (mut sink, mut stream) = socket.split();
    let writer = tokio::spawn(async move {
        while let Some(text) = rx.recv().await {
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
    });
    while let Some(Ok(msg)) = stream.next().await {
        match msg {
            Message::Text(text) => {
                let _ = state.commands.send(Command::Inbound {
                    conn,
                    text: text.to_string(),
                });
            }
            Message::Close(_) => break,
            _ => {}
        }
    }
    let _ = state.commands.send(Command::Disconnect { conn });
    writer.abort();
}

/// Splits `/device?token=abc` into a role and a token.
pub fn parse_request_line(line: &str) -> Option<(Role, String)> {
    let line = line.trim();
    let (path, query) = line.split_once('?').unwrap_or((line, ""));
    let role = Role::from_path(path)?;
    let token = query
        .split('&')
        .filter_map(|kv| kv.split_once('='))
        .find(|(k, _)| *k == "token")
        .map(|(_, v)| v.to_owned())
        .unwrap_or_default();
    Some((role, token))
}

async fn tcp_session(stream: TcpStream, state: AppState) {
    let (read, mut write) = stream.into_split();
    let mut lines = BufReader::new(read).lines();
    let Ok(Some(first)) = lines.next_line().await else {
        return;
    };
    let role = match parse_request_line(&first) {
        Some((role, token)) if token == *state.token => role,
        _ => {
            let refusal = WireMessage::error(ErrorCode::Unauthorized, "bad path or token", Default::default());
            let _ = write.write_all(format!("{}\n", refusal.to_json()).as_bytes()).await;
            return;
        }
    };
    let Some((conn, mut rx)) = register(&state, role).await else {
        return;
    };
    let writer = tokio::spawn(async move {
        while let Some(text) = rx.recv().await {
            let line = format!("{text}\n");
            if write.write_all(line.as_bytes()).await.is_err() {
                break;
            }
        }
    });
    while let Ok(Some(line)) = lines.next_line().await {
        if line.trim().is_empty() {
            continue;
        }
        let _ = state.commands.send(Command::Inbound { conn, text: line });
    }
    let _ = state.commands.send(Command::Disconnect { conn });
    writer.abort();
}
