//! Live session over WebSocket. One task owns the [`Session`] and ticks it on
//! a wall-clock interval; each connection task only decodes frames and
//! forwards them through an ordered queue.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::{mpsc, oneshot};
use tokio::task::JoinHandle;
use xrsim_core::dsl::RuntimeProgram;
use xrsim_core::eventlog::EventLog;
use xrsim_core::netsync::{decode, encode, Outbound, Session, SessionConfig, WireMessage};
use xrsim_core::scene::TICK_MS;
use xrsim_core::ClientId;

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub scenario_name: String,
    pub program: RuntimeProgram,
    pub seed: u64,
    pub max_clients: usize,
    pub addr: SocketAddr,
    pub log_dir: PathBuf,
    pub tick: Duration,
}

impl ServeConfig {
    pub fn new(scenario_name: String, program: RuntimeProgram, addr: SocketAddr, log_dir: PathBuf) -> Self {
        Self {
            scenario_name,
            program,
            seed: 0,
            max_clients: SessionConfig::default().max_clients,
            addr,
            log_dir,
            tick: Duration::from_millis(TICK_MS),
        }
    }
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("session: {0}")]
    Session(String),
    #[error("writing log {path}: {source}")]
    Log {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("server task failed: {0}")]
    Task(String),
}

/// Handle of a running server.
pub struct ServeHandle {
    pub addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    engine: JoinHandle<Result<(PathBuf, EventLog), ServeError>>,
    http: JoinHandle<()>,
}

impl ServeHandle {
    /// Stops ticking, closes connections and writes the session log.
    /// Returns the log path and its contents.
    pub async fn shutdown(mut self) -> Result<(PathBuf, EventLog), ServeError> {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        let res = self
            .engine
            .await
            .map_err(|e| ServeError::Task(e.to_string()))?;
        self.http.abort();
        res
    }
}

type ConnId = u64;

enum Inbound {
    Open {
        conn: ConnId,
        out: mpsc::UnboundedSender<String>,
    },
    Msg {
        conn: ConnId,
        msg: WireMessage,
    },
    Close {
        conn: ConnId,
    },
}

#[derive(Clone)]
struct AppState {
    inbound: mpsc::UnboundedSender<Inbound>,
    next_conn: std::sync::Arc<std::sync::atomic::AtomicU64>,
}

/// Binds and starts serving. Fails only when the address is unavailable or
/// the program cannot start a session.
pub async fn start(cfg: ServeConfig) -> Result<ServeHandle, ServeError> {
    let listener = TcpListener::bind(cfg.addr).await.map_err(|source| ServeError::Bind {
        addr: cfg.addr,
        source,
    })?;
    let addr = listener.local_addr().map_err(|source| ServeError::Bind {
        addr: cfg.addr,
        source,
    })?;
    let session_cfg = SessionConfig {
        max_clients: cfg.max_clients,
        ..SessionConfig::default()
    };
    let session = Session::new(cfg.scenario_name.clone(), cfg.program.clone(), cfg.seed, session_cfg)
        .map_err(|e| ServeError::Session(e.to_string()))?;

    let (tx, rx) = mpsc::unbounded_channel();
    let (stop_tx, stop_rx) = oneshot::channel();
    let state = AppState {
        inbound: tx,
        next_conn: Default::default(),
    };
    let app = Router::new().route("/", get(upgrade)).with_state(state);
    let http = tokio::spawn(async move {
        let _ = axum::serve(listener, app).await;
    });
    let engine = tokio::spawn(engine_loop(session, rx, stop_rx, cfg.tick, cfg.log_dir));
    Ok(ServeHandle {
        addr,
        stop: Some(stop_tx),
        engine,
        http,
    })
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> axum::response::Response {
    ws.on_upgrade(move |socket| connection(socket, state))
}

async fn connection(socket: WebSocket, state: AppState) {
    let conn = state
        .next_conn
        .fetch_add(1, std::sync::atomic::Ordering::Relaxed);
    let (out_tx, mut out_rx) = mpsc::unbounded_channel::<String>();
    if state.inbound.send(Inbound::Open { conn, out: out_tx }).is_err() {
        return;
    }
    let (mut sink, mut stream) = socket.split();
    let writer = tokio::spawn(async move {
        while let Some(line) = out_rx.recv().await {
            if sink.send(Message::Text(line.into())).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });
    while let Some(Ok(frame)) = stream.next().await {
        let text = match frame {
            Message::Text(t) => t.to_string(),
            Message::Close(_) => break,
            _ => continue,
        };
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let msg = match decode(line) {
                Ok(m) => m,
                Err(e) => WireMessage::Refuse {
                    reason: format!("malformed message: {e}"),
                },
            };
            // A decode failure is reported back by the engine task so that
            // replies stay ordered with everything else sent to this peer.
            if state.inbound.send(Inbound::Msg { conn, msg }).is_err() {
                break;
            }
        }
    }
    let _ = state.inbound.send(Inbound::Close { conn });
    writer.abort();
}

struct Peer {
    out: mpsc::UnboundedSender<String>,
    client: Option<ClientId>,
}

async fn engine_loop(
    mut session: Session,
    mut rx: mpsc::UnboundedReceiver<Inbound>,
    mut stop: oneshot::Receiver<()>,
    tick: Duration,
    log_dir: PathBuf,
) -> Result<(PathBuf, EventLog), ServeError> {
    let mut peers: BTreeMap<ConnId, Peer> = BTreeMap::new();
    let mut interval = tokio::time::interval(tick);
    interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Burst);
    loop {
        tokio::select! {
            _ = &mut stop => break,
            _ = interval.tick() => {
                while let Ok(inb) = rx.try_recv() {
                    handle_inbound(&mut session, &mut peers, inb);
                }
                let out = session.step();
                route(&peers, None, out);
            }
        }
    }
    // Whatever is still queued was received before the stop request.
    while let Ok(inb) = rx.try_recv() {
        handle_inbound(&mut session, &mut peers, inb);
    }
    let log = session.finish_log();
    let digest = &log.header.digest;
    let path = log_dir.join(format!(
        "serve-{}-{}.jsonl",
        &digest[..8.min(digest.len())],
        log.header.seed
    ));
    std::fs::create_dir_all(&log_dir)
        .and_then(|_| std::fs::write(&path, log.to_jsonl()))
        .map_err(|source| ServeError::Log {
            path: path.clone(),
            source,
        })?;
    Ok((path, log))
}

fn handle_inbound(session: &mut Session, peers: &mut BTreeMap<ConnId, Peer>, inb: Inbound) {
    match inb {
        Inbound::Open { conn, out } => {
            peers.insert(conn, Peer { out, client: None });
        }
        Inbound::Close { conn } => {
            if let Some(Peer {
                client: Some(id), ..
            }) = peers.remove(&conn)
            {
                session.leave(id);
            }
        }
        Inbound::Msg { conn, msg } => {
            let Some(peer) = peers.get(&conn) else {
                return;
            };
            if let WireMessage::Refuse { .. } = msg {
                let _ = peer.out.send(encode(&msg));
                return;
            }
            let (id, out) = session.receive(peer.client, msg);
            let refused = id.is_none()
                && out
                    .iter()
                    .any(|o| matches!(o, Outbound::Reply(WireMessage::Refuse { .. })));
            if let Some(p) = peers.get_mut(&conn) {
                p.client = id;
            }
            route(peers, Some(conn), out);
            if refused {
                // Dropping the sender closes the connection after the refusal.
                peers.remove(&conn);
            }
        }
    }
}

fn route(peers: &BTreeMap<ConnId, Peer>, sender: Option<ConnId>, out: Vec<Outbound>) {
    for o in out {
        match o {
            Outbound::Reply(m) => {
                if let Some(p) = sender.and_then(|c| peers.get(&c)) {
                    let _ = p.out.send(encode(&m));
                }
            }
            Outbound::To(id, m) => {
                for p in peers.values().filter(|p| p.client == Some(id)) {
                    let _ = p.out.send(encode(&m));
                }
            }
            Outbound::Broadcast(m) => {
                let line = encode(&m);
                for p in peers.values().filter(|p| p.client.is_some()) {
                    let _ = p.out.send(line.clone());
                }
            }
        }
    }
}
