//! Live teleoperation for a swarmlink scenario.
//!
//! One thread integrates the closed loop in real time while clients connect
//! over WebSocket at `/ws`. Each client receives a `hello` with the scenario
//! summary, then a `frame` stream at the configured rate. A client may send
//! `force` commands (clamped to `f_bar`) and `control` actions (`pause`,
//! `resume`, `reset`). `GET /scenario` returns the same summary as `hello`.
//!
//! ```no_run
//! # async fn demo() -> swarmlink::Result<()> {
//! let scenario = swarmlink::simulator::Scenario::load("scenarios/live_teleop.json")?;
//! swarmlink_teleop::serve(scenario, "127.0.0.1:8080".parse().unwrap()).await
//! # }
//! ```

pub mod protocol;
mod session;

use std::collections::HashMap;
use std::future::Future;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use axum::extract::ws::{Message, Utf8Bytes, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use swarmlink::simulator::{clamp_norm, ForceMailbox, Scenario, Simulation};
use swarmlink::{Error, Result, Vec2};
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, oneshot};

use protocol::{ClientMessage, ControlAction, ForceCommand, ScenarioSummary, ServerMessage, SessionStatus};
use session::{ControlRequest, Session};

pub const DEFAULT_RATE_HZ: f64 = 30.0;
const FRAME_BUFFER: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceConfig {
    /// Frame publication rate.
    pub rate_hz: f64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { rate_hz: DEFAULT_RATE_HZ }
    }
}

struct Shared {
    summary: ScenarioSummary,
    rate_hz: f64,
    mailbox: ForceMailbox,
    last_seq: Mutex<HashMap<u64, u64>>,
    controls: mpsc::UnboundedSender<ControlRequest>,
    frames: broadcast::Sender<Utf8Bytes>,
    next_client: AtomicU64,
}

/// A running live session. Dropping it stops the integration thread.
pub struct TeleopService {
    shared: Arc<Shared>,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl TeleopService {
    /// Designs the gains and starts integrating in real time. Any scripted
    /// force profile in the scenario is ignored: the operator drives robot 1.
    pub fn start(scenario: Scenario, config: ServiceConfig) -> Result<Self> {
        if !(config.rate_hz.is_finite() && config.rate_hz > 0.0) {
            return Err(Error::Schema(format!("frame rate must be positive, got {}", config.rate_hz)));
        }
        if !scenario.file.force.is_live() {
            log::warn!("scenario force profile is scripted; serving it with operator commands instead");
        }
        let sim = Simulation::new(scenario)?;
        let params = sim.design().params;
        let summary = ScenarioSummary::new(sim.scenario(), params.p, params.q, params.psi_max);
        let mailbox = ForceMailbox::new();
        let (frames, _) = broadcast::channel(FRAME_BUFFER);
        let (controls, control_rx) = mpsc::unbounded_channel();
        let stop = Arc::new(AtomicBool::new(false));
        let session = Session::new(sim, mailbox.clone(), frames.clone(), config.rate_hz);
        let thread_stop = stop.clone();
        let thread = std::thread::Builder::new()
            .name("swarmlink-integrator".into())
            .spawn(move || session.run(control_rx, thread_stop))?;
        Ok(Self {
            shared: Arc::new(Shared {
                summary,
                rate_hz: config.rate_hz,
                mailbox,
                last_seq: Mutex::new(HashMap::new()),
                controls,
                frames,
                next_client: AtomicU64::new(1),
            }),
            stop,
            thread: Some(thread),
        })
    }

    pub fn summary(&self) -> &ScenarioSummary {
        &self.shared.summary
    }

    /// Encoded `frame` messages, one per publication tick.
    pub fn subscribe(&self) -> broadcast::Receiver<Utf8Bytes> {
        self.shared.frames.subscribe()
    }

    pub fn apply_command(&self, cmd: ForceCommand) -> ServerMessage {
        self.shared.apply_command(cmd)
    }

    pub async fn control(&self, action: ControlAction) -> Result<SessionStatus> {
        self.shared.control(action).await
    }

    pub fn router(&self) -> Router {
        Router::new()
            .route("/ws", get(ws_handler))
            .route("/scenario", get(scenario_handler))
            .with_state(self.shared.clone())
    }

    /// Serves `/ws` and `/scenario` on `listener` until `shutdown` resolves.
    pub async fn serve_on(
        &self,
        listener: TcpListener,
        shutdown: impl Future<Output = ()> + Send + 'static,
    ) -> Result<()> {
        axum::serve(listener, self.router()).with_graceful_shutdown(shutdown).await?;
        Ok(())
    }

    pub fn shutdown(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(thread) = self.thread.take() {
            if thread.join().is_err() {
                log::error!("integration thread panicked");
            }
        }
    }
}

impl Drop for TeleopService {
    fn drop(&mut self) {
        self.shutdown();
    }
}

impl Shared {
    fn apply_command(&self, cmd: ForceCommand) -> ServerMessage {
        let current = |accepted: bool| {
            let f = self.mailbox.snapshot();
            ServerMessage::Ack { seq: cmd.seq, accepted, fx: f.x, fy: f.y }
        };
        if !(cmd.fx.is_finite() && cmd.fy.is_finite()) {
            return current(false);
        }
        let mut last_seq = self.last_seq.lock().unwrap_or_else(|e| e.into_inner());
        if last_seq.get(&cmd.client).is_some_and(|&last| cmd.seq <= last) {
            log::debug!("client {} sent stale seq {}", cmd.client, cmd.seq);
            return current(false);
        }
        last_seq.insert(cmd.client, cmd.seq);
        self.mailbox.post(clamp_norm(Vec2::new(cmd.fx, cmd.fy), self.summary.f_bar));
        current(true)
    }

    async fn control(&self, action: ControlAction) -> Result<SessionStatus> {
        let (tx, rx) = oneshot::channel();
        let stopped = || Error::Schema("the integration loop has stopped".into());
        self.controls.send((action, tx)).map_err(|_| stopped())?;
        rx.await.map_err(|_| stopped())
    }

    async fn handle(&self, client: u64, text: &str) -> ServerMessage {
        match serde_json::from_str::<ClientMessage>(text) {
            Ok(ClientMessage::Force(cmd)) => self.apply_command(ForceCommand { client, ..cmd }),
            Ok(ClientMessage::Control { action }) => match self.control(action).await {
                Ok(status) => ServerMessage::Status(status),
                Err(e) => ServerMessage::Error { message: e.to_string() },
            },
            Err(e) => ServerMessage::Error { message: format!("unrecognised message: {e}") },
        }
    }

    fn forget(&self, client: u64) {
        self.last_seq.lock().unwrap_or_else(|e| e.into_inner()).remove(&client);
    }
}

async fn scenario_handler(State(shared): State<Arc<Shared>>) -> Json<ScenarioSummary> {
    Json(shared.summary.clone())
}

async fn ws_handler(ws: WebSocketUpgrade, State(shared): State<Arc<Shared>>) -> Response {
    ws.on_upgrade(move |socket| client_session(socket, shared))
}

fn encode(msg: &ServerMessage) -> Message {
    Message::Text(serde_json::to_string(msg).unwrap_or_default().into())
}

async fn client_session(socket: WebSocket, shared: Arc<Shared>) {
    let client = shared.next_client.fetch_add(1, Ordering::Relaxed);
    let mut frames = shared.frames.subscribe();
    let (mut tx, mut rx) = socket.split();
    log::info!("client {client} connected");
    let hello = ServerMessage::Hello { client, rate_hz: shared.rate_hz, scenario: shared.summary.clone() };
    if tx.send(encode(&hello)).await.is_ok() {
        loop {
            tokio::select! {
                incoming = rx.next() => match incoming {
                    Some(Ok(Message::Text(text))) => {
                        let reply = shared.handle(client, &text).await;
                        if tx.send(encode(&reply)).await.is_err() {
                            break;
                        }
                    }
                    Some(Ok(Message::Close(_))) | None => break,
                    Some(Ok(_)) => {}
                    Some(Err(e)) => {
                        log::debug!("client {client}: {e}");
                        break;
                    }
                },
                frame = frames.recv() => match frame {
                    Ok(text) => {
                        if tx.send(Message::Text(text)).await.is_err() {
                            break;
                        }
                    }
                    Err(broadcast::error::RecvError::Lagged(n)) => log::debug!("client {client} skipped {n} frames"),
                    Err(broadcast::error::RecvError::Closed) => break,
                },
            }
        }
    }
    shared.forget(client);
    log::info!("client {client} disconnected");
}

/// Starts a session for `scenario` and serves it on `addr` until Ctrl-C.
pub async fn serve(scenario: Scenario, addr: SocketAddr) -> Result<()> {
    let mut service = TeleopService::start(scenario, ServiceConfig::default())?;
    let listener = TcpListener::bind(addr).await?;
    log::info!("serving on ws://{}/ws", listener.local_addr()?);
    service
        .serve_on(listener, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    service.shutdown();
    Ok(())
}
