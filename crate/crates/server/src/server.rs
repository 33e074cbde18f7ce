//! WebSocket telemetry and control endpoints around a real-time run.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::extract::ws::{Message, Utf8Bytes, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{Html, IntoResponse};
use axum::routing::get;
use axum::{Json, Router};
use flightlab_core::engine::{
    run_realtime, ControlMailbox, MonotonicClock, RealtimeOptions, RunSummary, Scenario, ScenarioError,
};
use flightlab_core::telemetry::encode_frame;
use flightlab_core::ControlInputs;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::sync::{broadcast, watch};
use tower_http::services::ServeDir;

pub const DEFAULT_PORT: u16 = 8080;
pub const PORT_ENV: &str = "FLIGHTLAB_PORT";

/// Highest frame rate pushed to any one telemetry client, by simulation time.
pub const MAX_CLIENT_FPS: f64 = 60.0;

const FRAME_BUFFER: usize = 256;
const INDEX_HTML: &str = include_str!("../assets/index.html");

/// An encoded frame shared by every telemetry client.
#[derive(Debug, Clone)]
pub struct Published {
    pub t: f64,
    pub line: Utf8Bytes,
    /// Frames carrying an error are never decimated away.
    pub error: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub frames_published: u64,
    pub controls_accepted: u64,
    pub controls_rejected: u64,
    pub telemetry_clients: usize,
}

pub struct Hub {
    frames: broadcast::Sender<Published>,
    mailbox: ControlMailbox,
    published: AtomicU64,
    accepted: AtomicU64,
    rejected: AtomicU64,
    clients: AtomicUsize,
    shutdown: watch::Sender<bool>,
    assets: Option<PathBuf>,
}

impl Hub {
    pub fn new(assets: Option<PathBuf>) -> Arc<Self> {
        Arc::new(Self {
            frames: broadcast::channel(FRAME_BUFFER).0,
            mailbox: ControlMailbox::new(),
            published: AtomicU64::new(0),
            accepted: AtomicU64::new(0),
            rejected: AtomicU64::new(0),
            clients: AtomicUsize::new(0),
            shutdown: watch::channel(false).0,
            assets,
        })
    }

    pub fn mailbox(&self) -> &ControlMailbox {
        &self.mailbox
    }

    /// Never blocks: with no subscribers the frame is simply dropped.
    pub fn publish(&self, frame: Published) {
        self.published.fetch_add(1, Ordering::Relaxed);
        let _ = self.frames.send(frame);
    }

    pub fn stats(&self) -> Stats {
        Stats {
            frames_published: self.published.load(Ordering::Relaxed),
            controls_accepted: self.accepted.load(Ordering::Relaxed),
            controls_rejected: self.rejected.load(Ordering::Relaxed),
            telemetry_clients: self.clients.load(Ordering::Relaxed),
        }
    }

    /// Closes every open socket and stops the HTTP server.
    pub fn shut_down(&self) {
        self.shutdown.send_replace(true);
    }

    /// Applies one line from a control client; returns whether it was
    /// accepted.
    pub fn accept_control_line(&self, line: &str) -> bool {
        match parse_control_line(line) {
            Ok(u) => {
                self.mailbox.post(u);
                self.accepted.fetch_add(1, Ordering::Relaxed);
                true
            }
            Err(_) => {
                self.rejected.fetch_add(1, Ordering::Relaxed);
                false
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ControlRejection {
    #[error("not a control message: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error(transparent)]
    OutOfRange(#[from] flightlab_core::FlightError),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ControlMessage {
    elevator: f64,
    aileron: f64,
    rudder: f64,
    throttle: f64,
}

/// Parses `{"elevator":..,"aileron":..,"rudder":..,"throttle":..}` and
/// checks the values against the control limits.
pub fn parse_control_line(line: &str) -> Result<ControlInputs, ControlRejection> {
    let m: ControlMessage = serde_json::from_str(line.trim())?;
    let u = ControlInputs { elevator: m.elevator, aileron: m.aileron, rudder: m.rudder, throttle: m.throttle };
    u.validate()?;
    Ok(u)
}

pub fn router(hub: Arc<Hub>) -> Router {
    let app = Router::new()
        .route("/telemetry", get(telemetry))
        .route("/controls", get(controls))
        .route("/stats", get(stats));
    let app = match &hub.assets {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(|| async { Html(INDEX_HTML) })),
    };
    app.with_state(hub)
}

async fn stats(State(hub): State<Arc<Hub>>) -> Json<Stats> {
    Json(hub.stats())
}

async fn telemetry(ws: WebSocketUpgrade, State(hub): State<Arc<Hub>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| stream_frames(socket, hub))
}

async fn controls(ws: WebSocketUpgrade, State(hub): State<Arc<Hub>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| read_controls(socket, hub))
}

async fn stopped(shutdown: &mut watch::Receiver<bool>) {
    let _ = shutdown.wait_for(|stop| *stop).await;
}

async fn stream_frames(mut socket: WebSocket, hub: Arc<Hub>) {
    let mut frames = hub.frames.subscribe();
    let mut shutdown = hub.shutdown.subscribe();
    hub.clients.fetch_add(1, Ordering::Relaxed);
    let min_gap = 1.0 / MAX_CLIENT_FPS - 1e-9;
    let mut last_sent = f64::NEG_INFINITY;
    loop {
        tokio::select! {
            next = frames.recv() => match next {
                Ok(frame) => {
                    if frame.t <= last_sent || (frame.t - last_sent < min_gap && !frame.error) {
                        continue;
                    }
                    if socket.send(Message::Text(frame.line)).await.is_err() {
                        break;
                    }
                    last_sent = frame.t;
                }
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => break,
            },
            incoming = socket.recv() => match incoming {
                None | Some(Err(_)) | Some(Ok(Message::Close(_))) => break,
                Some(Ok(_)) => {}
            },
            _ = stopped(&mut shutdown) => break,
        }
    }
    hub.clients.fetch_sub(1, Ordering::Relaxed);
    let _ = socket.send(Message::Close(None)).await;
}

async fn read_controls(mut socket: WebSocket, hub: Arc<Hub>) {
    let mut shutdown = hub.shutdown.subscribe();
    loop {
        tokio::select! {
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Text(text))) => {
                    for line in text.as_str().lines().filter(|l| !l.trim().is_empty()) {
                        hub.accept_control_line(line);
                    }
                }
                Some(Ok(Message::Binary(_))) => {
                    hub.rejected.fetch_add(1, Ordering::Relaxed);
                }
                Some(Ok(Message::Close(_))) | Some(Err(_)) | None => break,
                Some(Ok(_)) => {}
            },
            _ = stopped(&mut shutdown) => break,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FlightOptions {
    /// Simulated seconds to fly; until stopped if `None`.
    pub duration: Option<f64>,
    /// Directory served at `/` instead of the built-in page.
    pub assets: Option<PathBuf>,
}

/// A real-time run with its server. Physics runs on its own thread and
/// talks to the server only through the hub.
pub struct Flight {
    hub: Arc<Hub>,
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    physics: JoinHandle<Result<RunSummary, ScenarioError>>,
    server: tokio::task::JoinHandle<std::io::Result<()>>,
}

impl Flight {
    /// Serves on `listener` and starts flying `sc` against the wall clock.
    pub async fn start(sc: Scenario, listener: TcpListener, opts: FlightOptions) -> std::io::Result<Self> {
        let addr = listener.local_addr()?;
        let hub = Hub::new(opts.assets);
        let stop = Arc::new(AtomicBool::new(false));

        let app = router(hub.clone());
        let mut shutdown = hub.shutdown.subscribe();
        let server = tokio::spawn(async move {
            axum::serve(listener, app)
                .with_graceful_shutdown(async move { stopped(&mut shutdown).await })
                .await
        });

        let physics = {
            let hub = hub.clone();
            let rt_opts = RealtimeOptions { duration: opts.duration, stop: Some(stop.clone()) };
            std::thread::spawn(move || {
                let mut source = hub.mailbox().clone();
                run_realtime(
                    &sc,
                    &mut source,
                    |f| {
                        hub.publish(Published { t: f.t, line: encode_frame(f).into(), error: f.error.is_some() });
                    },
                    &MonotonicClock::new(),
                    &rt_opts,
                )
            })
        };
        Ok(Self { hub, addr, stop, physics, server })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn hub(&self) -> &Arc<Hub> {
        &self.hub
    }

    pub fn is_finished(&self) -> bool {
        self.physics.is_finished()
    }

    /// Asks the physics loop to stop after its current step.
    pub fn stop(&self) {
        self.stop.store(true, Ordering::Relaxed);
    }

    /// Waits for the physics loop, then shuts the server down.
    pub async fn finish(self) -> Result<RunSummary, ScenarioError> {
        let physics = self.physics;
        let result = tokio::task::spawn_blocking(move || physics.join())
            .await
            .expect("join task panicked")
            .expect("physics thread panicked");
        self.hub.shut_down();
        let _ = self.server.await;
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn control_lines() {
        let u = parse_control_line(r#"{"elevator":0.1,"aileron":-0.2,"rudder":0,"throttle":0.7}"#).unwrap();
        assert_eq!(u, ControlInputs { elevator: 0.1, aileron: -0.2, rudder: 0.0, throttle: 0.7 });
        assert!(matches!(parse_control_line("throttle=1"), Err(ControlRejection::Malformed(_))));
        assert!(matches!(parse_control_line(r#"{"throttle":0.5}"#), Err(ControlRejection::Malformed(_))));
        assert!(matches!(
            parse_control_line(r#"{"elevator":0,"aileron":0,"rudder":0,"throttle":1.5}"#),
            Err(ControlRejection::OutOfRange(_))
        ));
        assert!(matches!(
            parse_control_line(r#"{"elevator":0.9,"aileron":0,"rudder":0,"throttle":0.5}"#),
            Err(ControlRejection::OutOfRange(_))
        ));
    }

    #[test]
    fn hub_counts_and_posts() {
        let hub = Hub::new(None);
        assert!(!hub.accept_control_line("garbage"));
        assert!(hub.accept_control_line(r#"{"elevator":0,"aileron":0,"rudder":0,"throttle":0.25}"#));
        assert_eq!(hub.mailbox().latest().unwrap().throttle, 0.25);
        let s = hub.stats();
        assert_eq!((s.controls_accepted, s.controls_rejected), (1, 1));
    }
}
