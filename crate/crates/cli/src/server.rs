use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::Context;
use axum::body::{Body, Bytes};
use axum::extract::ws::{close_code, CloseFrame, Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use pulse_core::{PayloadParams, Registry, SnapshotIndex, SnapshotParams, Timestamp};
use serde::Deserialize;
use tokio::sync::{broadcast, watch};
use tracing::{debug, error, info, warn};

use crate::args::ServeArgs;
use crate::commands::{load_log, load_registry_file};
use crate::live::LiveFeed;
use crate::publish::{replay_ticks, Published, Renderer};
use crate::Failure;

pub const MAX_HISTORY_HOURS: u32 = 168;
const PUSH_BUFFER: usize = 1024;

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub registry_path: PathBuf,
    pub log_path: PathBuf,
    pub replay: bool,
    pub speed: f64,
    pub refresh: i64,
    pub port: u16,
    pub bind: String,
    pub await_subscriber: bool,
    pub snapshot: SnapshotParams,
    pub payload: PayloadParams,
}

impl ServeConfig {
    pub fn from_args(args: &ServeArgs) -> Self {
        Self {
            registry_path: args.registry.clone(),
            log_path: args.log.clone(),
            replay: args.replay,
            speed: args.speed,
            refresh: args.refresh,
            port: args.port,
            bind: args.bind.clone(),
            await_subscriber: args.await_subscriber,
            snapshot: SnapshotParams::default(),
            payload: PayloadParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.speed.is_finite() && self.speed > 0.0) {
            return Err(format!("--speed must be a positive number, got {}", self.speed));
        }
        if self.refresh < 1 {
            return Err(format!("--refresh must be at least 1 second, got {}", self.refresh));
        }
        if self.await_subscriber && !self.replay {
            return Err("--await-subscriber only applies with --replay".into());
        }
        Ok(())
    }

    /// Wall seconds between refreshes, rounded up.
    pub fn wall_refresh_secs(&self) -> u64 {
        let speed = if self.replay { self.speed } else { 1.0 };
        ((self.refresh as f64 / speed).ceil() as u64).max(1)
    }
}

/// The latest refresh and whether the clock has stopped for good.
#[derive(Debug, Clone, Default)]
pub struct Feed {
    pub latest: Option<Arc<Published>>,
    pub finished: bool,
}

struct Shared {
    registry: Registry,
    registry_json: Bytes,
    feed: watch::Sender<Feed>,
    pushes: broadcast::Sender<Arc<Published>>,
    retry_after: u64,
}

/// Handler state. The refresh producer is the only writer; handlers read
/// whole immutable [`Published`] values.
#[derive(Clone)]
pub struct AppState {
    shared: Arc<Shared>,
}

impl AppState {
    pub fn new(registry: Registry, retry_after: u64) -> Self {
        let registry_json = Bytes::from(registry.to_json_string());
        Self {
            shared: Arc::new(Shared {
                registry,
                registry_json,
                feed: watch::Sender::new(Feed::default()),
                pushes: broadcast::Sender::new(PUSH_BUFFER),
                retry_after,
            }),
        }
    }

    pub fn publish(&self, published: Published) -> Arc<Published> {
        let published = Arc::new(published);
        self.shared
            .feed
            .send_modify(|f| f.latest = Some(Arc::clone(&published)));
        // No subscribers is fine.
        let _ = self.shared.pushes.send(Arc::clone(&published));
        published
    }

    /// Marks the clock as stopped; open streams are closed after their last push.
    pub fn finish(&self) {
        self.shared.feed.send_modify(|f| f.finished = true);
    }

    pub fn latest(&self) -> Option<Arc<Published>> {
        self.shared.feed.borrow().latest.clone()
    }

    pub fn subscriber_count(&self) -> usize {
        self.shared.pushes.receiver_count()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/api/v1/payload", get(payload))
        .route("/api/v1/buildings", get(buildings))
        .route("/api/v1/buildings/{id}/history", get(history))
        .route("/api/v1/stream", get(stream))
        .with_state(state)
}

fn json_body(bytes: Bytes) -> Response {
    (
        [(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))],
        Body::from(bytes),
    )
        .into_response()
}

fn error_body(status: StatusCode, message: String) -> Response {
    (status, Json(serde_json::json!({ "error": message }))).into_response()
}

fn not_ready(state: &AppState) -> Response {
    let secs = state.shared.retry_after;
    let mut resp = (
        StatusCode::SERVICE_UNAVAILABLE,
        Json(serde_json::json!({ "error": "no payload yet", "retry_after_seconds": secs })),
    )
        .into_response();
    resp.headers_mut().insert(header::RETRY_AFTER, HeaderValue::from(secs));
    resp
}

async fn payload(State(state): State<AppState>) -> Response {
    match state.latest() {
        Some(p) => json_body(Bytes::from(p.json.clone())),
        None => not_ready(&state),
    }
}

async fn buildings(State(state): State<AppState>) -> Response {
    json_body(state.shared.registry_json.clone())
}

#[derive(Debug, Deserialize)]
struct HistoryQuery {
    hours: Option<u32>,
}

async fn history(State(state): State<AppState>, Path(id): Path<String>, Query(q): Query<HistoryQuery>) -> Response {
    if state.shared.registry.building(&id).is_none() {
        return error_body(StatusCode::NOT_FOUND, format!("unknown building {id:?}"));
    }
    let hours = q.hours.unwrap_or(24);
    if !(1..=MAX_HISTORY_HOURS).contains(&hours) {
        return error_body(
            StatusCode::BAD_REQUEST,
            format!("hours must be between 1 and {MAX_HISTORY_HOURS}, got {hours}"),
        );
    }
    let Some(latest) = state.latest() else {
        return not_ready(&state);
    };
    match latest.index.history(&id, latest.virtual_now, hours) {
        Ok(series) => Json(series).into_response(),
        Err(e) => error_body(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn stream(State(state): State<AppState>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| stream_session(socket, state))
}

async fn stream_session(mut socket: WebSocket, state: AppState) {
    let mut pushes = state.shared.pushes.subscribe();
    let mut feed = state.shared.feed.subscribe();
    let mut last_sent = Timestamp::MIN;

    let current = feed.borrow_and_update().clone();
    if let Some(p) = current.latest {
        if socket.send(Message::Text(p.json.clone())).await.is_err() {
            return;
        }
        last_sent = p.virtual_now;
    }
    let mut finished = current.finished;

    while !finished {
        tokio::select! {
            push = pushes.recv() => match push {
                Ok(p) if p.virtual_now > last_sent => {
                    if socket.send(Message::Text(p.json.clone())).await.is_err() {
                        return;
                    }
                    last_sent = p.virtual_now;
                }
                Ok(_) => {}
                Err(broadcast::error::RecvError::Lagged(n)) => warn!(skipped = n, "stream subscriber lagging"),
                Err(broadcast::error::RecvError::Closed) => finished = true,
            },
            changed = feed.changed() => {
                finished = changed.is_err() || feed.borrow_and_update().finished;
            }
            incoming = socket.recv() => match incoming {
                None | Some(Err(_)) | Some(Ok(Message::Close(_))) => return,
                Some(Ok(_)) => {}
            },
        }
    }

    while let Ok(p) = pushes.try_recv() {
        if p.virtual_now > last_sent {
            if socket.send(Message::Text(p.json.clone())).await.is_err() {
                return;
            }
            last_sent = p.virtual_now;
        }
    }
    let close = CloseFrame {
        code: close_code::NORMAL,
        reason: "clock stopped".into(),
    };
    let _ = socket.send(Message::Close(Some(close))).await;
}

/// Publishes one refresh per tick, paced at `speed` virtual seconds per
/// wall second. Each tick is computed before its deadline and published at
/// it; a producer running late publishes immediately and never skips.
pub fn drive_replay(state: &AppState, renderer: &Renderer, ticks: &[Timestamp], speed: f64, refresh: i64) {
    let start = Instant::now();
    for (k, &at) in ticks.iter().enumerate() {
        let published = match renderer.render(at) {
            Ok(p) => p,
            Err(e) => {
                error!("{e:#}");
                break;
            }
        };
        let due = start + Duration::from_secs_f64(k as f64 * refresh as f64 / speed);
        if let Some(wait) = due.checked_duration_since(Instant::now()) {
            std::thread::sleep(wait);
        }
        state.publish(published);
        debug!(virtual_now = at, "published");
    }
    info!(ticks = ticks.len(), "replay finished");
    state.finish();
}

fn wait_for_subscriber(state: &AppState) {
    info!("waiting for a stream subscriber before starting the clock");
    while state.subscriber_count() == 0 {
        std::thread::sleep(Duration::from_millis(10));
    }
}

pub async fn run(config: ServeConfig) -> Result<(), Failure> {
    config.validate().map_err(Failure::Usage)?;
    let registry = load_registry_file(&config.registry_path)?;
    let state = AppState::new(registry.clone(), config.wall_refresh_secs());

    let producer: Box<dyn FnOnce() + Send> = if config.replay {
        let cfg = config.clone();
        let (index, ticks) = tokio::task::spawn_blocking(move || -> anyhow::Result<_> {
            let stream = load_log(&cfg.log_path, &registry)?;
            let index = SnapshotIndex::build(&stream, &registry, &cfg.snapshot)?;
            let ticks: Vec<Timestamp> = match (stream.first_ts(), stream.last_ts()) {
                (Some(first), Some(last)) => replay_ticks(first, last, cfg.refresh).collect(),
                _ => Vec::new(),
            };
            Ok((index, ticks))
        })
        .await
        .context("loading log")??;
        info!(ticks = ticks.len(), "replay ready");
        let renderer = Renderer::new(index, config.payload.clone());
        let state = state.clone();
        let (speed, refresh, hold) = (config.speed, config.refresh, config.await_subscriber);
        Box::new(move || {
            if hold {
                wait_for_subscriber(&state);
            }
            drive_replay(&state, &renderer, &ticks, speed, refresh);
        })
    } else {
        let cfg = config.clone();
        let mut live =
            tokio::task::spawn_blocking(move || LiveFeed::open(&cfg.log_path, registry, cfg.snapshot, cfg.payload))
                .await
                .context("loading log")??;
        let state = state.clone();
        let refresh = Duration::from_secs(config.refresh as u64);
        Box::new(move || live.run(&state, refresh))
    };

    let listener = tokio::net::TcpListener::bind((config.bind.as_str(), config.port))
        .await
        .with_context(|| format!("binding {}:{}", config.bind, config.port))?;
    info!(addr = %listener.local_addr().context("local address")?, "listening");
    std::thread::Builder::new()
        .name("refresh".into())
        .spawn(producer)
        .context("starting refresh thread")?;

    tokio::select! {
        served = axum::serve(listener, router(state)) => served.context("server")?,
        _ = tokio::signal::ctrl_c() => info!("shutting down"),
    }
    Ok(())
}
