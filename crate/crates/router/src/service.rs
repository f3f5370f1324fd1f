//! Control service: per-frame pipeline, scene state, PLC dispatch and the
//! HTTP/WebSocket API.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;
use warehouse_router_core::plan::{plan_scene_with, DispatchTarget, Phase, PlatformStatus};
use warehouse_router_core::vision::{RgbRange, Role};
use warehouse_router_core::wire::encode_motion;
use warehouse_router_core::{Frame, PipelineConfig, Point, ScenePlan};

use crate::ingest::{file_source, FrameServer, Mailbox, StandardDecoder};
use crate::plc::PlcConnection;
use crate::pnm::encode_p6;
use crate::render::annotate;

/// Stage durations of one frame in milliseconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub vision_ms: f64,
    pub graph_ms: f64,
    pub route_ms: f64,
    pub dispatch_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneState {
    pub frame_seq: u64,
    #[serde(flatten)]
    pub plan: ScenePlan,
    pub timing: TimingRow,
}

/// Latest processed frame with its published JSON.
#[derive(Debug)]
pub struct Snapshot {
    pub state: SceneState,
    pub json: String,
    pub frame: Frame,
}

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    BadRequest(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let code = match self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
        };
        (code, Json(serde_json::json!({ "error": self.to_string() }))).into_response()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalRequest {
    pub platform_id: u32,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRequest {
    pub role: Role,
    #[serde(default)]
    pub platform_id: Option<u32>,
    pub min: [u8; 3],
    pub max: [u8; 3],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DispatchRecord {
    pub frame_seq: u64,
    pub platform_id: u32,
    pub ok: bool,
}

#[derive(Default)]
struct Dispatcher {
    /// Last payload acknowledged per platform.
    last: BTreeMap<u32, Vec<u8>>,
    conns: BTreeMap<u32, PlcConnection>,
    log: Vec<DispatchRecord>,
}

const PLC_TIMEOUT: Duration = Duration::from_millis(500);

impl Dispatcher {
    fn send(&mut self, id: u32, target: &DispatchTarget, payload: &[u8]) -> bool {
        // One reconnect attempt when a cached connection has gone stale.
        for _ in 0..2 {
            let conn = match self.conns.entry(id) {
                std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
                std::collections::btree_map::Entry::Vacant(v) => match PlcConnection::connect(target.addr.as_str(), PLC_TIMEOUT) {
                    Ok(c) => v.insert(c),
                    Err(e) => {
                        log::warn!("platform {id}: cannot reach PLC {}: {e}", target.addr);
                        return false;
                    }
                },
            };
            match conn.write_block(target.db, target.start, payload) {
                Ok(()) => return true,
                Err(e) => {
                    log::warn!("platform {id}: PLC write failed: {e}");
                    self.conns.remove(&id);
                    if !e.is_retriable() {
                        return false;
                    }
                }
            }
        }
        false
    }
}

/// Shared service state. One pipeline writer, many readers.
pub struct Service {
    config: RwLock<Arc<PipelineConfig>>,
    scene: RwLock<Option<Arc<Snapshot>>>,
    events: broadcast::Sender<Arc<str>>,
    seq: AtomicU64,
    /// Guards the single-writer section of [`Service::process_frame`].
    pipeline: Mutex<Dispatcher>,
    default_plc: Option<String>,
}

impl Service {
    pub fn new(config: PipelineConfig, default_plc: Option<String>) -> anyhow::Result<Arc<Self>> {
        config.validate()?;
        let (events, _) = broadcast::channel(16);
        Ok(Arc::new(Self {
            config: RwLock::new(Arc::new(config)),
            scene: RwLock::new(None),
            events,
            seq: AtomicU64::new(0),
            pipeline: Mutex::new(Dispatcher::default()),
            default_plc,
        }))
    }

    pub fn config(&self) -> Arc<PipelineConfig> {
        self.config.read().expect("config lock").clone()
    }

    pub fn scene(&self) -> Option<Arc<Snapshot>> {
        self.scene.read().expect("scene lock").clone()
    }

    pub fn subscribe(&self) -> broadcast::Receiver<Arc<str>> {
        self.events.subscribe()
    }

    pub fn dispatch_log(&self) -> Vec<DispatchRecord> {
        self.pipeline.lock().expect("pipeline lock").log.clone()
    }

    fn target(&self, cfg: &PipelineConfig, id: u32) -> Option<DispatchTarget> {
        cfg.dispatch
            .get(&id)
            .cloned()
            .or_else(|| self.default_plc.as_ref().map(|addr| DispatchTarget { addr: addr.clone(), db: id as u16, start: 0 }))
    }

    /// Runs the pipeline on one frame with the current configuration,
    /// dispatches changed routes and publishes the new scene.
    pub fn process_frame(&self, frame: Frame) -> anyhow::Result<Arc<Snapshot>> {
        let mut dispatcher = self.pipeline.lock().expect("pipeline lock");
        let cfg = self.config();
        let frame = frame.with_scale(cfg.mm_per_px)?;
        let t0 = Instant::now();
        let mut marks: Vec<(Phase, Instant)> = Vec::with_capacity(3);
        let plan = plan_scene_with(&frame, &cfg, &mut |p| marks.push((p, Instant::now())))?;
        let seq = self.seq.fetch_add(1, Ordering::SeqCst) + 1;

        let td = Instant::now();
        for p in &plan.platforms {
            if p.status != PlatformStatus::Routed {
                continue;
            }
            let Some(target) = self.target(&cfg, p.platform_id) else { continue };
            let payload = match encode_motion(&p.motion) {
                Ok(b) => b,
                Err(e) => {
                    log::warn!("platform {}: route not encodable: {e}", p.platform_id);
                    continue;
                }
            };
            if dispatcher.last.get(&p.platform_id) == Some(&payload) {
                continue;
            }
            let ok = dispatcher.send(p.platform_id, &target, &payload);
            if ok {
                dispatcher.last.insert(p.platform_id, payload);
            }
            dispatcher.log.push(DispatchRecord { frame_seq: seq, platform_id: p.platform_id, ok });
        }
        let end = Instant::now();

        let at = |ph: Phase| marks.iter().find(|(p, _)| *p == ph).map_or(t0, |(_, t)| *t);
        let ms = |a: Instant, b: Instant| b.saturating_duration_since(a).as_secs_f64() * 1000.0;
        let timing = TimingRow {
            vision_ms: ms(t0, at(Phase::Vision)),
            graph_ms: ms(at(Phase::Vision), at(Phase::Graph)),
            route_ms: ms(at(Phase::Graph), at(Phase::Route)),
            dispatch_ms: ms(td, end),
            total_ms: ms(t0, end),
        };
        let state = SceneState { frame_seq: seq, plan, timing };
        let json = serde_json::to_string(&state)?;
        let snap = Arc::new(Snapshot { state, json: json.clone(), frame });
        *self.scene.write().expect("scene lock") = Some(snap.clone());
        let _ = self.events.send(Arc::from(json));
        Ok(snap)
    }

    fn swap_config(&self, f: impl FnOnce(&mut PipelineConfig) -> Result<(), ApiError>) -> Result<(), ApiError> {
        let mut guard = self.config.write().expect("config lock");
        let mut next = (**guard).clone();
        f(&mut next)?;
        next.validate().map_err(|e| ApiError::BadRequest(e.to_string()))?;
        *guard = Arc::new(next);
        Ok(())
    }

    pub fn set_goal(&self, req: GoalRequest) -> Result<(), ApiError> {
        if !(req.x.is_finite() && req.y.is_finite() && req.x >= 0.0 && req.y >= 0.0) {
            return Err(ApiError::BadRequest(format!("goal ({}, {}) is out of bounds", req.x, req.y)));
        }
        if let Some(s) = self.scene() {
            if req.x > (s.frame.width() - 1) as f64 || req.y > (s.frame.height() - 1) as f64 {
                return Err(ApiError::BadRequest(format!(
                    "goal ({}, {}) is outside the {}x{} frame",
                    req.x,
                    req.y,
                    s.frame.width(),
                    s.frame.height()
                )));
            }
        }
        self.swap_config(|c| {
            if !c.platform_ids().contains(&req.platform_id) {
                return Err(ApiError::NotFound(format!("unknown platform {}", req.platform_id)));
            }
            c.goals.insert(req.platform_id, Point::new(req.x, req.y));
            Ok(())
        })
    }

    pub fn set_threshold(&self, req: ThresholdRequest) -> Result<(), ApiError> {
        let range = RgbRange { min: req.min, max: req.max };
        if !range.is_valid() {
            return Err(ApiError::BadRequest("min must not exceed max on any channel".into()));
        }
        self.swap_config(|c| {
            let class = c
                .classes
                .iter_mut()
                .find(|k| k.role == req.role && k.platform_id == req.platform_id)
                .ok_or_else(|| ApiError::NotFound(format!("no {:?} class with platform id {:?}", req.role, req.platform_id)))?;
            class.range = range;
            Ok(())
        })
    }
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/scene", get(get_scene))
        .route("/config", get(get_config))
        .route("/goals", post(post_goal))
        .route("/thresholds", post(post_threshold))
        .route("/frame/annotated", get(get_annotated))
        .route("/events", get(events))
        .with_state(service)
}

fn json_body(s: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], s).into_response()
}

async fn get_scene(State(svc): State<Arc<Service>>) -> Result<Response, ApiError> {
    let snap = svc.scene().ok_or_else(|| ApiError::NotFound("no frame processed yet".into()))?;
    Ok(json_body(snap.json.clone()))
}

async fn get_config(State(svc): State<Arc<Service>>) -> Json<PipelineConfig> {
    Json((*svc.config()).clone())
}

async fn post_goal(State(svc): State<Arc<Service>>, Json(req): Json<GoalRequest>) -> Result<Json<serde_json::Value>, ApiError> {
    svc.set_goal(req)?;
    Ok(Json(serde_json::json!({ "ok": true })))
}

async fn post_threshold(
    State(svc): State<Arc<Service>>,
    Json(req): Json<ThresholdRequest>,
) -> Result<Json<serde_json::Value>, ApiError> {
    svc.set_threshold(req)?;
    Ok(Json(serde_json::json!({ "ok": true })))
}

async fn get_annotated(State(svc): State<Arc<Service>>) -> Result<Response, ApiError> {
    let snap = svc.scene().ok_or_else(|| ApiError::NotFound("no frame processed yet".into()))?;
    let img = encode_p6(&annotate(&snap.frame, &snap.state.plan));
    Ok(([(header::CONTENT_TYPE, "image/x-portable-pixmap")], img).into_response())
}

async fn events(State(svc): State<Arc<Service>>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| push_events(socket, svc))
}

async fn push_events(mut socket: WebSocket, svc: Arc<Service>) {
    let mut rx = svc.subscribe();
    if let Some(s) = svc.scene() {
        if socket.send(Message::Text(s.json.clone().into())).await.is_err() {
            return;
        }
    }
    loop {
        tokio::select! {
            msg = rx.recv() => match msg {
                Ok(json) => {
                    if socket.send(Message::Text(json.to_string().into())).await.is_err() {
                        return;
                    }
                }
                // A slow client skips to the newest scene.
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return,
            },
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => {}
            },
        }
    }
}

/// Background thread feeding mailbox frames into the pipeline.
pub fn spawn_pipeline(service: Arc<Service>, mailbox: Arc<Mailbox>, stop: Arc<AtomicBool>) -> JoinHandle<()> {
    std::thread::spawn(move || {
        while !stop.load(Ordering::SeqCst) {
            if let Some((_, frame)) = mailbox.take(Duration::from_millis(200)) {
                if let Err(e) = service.process_frame(frame) {
                    log::error!("frame dropped: {e:#}");
                }
            }
        }
    })
}

pub struct ServeOptions {
    pub listen: SocketAddr,
    pub ingest: SocketAddr,
    pub plc: Option<String>,
    pub input: Option<PathBuf>,
}

/// Runs ingest, pipeline and HTTP API until Ctrl-C.
pub async fn serve(config: PipelineConfig, opts: ServeOptions) -> anyhow::Result<()> {
    let mm = config.mm_per_px;
    let service = Service::new(config, opts.plc)?;
    let mailbox = Arc::new(Mailbox::new());
    let stop = Arc::new(AtomicBool::new(false));
    let mut ingest = FrameServer::bind(opts.ingest, Arc::new(StandardDecoder { mm_per_px: mm }), mailbox.clone())?;
    log::info!("frame ingest on {}", ingest.local_addr());
    let worker = spawn_pipeline(service.clone(), mailbox.clone(), stop.clone());

    if let Some(input) = opts.input {
        let svc = service.clone();
        std::thread::spawn(move || match file_source(&input) {
            Ok(files) => {
                for (path, r) in files {
                    match r.map_err(anyhow::Error::from).and_then(|f| svc.process_frame(f)) {
                        Ok(s) => log::info!("{}: frame {}", path.display(), s.state.frame_seq),
                        Err(e) => log::error!("{}: {e:#}", path.display()),
                    }
                }
            }
            Err(e) => log::error!("cannot read {}: {e}", input.display()),
        });
    }

    let listener = tokio::net::TcpListener::bind(opts.listen).await?;
    log::info!("HTTP API on {}", listener.local_addr()?);
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    stop.store(true, Ordering::SeqCst);
    mailbox.close();
    ingest.shutdown();
    let _ = worker.join();
    Ok(())
}
