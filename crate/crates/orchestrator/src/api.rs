use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use arc_swap::ArcSwapOption;
use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use empathd_appsim::{render_chart, Scenario};
use empathd_core::impairments::apply_visual;
use empathd_core::meshgen::MeshParams;
use empathd_core::model::io::RgbdSequence;
use empathd_core::scenegen::{orbit_specs, render, HandSpec, OrbitConfig};
use empathd_core::model::Violation;
use empathd_core::{CameraIntrinsics, ImpairmentProfile, RgbdFrame};
use serde::Serialize;
use tokio::sync::broadcast;

use crate::offline::{FrameTiming, OfflinePipeline};
use crate::profile::ProfileStore;
use crate::report::{Counters, Recorder};
use crate::{Error, Result};

/// Samples kept per metric for `/api/stats`.
pub const STATS_WINDOW: usize = 200;
pub const MAX_FONT_SP: f64 = 200.0;
const PREVIEW_PERIOD: Duration = Duration::from_millis(100);

/// Latest composited frame, PNG encoded before and after impairment.
#[derive(Debug, Clone)]
pub struct Preview {
    pub seq: u64,
    pub profile_version: u64,
    pub filtered_png: Vec<u8>,
    pub raw_png: Vec<u8>,
}

/// One `/api/stream` message.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StreamEvent {
    pub frame_seq: u64,
    pub profile_version: u64,
    /// Stage timings of this frame only.
    pub timing: FrameTiming,
    pub counters: Counters,
}

/// State shared between the preview worker and the HTTP handlers.
#[derive(Clone)]
pub struct ApiState {
    pub profile: ProfileStore,
    pub recorder: Arc<Recorder>,
    pub preview: Arc<ArcSwapOption<Preview>>,
    pub events: broadcast::Sender<StreamEvent>,
}

impl ApiState {
    pub fn new(profile: ProfileStore, recorder: Arc<Recorder>) -> Self {
        ApiState {
            profile,
            recorder,
            preview: Arc::new(ArcSwapOption::empty()),
            events: broadcast::channel(64).0,
        }
    }

    /// Installs a new preview and notifies stream subscribers.
    pub fn publish(&self, preview: Preview, timing: FrameTiming) {
        let event = StreamEvent {
            frame_seq: preview.seq,
            profile_version: preview.profile_version,
            timing,
            counters: self.recorder.counters(),
        };
        self.preview.store(Some(Arc::new(preview)));
        let _ = self.events.send(event);
    }
}

pub fn router(state: ApiState) -> Router {
    Router::new()
        .route("/api/profile", get(get_profile).put(put_profile))
        .route("/api/preview.png", get(preview_filtered))
        .route("/api/preview/raw.png", get(preview_raw))
        .route("/api/stats", get(stats))
        .route("/api/calibration/chart.png", get(chart))
        .route("/api/stream", get(stream))
        .with_state(state)
}

#[derive(Serialize)]
struct Violations {
    violations: Vec<Violation>,
}

fn unprocessable(violations: Vec<Violation>) -> Response {
    (StatusCode::UNPROCESSABLE_ENTITY, Json(Violations { violations })).into_response()
}

fn png(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

async fn get_profile(State(st): State<ApiState>) -> Response {
    Json(st.profile.snapshot().as_ref().clone()).into_response()
}

async fn put_profile(State(st): State<ApiState>, body: Bytes) -> Response {
    let profile: ImpairmentProfile = match serde_json::from_slice(&body) {
        Ok(p) => p,
        Err(e) => {
            return unprocessable(vec![Violation {
                field: "body".into(),
                rule: e.to_string(),
            }])
        }
    };
    match st.profile.update(profile) {
        Ok(v) => {
            log::info!("profile version {v} applied");
            Json(st.profile.snapshot().as_ref().clone()).into_response()
        }
        Err(v) => unprocessable(v),
    }
}

async fn preview_filtered(State(st): State<ApiState>) -> Response {
    match st.preview.load_full() {
        Some(p) => png(p.filtered_png.clone()),
        None => (StatusCode::NOT_FOUND, "no frame composited yet").into_response(),
    }
}

async fn preview_raw(State(st): State<ApiState>) -> Response {
    match st.preview.load_full() {
        Some(p) => png(p.raw_png.clone()),
        None => (StatusCode::NOT_FOUND, "no frame composited yet").into_response(),
    }
}

async fn stats(State(st): State<ApiState>) -> Response {
    Json(st.recorder.report()).into_response()
}

async fn chart(State(st): State<ApiState>, Query(q): Query<HashMap<String, String>>) -> Response {
    let font_sp = match q.get("fontSp").map(|s| s.parse::<f64>()) {
        None => 12.0,
        Some(Ok(v)) if v.is_finite() && v > 0.0 && v <= MAX_FONT_SP => v,
        Some(_) => {
            return (
                StatusCode::BAD_REQUEST,
                format!("fontSp must be a number in (0, {MAX_FONT_SP}]"),
            )
                .into_response()
        }
    };
    let profile = st.profile.snapshot();
    let encoded = tokio::task::spawn_blocking(move || {
        let (img, _) = render_chart(font_sp);
        apply_visual(&img, &profile.profile).encode_png()
    })
    .await;
    match encoded {
        Ok(Ok(bytes)) => png(bytes),
        Ok(Err(e)) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

async fn stream(State(st): State<ApiState>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| push_events(socket, st.events.subscribe()))
}

async fn push_events(mut socket: WebSocket, mut rx: broadcast::Receiver<StreamEvent>) {
    loop {
        let event = match rx.recv().await {
            Ok(e) => e,
            Err(broadcast::error::RecvError::Lagged(n)) => {
                log::debug!("stream client lagged by {n} events");
                continue;
            }
            Err(broadcast::error::RecvError::Closed) => return,
        };
        let text = serde_json::to_string(&event).expect("event serialises");
        if socket.send(Message::Text(text.into())).await.is_err() {
            return;
        }
    }
}

/// Frames fed to the preview loop.
pub enum PreviewSource {
    Sequence(RgbdSequence),
    Memory(Vec<RgbdFrame>),
}

impl PreviewSource {
    pub fn open(dir: Option<&Path>) -> Result<Self> {
        match dir {
            Some(d) => {
                let seq = RgbdSequence::open(d)?;
                if seq.is_empty() {
                    return Err(Error::Config(format!("no frames in {}", d.display())));
                }
                Ok(PreviewSource::Sequence(seq))
            }
            None => Ok(PreviewSource::Memory(synthetic_orbit(24)?)),
        }
    }

    fn len(&self) -> usize {
        match self {
            PreviewSource::Sequence(s) => s.len(),
            PreviewSource::Memory(v) => v.len(),
        }
    }

    fn intrinsics(&self) -> CameraIntrinsics {
        match self {
            PreviewSource::Sequence(s) => s.intrinsics,
            PreviewSource::Memory(v) => v[0].intrinsics,
        }
    }

    fn load(&self, n: usize) -> Result<RgbdFrame> {
        match self {
            PreviewSource::Sequence(s) => Ok(s.load(n)?),
            PreviewSource::Memory(v) => Ok(v[n].clone()),
        }
    }
}

/// Small camera sweep with a hand over the screen, for running the
/// dashboard without a recorded sequence.
pub fn synthetic_orbit(frames: usize) -> Result<Vec<RgbdFrame>> {
    let cfg = OrbitConfig {
        frames,
        yaw_deg: [-15.0, 15.0],
        distance_m: [0.28, 0.34],
        hand: Some(HandSpec::open_hand([0.0, -0.02], 0.6, 0.2, 0.01)),
        intrinsics: CameraIntrinsics::centred(320, 240, 300.0),
        ..Default::default()
    };
    orbit_specs(&cfg)
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let (mut f, _) = render(spec)?;
            f.timestamp = i as u64 * 100_000;
            Ok(f)
        })
        .collect()
}

/// Composites frames in a loop, each under one profile snapshot, and
/// publishes them to `state`.
pub struct PreviewWorker {
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl PreviewWorker {
    pub fn spawn(scenario: &Scenario, source: PreviewSource, mesh: MeshParams, state: ApiState) -> Result<Self> {
        let mut pipeline = OfflinePipeline::new(scenario, source.intrinsics(), mesh)?;
        let stop = Arc::new(AtomicBool::new(false));
        let flag = stop.clone();
        let thread = thread::Builder::new().name("preview".into()).spawn(move || {
            let mut seq = 0u64;
            let mut n = 0usize;
            while !flag.load(Ordering::SeqCst) {
                let started = Instant::now();
                let snap = state.profile.snapshot();
                let idx = n % source.len();
                n += 1;
                match pipeline.step(idx, || source.load(idx), &snap.profile, &state.recorder) {
                    Ok(Some(res)) => match (res.filtered.encode_png(), res.raw.encode_png()) {
                        (Ok(filtered_png), Ok(raw_png)) => {
                            state.publish(
                                Preview {
                                    seq,
                                    profile_version: snap.version,
                                    filtered_png,
                                    raw_png,
                                },
                                res.timing,
                            );
                            seq += 1;
                        }
                        (Err(e), _) | (_, Err(e)) => log::error!("preview encode: {e}"),
                    },
                    Ok(None) => {}
                    Err(e) => log::error!("preview frame {idx}: {e}"),
                }
                if let Some(rest) = PREVIEW_PERIOD.checked_sub(started.elapsed()) {
                    thread::sleep(rest);
                }
            }
        })?;
        Ok(PreviewWorker {
            stop,
            thread: Some(thread),
        })
    }
}

impl Drop for PreviewWorker {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub port: u16,
    pub scenario: PathBuf,
    pub profile: Option<PathBuf>,
    /// Overrides the scenario's `frames`.
    pub frames: Option<PathBuf>,
}

/// Serves the dashboard API until `stop` is raised.
pub fn run_serve(opts: &ServeOptions, stop: Arc<AtomicBool>) -> Result<()> {
    let scenario = Scenario::load(&opts.scenario)?;
    let profile = match &opts.profile {
        Some(p) => empathd_core::model::io::load_profile(p)?,
        None => ImpairmentProfile::default(),
    };
    let store = ProfileStore::new(profile).map_err(|v| {
        let list: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        Error::Config(format!("invalid profile: {}", list.join("; ")))
    })?;
    let state = ApiState::new(store, Arc::new(Recorder::with_window(STATS_WINDOW)));
    let frames = opts.frames.clone().or_else(|| scenario.frames.clone());
    let source = PreviewSource::open(frames.as_deref())?;
    let _worker = PreviewWorker::spawn(&scenario, source, MeshParams::default(), state.clone())?;

    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    rt.block_on(async move {
        let addr = SocketAddr::from(([0, 0, 0, 0], opts.port));
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Error::Config(format!("cannot listen on {addr}: {e}")))?;
        log::info!("dashboard API on http://{}", listener.local_addr()?);
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async move {
                while !stop.load(Ordering::SeqCst) {
                    tokio::time::sleep(Duration::from_millis(100)).await;
                }
            })
            .await?;
        Ok(())
    })
}
