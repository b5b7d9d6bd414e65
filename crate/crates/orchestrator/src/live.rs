use std::collections::HashMap;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender, SyncSender};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use empathd_appsim::{synthesize_latency, wait_until, AppScreen, LatencyPolicy, Scenario, Stage};
use empathd_core::meshgen::MeshParams;
use empathd_core::model::io::RgbdSequence;
use empathd_wire::{
    scale_display, AudioChunk, ConfigUpdate, DiffGate, FrameUpdate, MeshUpdate, MessageReader,
    PoseUpdate, RenderAck, SeqTracker, TouchAction, TouchEvent, WireMessage,
};

use crate::clock::{Clock, ClockOffset};
use crate::handpath::{HandTracker, PoseSource};
use crate::link::{connect_with_backoff, is_disconnect, is_timeout, sync_clock, Backoff, Outbox};
use crate::profile::ProfileStore;
use crate::relay::DelayRelay;
use crate::report::{LatencyReport, LinkState, Metric, Recorder};
use crate::sink::{ACK_FRAME, ACK_MESH};
use crate::{Error, PipelineConfig, Result};

const POLL: Duration = Duration::from_millis(5);
const READ_TIMEOUT: Duration = Duration::from_millis(50);
const SYNC_TIMEOUT: Duration = Duration::from_secs(10);

/// Source of RGB-D frames for the hand path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HandFeed {
    Off,
    /// Replay the sequence once at its capture pace.
    Continuous(PathBuf),
    /// Process one frame per `trigger_hand` call, cycling through the
    /// sequence.
    Triggered(PathBuf),
}

#[derive(Debug, Clone)]
pub struct LiveOptions {
    pub scenario: Scenario,
    pub agent_listen: SocketAddr,
    pub sink_addr: SocketAddr,
    pub profile: ProfileStore,
    pub recorder: Arc<Recorder>,
    pub mesh: MeshParams,
    pub pose_smoothing: Option<f64>,
    pub hand: HandFeed,
    pub backoff: Backoff,
}

impl LiveOptions {
    pub fn new(scenario: Scenario, agent_listen: SocketAddr, sink_addr: SocketAddr) -> Self {
        LiveOptions {
            scenario,
            agent_listen,
            sink_addr,
            profile: ProfileStore::default(),
            recorder: Arc::new(Recorder::new()),
            mesh: MeshParams::default(),
            pose_smoothing: None,
            hand: HandFeed::Off,
            backoff: Backoff::default(),
        }
    }
}

/// Result of one triggered hand frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandTrial {
    /// Mesh sent with this sequence number.
    Sent(u64),
    /// No pose was available; nothing sent.
    Skipped,
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    origin: Option<u64>,
    sent: u64,
}

struct Inbound {
    event: TouchEvent,
    received: Instant,
    origin: u64,
}

#[derive(Default)]
struct Flag {
    value: Mutex<bool>,
    cv: Condvar,
}

impl Flag {
    fn set(&self, v: bool) {
        *self.value.lock().unwrap() = v;
        self.cv.notify_all();
    }

    fn wait(&self, timeout: Duration) -> bool {
        let g = self.value.lock().unwrap();
        let (g, _) = self.cv.wait_timeout_while(g, timeout, |v| !*v).unwrap();
        *g
    }
}

struct Shared {
    clock: Clock,
    policy: LatencyPolicy,
    rec: Arc<Recorder>,
    profile: ProfileStore,
    stop: AtomicBool,
    sink: Outbox,
    sink_ready: Flag,
    sink_offset: Mutex<Option<ClockOffset>>,
    pending: Mutex<HashMap<(u8, u64), Pending>>,
    /// Highest acknowledged sequence number per stream.
    acked: Mutex<HashMap<u8, u64>>,
    ack_cv: Condvar,
    ack_counts: Mutex<HashMap<u8, u64>>,
    last_frame: Mutex<Option<FrameUpdate>>,
    forwarded_version: AtomicU64,
}

impl Shared {
    fn stopped(&self) -> bool {
        self.stop.load(Ordering::SeqCst)
    }

    fn send_to_sink(&self, msg: &WireMessage) {
        if let Err(e) = self.sink.send(msg) {
            log::warn!("{} not delivered: {e}", msg.kind());
        }
    }

    fn forward_config(&self) {
        let snap = self.profile.snapshot();
        if snap.version == self.forwarded_version.load(Ordering::SeqCst) || !self.sink.is_up() {
            return;
        }
        let json = serde_json::to_vec(&snap.profile).expect("profile serialises");
        if self.sink.send(&WireMessage::Config(ConfigUpdate { profile_json: json })).is_ok() {
            self.forwarded_version.store(snap.version, Ordering::SeqCst);
            log::info!("profile version {} forwarded to sink", snap.version);
        }
    }
}

/// Orchestrator tier of a live run: accepts the IO agent, drives the app,
/// streams updates to the sink and attributes latency from render acks.
pub struct LiveEngine {
    sh: Arc<Shared>,
    agent_addr: SocketAddr,
    threads: Vec<JoinHandle<()>>,
    trigger: Option<Sender<SyncSender<Result<HandTrial>>>>,
    _relay: Option<DelayRelay>,
}

impl LiveEngine {
    pub fn start(opts: LiveOptions) -> Result<Self> {
        let scenario = opts.scenario.clone();
        let policy = synthesize_latency(scenario.stage_delays_ms)?;
        let listener = TcpListener::bind(opts.agent_listen)
            .map_err(|e| Error::Config(format!("cannot listen on {}: {e}", opts.agent_listen)))?;
        listener.set_nonblocking(true)?;
        let agent_addr = listener.local_addr()?;
        let hand_seq = match &opts.hand {
            HandFeed::Off => None,
            HandFeed::Continuous(d) | HandFeed::Triggered(d) => {
                let seq = RgbdSequence::open(d)?;
                if seq.is_empty() {
                    return Err(Error::Config(format!("no frames in {}", d.display())));
                }
                Some(seq)
            }
        };

        let relay = match policy.delays.network {
            ms if ms > 0.0 => Some(DelayRelay::spawn(
                opts.sink_addr,
                Duration::from_secs_f64(ms / 1000.0),
            )?),
            _ => None,
        };
        let sink_target = relay.as_ref().map_or(opts.sink_addr, |r| r.local_addr());

        let sh = Arc::new(Shared {
            clock: Clock::new(),
            policy,
            rec: opts.recorder.clone(),
            profile: opts.profile.clone(),
            stop: AtomicBool::new(false),
            sink: Outbox::new(),
            sink_ready: Flag::default(),
            sink_offset: Mutex::new(None),
            pending: Mutex::new(HashMap::new()),
            acked: Mutex::new(HashMap::new()),
            ack_cv: Condvar::new(),
            ack_counts: Mutex::new(HashMap::new()),
            last_frame: Mutex::new(None),
            forwarded_version: AtomicU64::new(0),
        });
        sh.rec.set_link("agent", LinkState::Down);
        sh.rec.set_link("sink", LinkState::Down);

        let mut threads = Vec::new();
        let spawn = |name: &str, f: Box<dyn FnOnce() + Send>| {
            thread::Builder::new().name(name.into()).spawn(f)
        };
        let (tx, rx) = mpsc::channel();
        {
            let sh = sh.clone();
            let backoff = opts.backoff;
            threads.push(spawn("sink-link", Box::new(move || sink_link(&sh, sink_target, backoff)))?);
        }
        {
            let sh = sh.clone();
            threads.push(spawn("agent-accept", Box::new(move || agent_acceptor(&sh, listener, tx)))?);
        }
        {
            let sh = sh.clone();
            threads.push(spawn("emulation", Box::new(move || emulation_loop(&sh, &scenario, rx)))?);
        }
        let mut trigger = None;
        if let Some(seq) = hand_seq {
            let mut tracker = HandTracker::new(opts.mesh);
            tracker.smoothing = opts.pose_smoothing;
            let sh = sh.clone();
            let cam = Camera {
                seq,
                tracker,
                next: 0,
                pose_seq: 0,
                mesh_seq: 0,
            };
            let body: Box<dyn FnOnce() + Send> = match opts.hand {
                HandFeed::Triggered(_) => {
                    let (ttx, trx) = mpsc::channel();
                    trigger = Some(ttx);
                    Box::new(move || triggered_camera(&sh, cam, trx))
                }
                _ => Box::new(move || continuous_camera(&sh, cam)),
            };
            threads.push(spawn("camera", body)?);
        }
        Ok(LiveEngine {
            sh,
            agent_addr,
            threads,
            trigger,
            _relay: relay,
        })
    }

    pub fn agent_addr(&self) -> SocketAddr {
        self.agent_addr
    }

    pub fn recorder(&self) -> &Arc<Recorder> {
        &self.sh.rec
    }

    /// Waits until the sink is synchronised and has displayed the initial
    /// frame.
    pub fn wait_ready(&self, timeout: Duration) -> Result<()> {
        let deadline = Instant::now() + timeout;
        if !self.sh.sink_ready.wait(timeout) {
            return Err(Error::Runtime("sink link did not come up".into()));
        }
        if !self.wait_for_ack(ACK_FRAME, 0, deadline.saturating_duration_since(Instant::now())) {
            return Err(Error::Runtime("initial frame was not displayed".into()));
        }
        Ok(())
    }

    /// Whether the sink has displayed `stream` update `seq` (or a later one)
    /// within `timeout`.
    pub fn wait_for_ack(&self, stream: u8, seq: u64, timeout: Duration) -> bool {
        let g = self.sh.acked.lock().unwrap();
        let (g, _) = self
            .sh
            .ack_cv
            .wait_timeout_while(g, timeout, |m| m.get(&stream).is_none_or(|&s| s < seq))
            .unwrap();
        g.get(&stream).is_some_and(|&s| s >= seq)
    }

    /// Acknowledgements received for `stream`.
    pub fn acks(&self, stream: u8) -> u64 {
        self.sh.ack_counts.lock().unwrap().get(&stream).copied().unwrap_or(0)
    }

    /// Runs the hand path on the next camera frame.
    pub fn trigger_hand(&self, timeout: Duration) -> Result<HandTrial> {
        let tx = self
            .trigger
            .as_ref()
            .ok_or_else(|| Error::Config("hand feed is not in triggered mode".into()))?;
        let (rtx, rrx) = mpsc::sync_channel(1);
        tx.send(rtx).map_err(|_| Error::Runtime("camera worker stopped".into()))?;
        rrx.recv_timeout(timeout)
            .map_err(|_| Error::Runtime("hand frame timed out".into()))?
    }

    pub fn report(&self) -> LatencyReport {
        self.sh.rec.report()
    }

    pub fn stop(mut self) -> LatencyReport {
        self.shutdown();
        self.sh.rec.report()
    }

    fn shutdown(&mut self) {
        self.sh.stop.store(true, Ordering::SeqCst);
        self.trigger = None;
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
        self.sh.sink.close();
    }
}

impl Drop for LiveEngine {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn sink_link(sh: &Shared, target: SocketAddr, backoff: Backoff) {
    let mut connected_before = false;
    while !sh.stopped() {
        let stream = match connect_with_backoff(target, backoff, None, &sh.stop) {
            Ok(s) => s,
            Err(e) => {
                log::debug!("sink link: {e}");
                break;
            }
        };
        let session = (|| -> Result<MessageReader<TcpStream>> {
            stream.set_read_timeout(Some(READ_TIMEOUT))?;
            sh.sink.attach(stream.try_clone()?);
            let mut reader = MessageReader::new(stream);
            let off = sync_clock(&mut reader, &sh.sink, &sh.clock, SYNC_TIMEOUT)?;
            *sh.sink_offset.lock().unwrap() = Some(off);
            Ok(reader)
        })();
        let mut reader = match session {
            Ok(r) => r,
            Err(e) => {
                log::warn!("sink link: {e}");
                sh.sink.close();
                thread::sleep(backoff.initial);
                continue;
            }
        };
        if connected_before {
            sh.rec.bump(|c| c.reconnects += 1);
            sh.forwarded_version.store(0, Ordering::SeqCst);
            sh.forward_config();
            if let Some(f) = sh.last_frame.lock().unwrap().clone() {
                sh.send_to_sink(&WireMessage::Frame(f));
            }
        }
        connected_before = true;
        sh.rec.set_link("sink", LinkState::Up);
        sh.sink_ready.set(true);
        log::info!("sink link up via {target}");

        read_acks(sh, &mut reader);

        sh.sink_ready.set(false);
        sh.sink.close();
        sh.rec.set_link("sink", LinkState::Down);
        if !sh.stopped() {
            log::warn!("sink link down, reconnecting");
        }
    }
}

fn read_acks(sh: &Shared, reader: &mut MessageReader<TcpStream>) {
    let mut gaps = SeqTracker::default();
    while !sh.stopped() {
        match reader.read_message() {
            Ok(Some(WireMessage::RenderAck(a))) => {
                let dropped = gaps.observe(a.stream, a.seq);
                if dropped > 0 {
                    sh.rec.bump(|c| c.frames_dropped += dropped);
                }
                on_ack(sh, &a);
            }
            Ok(Some(WireMessage::Pong(_))) => {}
            Ok(Some(other)) => log::debug!("sink sent unexpected {}", other.kind()),
            Ok(None) => return,
            Err(e) if is_timeout(&e) => {}
            Err(e) if is_disconnect(&e) => return,
            Err(e) => {
                log::warn!("protocol error from sink: {e}; resetting");
                sh.rec.bump(|c| c.protocol_resets += 1);
                return;
            }
        }
    }
}

fn on_ack(sh: &Shared, a: &RenderAck) {
    let off = sh.sink_offset.lock().unwrap().expect("synchronised before acks");
    let pending = {
        let mut p = sh.pending.lock().unwrap();
        let hit = p.remove(&(a.stream, a.seq));
        p.retain(|&(s, q), _| s != a.stream || q > a.seq);
        hit
    };
    let ms = |us: i64| us as f64 / 1e3;
    // Updates without an origin (initial frame, replays after reconnect)
    // stay out of the stage statistics.
    if let Some(Pending { origin: Some(origin), sent }) = pending {
        sh.rec
            .record(Metric::Stage(Stage::Network), ms(off.to_local(a.t_recv_micros) - sent as i64));
        sh.rec.record(
            Metric::Stage(Stage::SinkRender),
            ms(a.t_displayed_micros as i64 - a.t_recv_micros as i64),
        );
        {
            let metric = if a.stream == ACK_MESH {
                Metric::EndToEndHand
            } else {
                Metric::EndToEndTouch
            };
            sh.rec.record(metric, ms(off.to_local(a.t_displayed_micros) - origin as i64));
        }
    }
    *sh.ack_counts.lock().unwrap().entry(a.stream).or_default() += 1;
    let mut acked = sh.acked.lock().unwrap();
    let e = acked.entry(a.stream).or_insert(a.seq);
    *e = (*e).max(a.seq);
    sh.ack_cv.notify_all();
}

fn agent_acceptor(sh: &Shared, listener: TcpListener, tx: Sender<Inbound>) {
    while !sh.stopped() {
        match listener.accept() {
            Ok((stream, peer)) => {
                log::info!("IO agent connected from {peer}");
                if let Err(e) = serve_agent(sh, stream, &tx) {
                    log::warn!("agent session ended: {e}");
                }
                sh.rec.set_link("agent", LinkState::Down);
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => thread::sleep(POLL),
            Err(e) => {
                log::warn!("agent accept: {e}");
                thread::sleep(Duration::from_millis(20));
            }
        }
    }
}

fn serve_agent(sh: &Shared, stream: TcpStream, tx: &Sender<Inbound>) -> Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_nodelay(true)?;
    stream.set_read_timeout(Some(READ_TIMEOUT))?;
    let out = Outbox::new();
    out.attach(stream.try_clone()?);
    let mut reader = MessageReader::new(stream);
    let result = (|| {
        let off = match sync_clock(&mut reader, &out, &sh.clock, SYNC_TIMEOUT) {
            Err(Error::Wire(e)) if e.requires_reset() => {
                sh.rec.bump(|c| c.protocol_resets += 1);
                return Err(Error::Wire(e));
            }
            other => other?,
        };
        sh.rec.set_link("agent", LinkState::Up);
        let mut seqs = SeqTracker::default();
        while !sh.stopped() {
            let msg = match reader.read_message() {
                Ok(Some(m)) => m,
                Ok(None) => return Ok(()),
                Err(e) if is_timeout(&e) => continue,
                Err(e) if is_disconnect(&e) => return Ok(()),
                Err(e) => {
                    sh.rec.bump(|c| c.protocol_resets += 1);
                    return Err(e.into());
                }
            };
            if let Some(seq) = msg.seq() {
                let g = seqs.observe(msg.type_id(), seq);
                sh.rec.bump(|c| c.seq_gaps += g);
            }
            match msg {
                WireMessage::Touch(event) => {
                    let received = Instant::now();
                    let origin = off.to_local(event.t_micros).max(0) as u64;
                    let fwd = sh.clock.micros_at(received).saturating_sub(origin);
                    sh.rec.record(Metric::Stage(Stage::IoEventForward), fwd as f64 / 1e3);
                    let _ = tx.send(Inbound {
                        event,
                        received,
                        origin,
                    });
                }
                WireMessage::Motion(_) => {}
                other => log::debug!("agent sent unexpected {}", other.kind()),
            }
        }
        Ok(())
    })();
    out.close();
    result
}

struct Emulator<'a> {
    sh: &'a Shared,
    scenario: &'a Scenario,
    app: AppScreen,
    gate: DiffGate,
    audio_seq: u64,
}

impl Emulator<'_> {
    /// Renders the app and sends it if it changed. `touch` carries the
    /// triggering touch's origin time and arrival instant.
    fn emit(&mut self, touch: Option<(u64, Instant)>) {
        let sh = self.sh;
        let img = scale_display(&self.app.render(), &self.scenario.display_config).image;
        let te = Instant::now();
        let update = match self.gate.offer(&img, 0) {
            Ok(u) => u,
            Err(e) => {
                log::error!("frame encode failed: {e}");
                return;
            }
        };
        let encode = te.elapsed();
        let Some(mut frame) = update else {
            sh.rec.bump(|c| c.frames_suppressed += 1);
            return;
        };
        if let Some((_, received)) = touch {
            sh.rec.stage(Stage::FrameEncode, encode);
            let d = sh.policy.pad(Stage::Emulation, received);
            sh.rec.stage(Stage::Emulation, d);
        }
        frame.t_micros = sh.clock.now_micros();
        sh.pending.lock().unwrap().insert(
            (ACK_FRAME, frame.seq),
            Pending {
                origin: touch.map(|t| t.0),
                sent: frame.t_micros,
            },
        );
        sh.rec.bump(|c| c.frames_emitted += 1);
        *sh.last_frame.lock().unwrap() = Some(frame.clone());
        sh.send_to_sink(&WireMessage::Frame(frame));
    }

    fn flush_audio(&mut self) {
        for buf in self.app.take_audio() {
            let chunk = AudioChunk {
                seq: self.audio_seq,
                t_micros: self.sh.clock.now_micros(),
                sample_rate_hz: buf.sample_rate_hz,
                samples: buf.samples,
            };
            self.audio_seq += 1;
            self.sh.send_to_sink(&WireMessage::Audio(chunk));
        }
    }
}

fn emulation_loop(sh: &Shared, scenario: &Scenario, rx: Receiver<Inbound>) {
    while !sh.sink_ready.wait(Duration::from_millis(50)) {
        if sh.stopped() {
            return;
        }
    }
    let mut emu = Emulator {
        sh,
        scenario,
        app: scenario.build_app(),
        gate: DiffGate::new(),
        audio_seq: 0,
    };
    sh.forward_config();
    emu.emit(None);
    while !sh.stopped() {
        sh.forward_config();
        let inbound = match rx.recv_timeout(POLL) {
            Ok(i) => i,
            Err(RecvTimeoutError::Timeout) => continue,
            Err(RecvTimeoutError::Disconnected) => break,
        };
        sh.rec.bump(|c| c.touches_received += 1);
        if inbound.event.action == TouchAction::Up {
            sh.rec.bump(|c| c.up_events += 1);
        }
        if emu.app.handle_touch(&inbound.event).changed {
            emu.emit(Some((inbound.origin, inbound.received)));
        }
        emu.flush_audio();
    }
}

struct Camera {
    seq: RgbdSequence,
    tracker: HandTracker,
    next: usize,
    pose_seq: u64,
    mesh_seq: u64,
}

impl Camera {
    fn step(&mut self, sh: &Shared) -> Result<HandTrial> {
        let n = self.next % self.seq.len();
        self.next += 1;
        let t0 = Instant::now();
        let origin = sh.clock.micros_at(t0);
        let frame = self.seq.load(n)?;
        sh.rec.stage(Stage::RgbdRead, sh.policy.pad(Stage::RgbdRead, t0));
        let Some(hand) = self.tracker.process(&frame, &sh.policy)? else {
            log::warn!("camera frame {n}: no phone pose yet, skipped");
            sh.rec.bump(|c| c.frames_skipped += 1);
            return Ok(HandTrial::Skipped);
        };
        if hand.source == PoseSource::Reused {
            sh.rec.bump(|c| c.pose_dropouts += 1);
        }
        sh.rec.stage(Stage::PhoneTracking, hand.phone_tracking);
        sh.rec.stage(Stage::HandTracking, hand.hand_tracking);
        sh.rec.stage(Stage::MeshBuild, hand.mesh_build);

        let t = hand.pose.translation;
        sh.send_to_sink(&WireMessage::Pose(PoseUpdate {
            seq: self.pose_seq,
            t_micros: sh.clock.now_micros(),
            translation: [t.x, t.y, t.z],
            rotation: hand.pose.rotation_row_major(),
        }));
        self.pose_seq += 1;

        let payload = hand.mesh.to_json()?;
        let seq = self.mesh_seq;
        self.mesh_seq += 1;
        let sent = sh.clock.now_micros();
        sh.pending.lock().unwrap().insert(
            (ACK_MESH, seq),
            Pending {
                origin: Some(origin),
                sent,
            },
        );
        sh.send_to_sink(&WireMessage::Mesh(MeshUpdate {
            seq,
            t_micros: sent,
            payload,
        }));
        Ok(HandTrial::Sent(seq))
    }
}

fn triggered_camera(sh: &Shared, mut cam: Camera, rx: Receiver<SyncSender<Result<HandTrial>>>) {
    while !sh.stopped() {
        match rx.recv_timeout(Duration::from_millis(50)) {
            Ok(reply) => {
                let _ = reply.send(cam.step(sh));
            }
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => return,
        }
    }
}

fn continuous_camera(sh: &Shared, mut cam: Camera) {
    while !sh.sink_ready.wait(Duration::from_millis(50)) {
        if sh.stopped() {
            return;
        }
    }
    let base = Instant::now();
    let first = cam.seq.timestamp(0).unwrap_or(0);
    for n in 0..cam.seq.len() {
        let ts = cam.seq.timestamp(n).unwrap_or(0);
        wait_until(base + Duration::from_micros(ts.saturating_sub(first)));
        if sh.stopped() {
            return;
        }
        if let Err(e) = cam.step(sh) {
            log::error!("camera frame {n}: {e}");
        }
    }
    log::info!("camera sequence finished");
}

/// Runs the orchestrator tier until `stop` is raised, then writes the
/// report.
pub fn run_live(cfg: &PipelineConfig, stop: &AtomicBool) -> Result<LatencyReport> {
    cfg.validate()?;
    let scenario = cfg.load_scenario()?;
    let profile = ProfileStore::new(cfg.load_profile()?)
        .map_err(|_| Error::Config("invalid profile".into()))?;
    let sink_addr = resolve(&cfg.sink_host, cfg.ports.sink)?;
    let mut opts = LiveOptions::new(
        scenario.clone(),
        SocketAddr::from(([0, 0, 0, 0], cfg.ports.agent)),
        sink_addr,
    );
    opts.profile = profile;
    opts.mesh = cfg.mesh;
    opts.pose_smoothing = cfg.pose_smoothing;
    if let Some(dir) = cfg.frames_dir(&scenario) {
        opts.hand = HandFeed::Continuous(dir);
    }
    let engine = LiveEngine::start(opts)?;
    log::info!("orchestrator listening for the IO agent on {}", engine.agent_addr());
    while !stop.load(Ordering::SeqCst) {
        thread::sleep(Duration::from_millis(50));
    }
    let report = engine.stop();
    std::fs::create_dir_all(&cfg.out)?;
    report.write_json(&cfg.report_path())?;
    Ok(report)
}

pub fn resolve(host: &str, port: u16) -> Result<SocketAddr> {
    use std::net::ToSocketAddrs;
    (host, port)
        .to_socket_addrs()
        .map_err(|e| Error::Config(format!("cannot resolve {host}:{port}: {e}")))?
        .next()
        .ok_or_else(|| Error::Config(format!("{host}:{port} resolves to nothing")))
}
