use std::collections::VecDeque;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use empathd_appsim::{synthesize_latency, LatencyPolicy, Stage, StageDelays};
use empathd_core::impairments::{apply_audio, apply_mesh, apply_visual, AudioBuffer};
use empathd_core::meshgen::HandMesh;
use empathd_core::{ColorImage, ImpairmentProfile, Pose};
use empathd_wire::{
    FrameUpdate, MeshUpdate, MessageReader, Pong, RenderAck, SeqTracker, WireMessage,
};

use crate::clock::Clock;
use crate::link::{is_disconnect, is_timeout, Outbox};
use crate::profile::ProfileStore;
use crate::report::Recorder;
use crate::{Error, Result};

pub const DEFAULT_QUEUE_DEPTH: usize = 3;
/// `RenderAck::stream` values: the acknowledged message's type id.
pub const ACK_FRAME: u8 = 3;
pub const ACK_MESH: u8 = 6;

#[derive(Debug, Clone)]
pub struct SinkOptions {
    pub delays: StageDelays,
    pub queue_depth: usize,
    /// Displayed frames are written here as PNG when set.
    pub out_dir: Option<PathBuf>,
    /// Receives sink-side stage samples (impairment time).
    pub recorder: Option<Arc<Recorder>>,
}

impl Default for SinkOptions {
    fn default() -> Self {
        SinkOptions {
            delays: StageDelays::default(),
            queue_depth: DEFAULT_QUEUE_DEPTH,
            out_dir: None,
            recorder: None,
        }
    }
}

#[derive(Debug, Default)]
pub struct SinkStats {
    pub frames_received: AtomicU64,
    pub frames_displayed: AtomicU64,
    pub meshes_received: AtomicU64,
    pub meshes_displayed: AtomicU64,
    pub poses_received: AtomicU64,
    pub audio_chunks: AtomicU64,
    pub dropped: AtomicU64,
    pub seq_gaps: AtomicU64,
    pub config_updates: AtomicU64,
    pub connections: AtomicU64,
    pub last_frame: Mutex<Option<ColorImage>>,
    pub last_pose: Mutex<Option<Pose>>,
    pub last_audio: Mutex<Option<AudioBuffer>>,
}

impl SinkStats {
    pub fn get(v: &AtomicU64) -> u64 {
        v.load(Ordering::SeqCst)
    }
}

enum Item {
    Frame(FrameUpdate, u64),
    Mesh(MeshUpdate, u64),
}

/// Bounded queue that discards the oldest entry when full.
struct DropQueue {
    items: Mutex<(VecDeque<Item>, bool)>,
    cv: Condvar,
    depth: usize,
}

impl DropQueue {
    fn push(&self, item: Item) -> bool {
        let mut g = self.items.lock().unwrap();
        let dropped = if g.0.len() >= self.depth {
            g.0.pop_front();
            true
        } else {
            false
        };
        g.0.push_back(item);
        self.cv.notify_one();
        dropped
    }

    fn pop(&self) -> Option<Item> {
        let mut g = self.items.lock().unwrap();
        loop {
            if let Some(it) = g.0.pop_front() {
                return Some(it);
            }
            if g.1 {
                return None;
            }
            g = self.cv.wait(g).unwrap();
        }
    }

    fn close(&self) {
        self.items.lock().unwrap().1 = true;
        self.cv.notify_all();
    }
}

/// Frame-receiving end of the pipeline (the headset).
pub struct Sink {
    addr: SocketAddr,
    stats: Arc<SinkStats>,
    profile: ProfileStore,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl Sink {
    pub fn spawn(listen: SocketAddr, opts: SinkOptions) -> Result<Self> {
        let policy = synthesize_latency(opts.delays)?;
        if opts.queue_depth == 0 {
            return Err(Error::Config("sink queue depth must be at least 1".into()));
        }
        if let Some(d) = &opts.out_dir {
            std::fs::create_dir_all(d)?;
        }
        let listener = TcpListener::bind(listen)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let stats = Arc::new(SinkStats::default());
        let profile = ProfileStore::default();
        let stop = Arc::new(AtomicBool::new(false));
        let ctx = Ctx {
            clock: Clock::new(),
            policy,
            opts,
            stats: stats.clone(),
            profile: profile.clone(),
        };
        let flag = stop.clone();
        let thread = thread::Builder::new()
            .name("sink-accept".into())
            .spawn(move || accept_loop(listener, ctx, flag))?;
        log::info!("sink listening on {addr}");
        Ok(Sink {
            addr,
            stats,
            profile,
            stop,
            thread: Some(thread),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn stats(&self) -> &Arc<SinkStats> {
        &self.stats
    }

    /// Profile most recently received from the orchestrator.
    pub fn profile(&self) -> &ProfileStore {
        &self.profile
    }

    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(h) = self.thread.take() {
            let _ = h.join();
        }
    }
}

impl Drop for Sink {
    fn drop(&mut self) {
        self.stop_now();
    }
}

#[derive(Clone)]
struct Ctx {
    clock: Clock,
    policy: LatencyPolicy,
    opts: SinkOptions,
    stats: Arc<SinkStats>,
    profile: ProfileStore,
}

fn accept_loop(listener: TcpListener, ctx: Ctx, stop: Arc<AtomicBool>) {
    while !stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                log::info!("sink: orchestrator connected from {peer}");
                ctx.stats.connections.fetch_add(1, Ordering::SeqCst);
                if let Err(e) = serve_connection(stream, &ctx, &stop) {
                    log::warn!("sink connection ended: {e}");
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                thread::sleep(Duration::from_millis(5));
            }
            Err(e) => {
                log::warn!("sink accept: {e}");
                thread::sleep(Duration::from_millis(20));
            }
        }
    }
}

fn serve_connection(stream: TcpStream, ctx: &Ctx, stop: &Arc<AtomicBool>) -> Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_nodelay(true)?;
    stream.set_read_timeout(Some(Duration::from_millis(50)))?;
    let out = Outbox::new();
    out.attach(stream.try_clone()?);
    let queue = Arc::new(DropQueue {
        items: Mutex::new((VecDeque::new(), false)),
        cv: Condvar::new(),
        depth: ctx.opts.queue_depth,
    });
    let renderer = {
        let (q, out, ctx) = (queue.clone(), out.clone(), ctx.clone());
        thread::Builder::new()
            .name("sink-render".into())
            .spawn(move || render_loop(&q, &out, &ctx))?
    };
    let mut reader = MessageReader::new(stream);
    let mut seqs = SeqTracker::default();
    let result = loop {
        if stop.load(Ordering::SeqCst) {
            break Ok(());
        }
        let msg = match reader.read_message() {
            Ok(Some(m)) => m,
            Ok(None) => break Ok(()),
            Err(e) if is_timeout(&e) => continue,
            Err(e) if is_disconnect(&e) => break Ok(()),
            Err(e) => break Err(e.into()),
        };
        let t_recv = ctx.clock.now_micros();
        let st = &ctx.stats;
        if let Some(seq) = msg.seq() {
            let gaps = seqs.observe(msg.type_id(), seq);
            st.seq_gaps.fetch_add(gaps, Ordering::SeqCst);
        }
        match msg {
            WireMessage::Ping(p) => {
                let _ = out.send(&WireMessage::Pong(Pong {
                    nonce: p.nonce,
                    t_ping_micros: p.t_sent_micros,
                    t_reply_micros: ctx.clock.now_micros(),
                }));
            }
            WireMessage::Frame(f) => {
                st.frames_received.fetch_add(1, Ordering::SeqCst);
                if queue.push(Item::Frame(f, t_recv)) {
                    st.dropped.fetch_add(1, Ordering::SeqCst);
                }
            }
            WireMessage::Mesh(m) => {
                st.meshes_received.fetch_add(1, Ordering::SeqCst);
                if queue.push(Item::Mesh(m, t_recv)) {
                    st.dropped.fetch_add(1, Ordering::SeqCst);
                }
            }
            WireMessage::Pose(p) => {
                st.poses_received.fetch_add(1, Ordering::SeqCst);
                if let Ok(pose) = Pose::from_row_major(p.translation, p.rotation) {
                    *st.last_pose.lock().unwrap() = Some(pose);
                }
            }
            WireMessage::Audio(a) => {
                st.audio_chunks.fetch_add(1, Ordering::SeqCst);
                let snap = ctx.profile.snapshot();
                match apply_audio(&AudioBuffer::new(a.sample_rate_hz, a.samples), &snap.profile) {
                    Ok(buf) => *st.last_audio.lock().unwrap() = Some(buf),
                    Err(e) => log::warn!("sink: audio chunk {} rejected: {e}", a.seq),
                }
            }
            WireMessage::Config(c) => match serde_json::from_slice::<ImpairmentProfile>(&c.profile_json) {
                Ok(p) => match ctx.profile.update(p) {
                    Ok(v) => {
                        st.config_updates.fetch_add(1, Ordering::SeqCst);
                        log::info!("sink: profile version {v}");
                    }
                    Err(v) => log::warn!("sink: rejected profile with {} violations", v.len()),
                },
                Err(e) => log::warn!("sink: unreadable profile: {e}"),
            },
            other => log::debug!("sink: ignoring {}", other.kind()),
        }
    };
    queue.close();
    out.close();
    let _ = renderer.join();
    result
}

fn render_loop(queue: &DropQueue, out: &Outbox, ctx: &Ctx) {
    while let Some(item) = queue.pop() {
        let start = Instant::now();
        let snap = ctx.profile.snapshot();
        let (stream, seq, t_recv) = match &item {
            Item::Frame(f, t) => (ACK_FRAME, f.seq, *t),
            Item::Mesh(m, t) => (ACK_MESH, m.seq, *t),
        };
        let shown = match item {
            Item::Frame(f, _) => match ColorImage::decode_png(&f.payload) {
                Ok(img) => {
                    let ti = Instant::now();
                    let filtered = apply_visual(&img, &snap.profile);
                    if let Some(r) = &ctx.opts.recorder {
                        r.stage(Stage::ImpairmentApply, ti.elapsed());
                    }
                    Some(Shown::Frame(filtered))
                }
                Err(e) => {
                    log::warn!("sink: frame {seq} undecodable: {e}");
                    None
                }
            },
            Item::Mesh(m, _) => match HandMesh::from_json(&m.payload) {
                Ok(mesh) => Some(Shown::Mesh(apply_mesh(&mesh, &snap.profile, m.t_micros as f64 / 1e6))),
                Err(e) => {
                    log::warn!("sink: mesh {seq} undecodable: {e}");
                    None
                }
            },
        };
        let Some(shown) = shown else { continue };
        ctx.policy.pad(Stage::SinkRender, start);
        let t_displayed = ctx.clock.now_micros();
        let _ = out.send(&WireMessage::RenderAck(RenderAck {
            stream,
            seq,
            t_recv_micros: t_recv,
            t_displayed_micros: t_displayed,
        }));
        let st = &ctx.stats;
        match shown {
            Shown::Frame(img) => {
                st.frames_displayed.fetch_add(1, Ordering::SeqCst);
                if let Some(dir) = &ctx.opts.out_dir {
                    if let Err(e) = img.save_png(&dir.join(format!("frame-{seq:06}.png"))) {
                        log::warn!("sink: {e}");
                    }
                }
                *st.last_frame.lock().unwrap() = Some(img);
            }
            Shown::Mesh(mesh) => {
                st.meshes_displayed.fetch_add(1, Ordering::SeqCst);
                if let Some(dir) = &ctx.opts.out_dir {
                    if let Err(e) = mesh.write_json(dir, seq) {
                        log::warn!("sink: {e}");
                    }
                }
            }
        }
    }
}

enum Shown {
    Frame(ColorImage),
    Mesh(HandMesh),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drop_queue_discards_oldest() {
        let q = DropQueue {
            items: Mutex::new((VecDeque::new(), false)),
            cv: Condvar::new(),
            depth: 3,
        };
        let mesh = |seq| {
            Item::Mesh(
                MeshUpdate {
                    seq,
                    t_micros: 0,
                    payload: vec![],
                },
                0,
            )
        };
        let drops: Vec<bool> = (0..5).map(|s| q.push(mesh(s))).collect();
        assert_eq!(drops, vec![false, false, false, true, true]);
        q.close();
        let mut left = Vec::new();
        while let Some(Item::Mesh(m, _)) = q.pop() {
            left.push(m.seq);
        }
        assert_eq!(left, vec![2, 3, 4]);
    }
}
