use std::net::{Shutdown, SocketAddr, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use empathd_wire::{write_message, MessageReader, Ping, WireError, WireMessage};

use crate::clock::{estimate_offset, Clock, ClockOffset, ProbeSample};
use crate::{Error, Result};

/// Measured pings per clock synchronisation, nonces `0..SYNC_PINGS`.
pub const SYNC_PINGS: u64 = 8;

/// Nonce of the unmeasured ping that opens every synchronisation. Its round
/// trip absorbs connection set-up in any intermediary.
pub const WARMUP_NONCE: u64 = u64::MAX;

/// Write half of a connection shared between threads. Sending on a
/// closed or failed link returns an error and leaves the link down.
#[derive(Debug, Clone, Default)]
pub struct Outbox {
    stream: Arc<Mutex<Option<TcpStream>>>,
}

impl Outbox {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn attach(&self, stream: TcpStream) {
        *self.stream.lock().unwrap() = Some(stream);
    }

    /// Closes the connection, which also unblocks its reader.
    pub fn close(&self) {
        if let Some(s) = self.stream.lock().unwrap().take() {
            let _ = s.shutdown(Shutdown::Both);
        }
    }

    pub fn is_up(&self) -> bool {
        self.stream.lock().unwrap().is_some()
    }

    pub fn send(&self, msg: &WireMessage) -> Result<usize> {
        let mut guard = self.stream.lock().unwrap();
        let Some(s) = guard.as_mut() else {
            return Err(Error::Runtime("link is down".into()));
        };
        match write_message(s, msg) {
            Ok(n) => Ok(n),
            Err(e) => {
                if let Some(s) = guard.take() {
                    let _ = s.shutdown(Shutdown::Both);
                }
                Err(e.into())
            }
        }
    }
}

/// Exponential backoff schedule for reconnect attempts.
#[derive(Debug, Clone, Copy)]
pub struct Backoff {
    pub initial: Duration,
    pub max: Duration,
}

impl Default for Backoff {
    fn default() -> Self {
        Backoff {
            initial: Duration::from_millis(50),
            max: Duration::from_secs(2),
        }
    }
}

impl Backoff {
    pub fn delays(&self) -> impl Iterator<Item = Duration> {
        let max = self.max;
        std::iter::successors(Some(self.initial), move |d| Some((*d * 2).min(max)))
    }
}

/// Connects to `addr`, retrying with backoff until `deadline` or `stop`.
pub fn connect_with_backoff(
    addr: SocketAddr,
    backoff: Backoff,
    deadline: Option<Instant>,
    stop: &AtomicBool,
) -> Result<TcpStream> {
    let mut last = None;
    for wait in backoff.delays() {
        if stop.load(Ordering::Relaxed) {
            break;
        }
        match TcpStream::connect_timeout(&addr, Duration::from_secs(1)) {
            Ok(s) => {
                s.set_nodelay(true)?;
                return Ok(s);
            }
            Err(e) => last = Some(e),
        }
        if deadline.is_some_and(|d| Instant::now() + wait > d) {
            break;
        }
        std::thread::sleep(wait);
    }
    Err(Error::Runtime(format!(
        "could not connect to {addr}: {}",
        last.map_or_else(|| "stopped".to_string(), |e| e.to_string())
    )))
}

/// Whether a read error means the peer is gone (as opposed to a protocol
/// violation that calls for a reset).
pub fn is_disconnect(e: &WireError) -> bool {
    matches!(e, WireError::UnexpectedEof | WireError::Io(_))
}

/// A read that gave up waiting; the stream is still usable.
pub fn is_timeout(e: &WireError) -> bool {
    matches!(e, WireError::Io(io) if matches!(io.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut))
}

/// Estimates the peer's clock offset from `SYNC_PINGS` pipelined pings.
/// Messages other than pongs arriving meanwhile are discarded.
pub fn sync_clock(
    reader: &mut MessageReader<TcpStream>,
    out: &Outbox,
    clock: &Clock,
    timeout: Duration,
) -> Result<ClockOffset> {
    let deadline = Instant::now() + timeout;
    let ping = |nonce| {
        out.send(&WireMessage::Ping(Ping {
            nonce,
            t_sent_micros: clock.now_micros(),
        }))
    };
    ping(WARMUP_NONCE)?;
    let mut warm = false;
    let mut samples = Vec::new();
    while (samples.len() as u64) < SYNC_PINGS {
        if Instant::now() > deadline {
            return Err(Error::Runtime("clock sync timed out".into()));
        }
        match reader.read_message() {
            Ok(Some(WireMessage::Pong(p))) if p.nonce == WARMUP_NONCE && !warm => {
                warm = true;
                for nonce in 0..SYNC_PINGS {
                    ping(nonce)?;
                }
            }
            Ok(Some(WireMessage::Pong(p))) if warm && p.nonce < SYNC_PINGS => samples.push(ProbeSample {
                t_send: p.t_ping_micros,
                t_peer: p.t_reply_micros,
                t_recv: clock.now_micros(),
            }),
            Ok(Some(other)) => log::debug!("sync: ignoring {}", other.kind()),
            Ok(None) => return Err(Error::Runtime("peer closed during clock sync".into())),
            Err(e) if is_timeout(&e) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    let off = estimate_offset(&samples).expect("non-empty");
    log::debug!("clock offset {} us (rtt {} us)", off.micros, off.rtt_micros);
    Ok(off)
}
