use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use empathd_appsim::wait_until;
use empathd_wire::{MessageReader, Pong, TouchEvent, WireMessage};

use crate::clock::Clock;
use crate::link::{connect_with_backoff, is_timeout, Backoff, Outbox, SYNC_PINGS};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct AgentOptions {
    pub orchestrator: SocketAddr,
    /// Time between the touch and its transmission.
    pub io_delay_ms: f64,
    pub backoff: Backoff,
    /// Give up connecting after this long.
    pub connect_timeout: Duration,
}

impl AgentOptions {
    pub fn new(orchestrator: SocketAddr) -> Self {
        AgentOptions {
            orchestrator,
            io_delay_ms: 0.0,
            backoff: Backoff::default(),
            connect_timeout: Duration::from_secs(10),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AgentSummary {
    pub sent: u64,
    pub reconnects: u64,
}

struct Session {
    out: Outbox,
}

fn open_session(opts: &AgentOptions, clock: &Clock, stop: &AtomicBool) -> Result<Session> {
    let deadline = Instant::now() + opts.connect_timeout;
    let stream = connect_with_backoff(opts.orchestrator, opts.backoff, Some(deadline), stop)?;
    stream.set_read_timeout(Some(Duration::from_millis(50)))?;
    let out = Outbox::new();
    out.attach(stream.try_clone()?);
    let mut reader = MessageReader::new(stream);
    // Replay starts once the last measured ping has been answered.
    let mut synced = false;
    while !synced {
        if stop.load(Ordering::SeqCst) || Instant::now() > deadline {
            return Err(Error::Runtime("orchestrator never synchronised".into()));
        }
        match reader.read_message() {
            Ok(Some(WireMessage::Ping(p))) => {
                out.send(&WireMessage::Pong(Pong {
                    nonce: p.nonce,
                    t_ping_micros: p.t_sent_micros,
                    t_reply_micros: clock.now_micros(),
                }))?;
                synced = p.nonce == SYNC_PINGS - 1;
            }
            Ok(Some(other)) => log::debug!("agent: ignoring {}", other.kind()),
            Ok(None) => return Err(Error::Runtime("orchestrator closed the connection".into())),
            Err(e) if is_timeout(&e) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Session { out })
}

/// Replays `events` to the orchestrator on their trace schedule, stamping
/// each with the agent clock at the moment of the touch.
pub fn run_agent(opts: &AgentOptions, events: &[TouchEvent], stop: &AtomicBool) -> Result<AgentSummary> {
    let clock = Clock::new();
    let mut summary = AgentSummary::default();
    let mut session = open_session(opts, &clock, stop)?;
    let Some(first) = events.first() else {
        return Ok(summary);
    };
    let base = Instant::now();
    let io_delay = Duration::from_secs_f64(opts.io_delay_ms / 1000.0);
    for ev in events {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        wait_until(base + Duration::from_micros(ev.t_micros.saturating_sub(first.t_micros)));
        let touched = Instant::now();
        let msg = WireMessage::Touch(TouchEvent {
            t_micros: clock.micros_at(touched),
            ..*ev
        });
        wait_until(touched + io_delay);
        while let Err(e) = session.out.send(&msg) {
            log::warn!("agent: send failed ({e}), reconnecting");
            summary.reconnects += 1;
            session = open_session(opts, &clock, stop)?;
        }
        summary.sent += 1;
    }
    session.out.close();
    Ok(summary)
}
