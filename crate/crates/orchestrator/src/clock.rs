use std::time::{Duration, Instant};

/// Per-process monotonic clock reporting microseconds since its epoch.
#[derive(Debug, Clone, Copy)]
pub struct Clock {
    epoch: Instant,
}

impl Default for Clock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock {
    pub fn new() -> Self {
        Clock {
            epoch: Instant::now(),
        }
    }

    pub fn with_epoch(epoch: Instant) -> Self {
        Clock { epoch }
    }

    pub fn now_micros(&self) -> u64 {
        self.micros_at(Instant::now())
    }

    pub fn micros_at(&self, t: Instant) -> u64 {
        t.saturating_duration_since(self.epoch).as_micros() as u64
    }

    pub fn instant_at(&self, micros: u64) -> Instant {
        self.epoch + Duration::from_micros(micros)
    }
}

/// One ping exchange: local send time, the peer's reply time, local receive
/// time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeSample {
    pub t_send: u64,
    pub t_peer: u64,
    pub t_recv: u64,
}

impl ProbeSample {
    pub fn rtt(&self) -> u64 {
        self.t_recv.saturating_sub(self.t_send)
    }

    /// Peer clock minus local clock, assuming equal one-way delays.
    pub fn offset(&self) -> i64 {
        self.t_peer as i64 - ((self.t_send as i64 + self.t_recv as i64) / 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClockOffset {
    /// Peer clock minus local clock, microseconds.
    pub micros: i64,
    pub rtt_micros: u64,
}

impl ClockOffset {
    /// Converts a peer timestamp to the local clock.
    pub fn to_local(&self, peer_micros: u64) -> i64 {
        peer_micros as i64 - self.micros
    }
}

/// Picks the minimum round-trip sample, which carries the least queueing
/// asymmetry.
pub fn estimate_offset(samples: &[ProbeSample]) -> Option<ClockOffset> {
    samples.iter().min_by_key(|s| s.rtt()).map(|s| ClockOffset {
        micros: s.offset(),
        rtt_micros: s.rtt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_exchange_recovers_offset() {
        // Peer clock runs 5 s ahead; 20 ms each way.
        let s = ProbeSample {
            t_send: 1_000,
            t_peer: 5_000_000 + 21_000,
            t_recv: 41_000,
        };
        assert_eq!(s.offset(), 5_000_000);
        assert_eq!(s.rtt(), 40_000);
    }

    #[test]
    fn minimum_rtt_sample_wins() {
        let good = ProbeSample {
            t_send: 0,
            t_peer: 110,
            t_recv: 20,
        };
        let queued = ProbeSample {
            t_send: 100,
            t_peer: 500,
            t_recv: 2_000,
        };
        let est = estimate_offset(&[queued, good]).unwrap();
        assert_eq!(est.micros, 100);
        assert_eq!(est.to_local(1_100), 1_000);
        assert!(estimate_offset(&[]).is_none());
    }

    #[test]
    fn clocks_with_different_epochs() {
        let base = Instant::now();
        let a = Clock::with_epoch(base);
        let b = Clock::with_epoch(base + Duration::from_millis(7));
        let t = base + Duration::from_millis(10);
        assert_eq!(a.micros_at(t) - b.micros_at(t), 7_000);
        assert_eq!(a.micros_at(a.instant_at(1_234)), 1_234);
    }
}
