use std::collections::HashMap;
use std::hash::Hasher;

use empathd_core::ColorImage;
use fnv::FnvHasher;

use crate::message::{FrameEncoding, FrameUpdate};
use crate::Result;

/// 64-bit FNV-1a over the dimensions and raw channel bits.
pub fn digest(img: &ColorImage) -> u64 {
    let mut h = FnvHasher::default();
    h.write(&img.width.to_le_bytes());
    h.write(&img.height.to_le_bytes());
    for px in &img.data {
        for c in px {
            h.write(&c.to_bits().to_le_bytes());
        }
    }
    h.finish()
}

/// Emits a frame only when its digest differs from the last one sent.
#[derive(Debug, Clone, Default)]
pub struct DiffGate {
    last: Option<u64>,
    next_seq: u64,
    pub emitted: u64,
    pub suppressed: u64,
}

impl DiffGate {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn last_digest(&self) -> Option<u64> {
        self.last
    }

    /// Records `d` and reports whether it should be sent.
    pub fn check(&mut self, d: u64) -> bool {
        if self.last == Some(d) {
            self.suppressed += 1;
            return false;
        }
        self.last = Some(d);
        self.emitted += 1;
        true
    }

    /// PNG-encoded update for `img` when it changed since the last emission.
    pub fn offer(&mut self, img: &ColorImage, t_micros: u64) -> Result<Option<FrameUpdate>> {
        if !self.check(digest(img)) {
            return Ok(None);
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        Ok(Some(FrameUpdate {
            seq,
            t_micros,
            width: img.width,
            height: img.height,
            encoding: FrameEncoding::Png,
            payload: img.encode_png()?,
        }))
    }
}

/// Per-stream sequence gap detection on the receiving side.
#[derive(Debug, Clone, Default)]
pub struct SeqTracker {
    last: HashMap<u8, u64>,
    pub gaps: u64,
    pub out_of_order: u64,
}

impl SeqTracker {
    /// Returns the number of sequence numbers skipped before `seq`.
    pub fn observe(&mut self, stream: u8, seq: u64) -> u64 {
        match self.last.insert(stream, seq) {
            None => 0,
            Some(prev) if seq > prev => {
                let gap = seq - prev - 1;
                self.gaps += gap;
                gap
            }
            Some(prev) => {
                self.out_of_order += 1;
                self.last.insert(stream, prev);
                0
            }
        }
    }
}
