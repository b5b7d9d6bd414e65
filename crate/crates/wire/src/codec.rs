use crate::message::*;
use crate::WireError;

pub const MAGIC: u8 = 0xED;
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 7;
pub const MAX_PAYLOAD: usize = 1 << 24;

/// Outcome of a decode attempt on a possibly partial buffer.
#[derive(Debug, Clone, PartialEq)]
pub enum Decoded {
    Message { message: WireMessage, consumed: usize },
    /// At least this many more bytes are required.
    NeedMore(usize),
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, v: &[f64]) {
        for x in v {
            self.f64(*x);
        }
    }
    fn bytes(&mut self, v: &[u8]) -> Result<(), WireError> {
        let n = u32::try_from(v.len()).map_err(|_| WireError::PayloadTooLarge(v.len()))?;
        self.u32(n);
        self.0.extend_from_slice(v);
        Ok(())
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.buf.len() - self.pos < n {
            return Err(WireError::Malformed(format!(
                "payload ends {} bytes early",
                n - (self.buf.len() - self.pos)
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, WireError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64_array<const N: usize>(&mut self) -> Result<[f64; N], WireError> {
        let mut out = [0.0; N];
        for v in &mut out {
            *v = self.f64()?;
        }
        Ok(out)
    }
    fn bytes(&mut self) -> Result<Vec<u8>, WireError> {
        let n = self.u32()? as usize;
        Ok(self.take(n)?.to_vec())
    }
    fn finish(self) -> Result<(), WireError> {
        if self.pos != self.buf.len() {
            return Err(WireError::Malformed(format!(
                "{} trailing payload bytes",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn encode_payload(msg: &WireMessage) -> Result<Vec<u8>, WireError> {
    let mut w = Writer(Vec::new());
    match msg {
        WireMessage::Touch(m) => {
            w.f64(m.x);
            w.f64(m.y);
            w.u8(m.action.code());
            w.u64(m.t_micros);
        }
        WireMessage::Motion(m) => {
            w.f64s(&m.accel);
            w.f64s(&m.gyro);
            w.u64(m.t_micros);
        }
        WireMessage::Frame(m) => {
            w.u64(m.seq);
            w.u64(m.t_micros);
            w.u32(m.width);
            w.u32(m.height);
            w.u8(match m.encoding {
                FrameEncoding::Png => 0,
            });
            w.bytes(&m.payload)?;
        }
        WireMessage::Audio(m) => {
            w.u64(m.seq);
            w.u64(m.t_micros);
            w.u32(m.sample_rate_hz);
            let n = u32::try_from(m.samples.len())
                .map_err(|_| WireError::PayloadTooLarge(m.samples.len()))?;
            w.u32(n);
            w.f64s(&m.samples);
        }
        WireMessage::Pose(m) => {
            w.u64(m.seq);
            w.u64(m.t_micros);
            w.f64s(&m.translation);
            w.f64s(&m.rotation);
        }
        WireMessage::Mesh(m) => {
            w.u64(m.seq);
            w.u64(m.t_micros);
            w.bytes(&m.payload)?;
        }
        WireMessage::Config(m) => w.bytes(&m.profile_json)?,
        WireMessage::Ping(m) => {
            w.u64(m.nonce);
            w.u64(m.t_sent_micros);
        }
        WireMessage::Pong(m) => {
            w.u64(m.nonce);
            w.u64(m.t_ping_micros);
            w.u64(m.t_reply_micros);
        }
        WireMessage::RenderAck(m) => {
            w.u8(m.stream);
            w.u64(m.seq);
            w.u64(m.t_recv_micros);
            w.u64(m.t_displayed_micros);
        }
    }
    Ok(w.0)
}

/// Serialises `msg` as header (magic, version, type, u32 LE payload length)
/// followed by the little-endian payload.
pub fn encode(msg: &WireMessage) -> Result<Vec<u8>, WireError> {
    let payload = encode_payload(msg)?;
    if payload.len() > MAX_PAYLOAD {
        return Err(WireError::PayloadTooLarge(payload.len()));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.push(MAGIC);
    out.push(VERSION);
    out.push(msg.type_id());
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(&payload);
    Ok(out)
}

/// Decodes one message starting at `offset`. Header fields are checked as
/// soon as their bytes are present, so a bad magic is reported even on a
/// one-byte buffer.
pub fn decode(buf: &[u8], offset: usize) -> Result<Decoded, WireError> {
    let b = buf.get(offset..).unwrap_or(&[]);
    if let Some(&m) = b.first() {
        if m != MAGIC {
            return Err(WireError::BadMagic(m));
        }
    }
    if let Some(&v) = b.get(1) {
        if v != VERSION {
            return Err(WireError::BadVersion(v));
        }
    }
    if let Some(&t) = b.get(2) {
        if !(1..=10).contains(&t) {
            return Err(WireError::UnknownType(t));
        }
    }
    if b.len() < HEADER_LEN {
        return Ok(Decoded::NeedMore(HEADER_LEN - b.len()));
    }
    let len = u32::from_le_bytes(b[3..7].try_into().unwrap()) as usize;
    if len > MAX_PAYLOAD {
        return Err(WireError::LengthOverflow(len));
    }
    let total = HEADER_LEN + len;
    if b.len() < total {
        return Ok(Decoded::NeedMore(total - b.len()));
    }
    let message = decode_payload(b[2], &b[HEADER_LEN..total])?;
    Ok(Decoded::Message {
        message,
        consumed: total,
    })
}

fn decode_payload(type_id: u8, payload: &[u8]) -> Result<WireMessage, WireError> {
    let mut r = Reader { buf: payload, pos: 0 };
    let msg = match type_id {
        1 => {
            let x = r.f64()?;
            let y = r.f64()?;
            let code = r.u8()?;
            let action = TouchAction::from_code(code)
                .ok_or_else(|| WireError::Malformed(format!("touch action {code}")))?;
            WireMessage::Touch(TouchEvent {
                x,
                y,
                action,
                t_micros: r.u64()?,
            })
        }
        2 => WireMessage::Motion(MotionEvent {
            accel: r.f64_array()?,
            gyro: r.f64_array()?,
            t_micros: r.u64()?,
        }),
        3 => {
            let seq = r.u64()?;
            let t_micros = r.u64()?;
            let width = r.u32()?;
            let height = r.u32()?;
            let encoding = match r.u8()? {
                0 => FrameEncoding::Png,
                e => return Err(WireError::Malformed(format!("frame encoding {e}"))),
            };
            WireMessage::Frame(FrameUpdate {
                seq,
                t_micros,
                width,
                height,
                encoding,
                payload: r.bytes()?,
            })
        }
        4 => {
            let seq = r.u64()?;
            let t_micros = r.u64()?;
            let sample_rate_hz = r.u32()?;
            let n = r.u32()? as usize;
            if n > payload.len() / 8 {
                return Err(WireError::Malformed(format!("{n} samples do not fit payload")));
            }
            let samples = (0..n).map(|_| r.f64()).collect::<Result<_, _>>()?;
            WireMessage::Audio(AudioChunk {
                seq,
                t_micros,
                sample_rate_hz,
                samples,
            })
        }
        5 => WireMessage::Pose(PoseUpdate {
            seq: r.u64()?,
            t_micros: r.u64()?,
            translation: r.f64_array()?,
            rotation: r.f64_array()?,
        }),
        6 => WireMessage::Mesh(MeshUpdate {
            seq: r.u64()?,
            t_micros: r.u64()?,
            payload: r.bytes()?,
        }),
        7 => WireMessage::Config(ConfigUpdate {
            profile_json: r.bytes()?,
        }),
        8 => WireMessage::Ping(Ping {
            nonce: r.u64()?,
            t_sent_micros: r.u64()?,
        }),
        9 => WireMessage::Pong(Pong {
            nonce: r.u64()?,
            t_ping_micros: r.u64()?,
            t_reply_micros: r.u64()?,
        }),
        10 => WireMessage::RenderAck(RenderAck {
            stream: r.u8()?,
            seq: r.u64()?,
            t_recv_micros: r.u64()?,
            t_displayed_micros: r.u64()?,
        }),
        t => return Err(WireError::UnknownType(t)),
    };
    r.finish()?;
    Ok(msg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn touch_layout_is_fixed() {
        let msg = WireMessage::Touch(TouchEvent {
            x: 100.0,
            y: 200.0,
            action: TouchAction::Down,
            t_micros: 0,
        });
        let bytes = encode(&msg).unwrap();
        let mut expected = vec![0xED, 0x01, 0x01, 25, 0, 0, 0];
        expected.extend_from_slice(&100.0f64.to_le_bytes());
        expected.extend_from_slice(&200.0f64.to_le_bytes());
        expected.push(0);
        expected.extend_from_slice(&[0; 8]);
        assert_eq!(bytes, expected);
        assert_eq!(
            decode(&bytes, 0).unwrap(),
            Decoded::Message {
                message: msg,
                consumed: 32
            }
        );
    }

    #[test]
    fn truncated_header_needs_more() {
        assert_eq!(decode(&[0xED, 0x01, 0x01], 0).unwrap(), Decoded::NeedMore(4));
        assert_eq!(decode(&[], 0).unwrap(), Decoded::NeedMore(7));
    }

    #[test]
    fn truncated_payload_needs_the_rest() {
        let bytes = encode(&WireMessage::Ping(Ping {
            nonce: 1,
            t_sent_micros: 2,
        }))
        .unwrap();
        assert_eq!(decode(&bytes[..10], 0).unwrap(), Decoded::NeedMore(bytes.len() - 10));
    }

    #[test]
    fn header_errors() {
        assert!(matches!(decode(&[0x00], 0), Err(WireError::BadMagic(0))));
        assert!(matches!(decode(&[0xED, 0x02], 0), Err(WireError::BadVersion(2))));
        assert!(matches!(decode(&[0xED, 0x01, 0x00], 0), Err(WireError::UnknownType(0))));
        assert!(matches!(decode(&[0xED, 0x01, 11], 0), Err(WireError::UnknownType(11))));
        let huge = [0xED, 0x01, 0x03, 0x01, 0x00, 0x00, 0x01];
        assert!(matches!(decode(&huge, 0), Err(WireError::LengthOverflow(_))));
    }

    #[test]
    fn inconsistent_payloads_are_malformed() {
        let mut bytes = encode(&WireMessage::Touch(TouchEvent {
            x: 1.0,
            y: 2.0,
            action: TouchAction::Up,
            t_micros: 5,
        }))
        .unwrap();
        bytes[HEADER_LEN + 16] = 9;
        assert!(matches!(decode(&bytes, 0), Err(WireError::Malformed(_))));

        let mut short = vec![0xED, 0x01, 0x08, 4, 0, 0, 0];
        short.extend_from_slice(&[1, 2, 3, 4]);
        assert!(matches!(decode(&short, 0), Err(WireError::Malformed(_))));
    }

    #[test]
    fn oversized_payload_is_rejected() {
        let msg = WireMessage::Config(ConfigUpdate {
            profile_json: vec![b' '; MAX_PAYLOAD],
        });
        assert!(matches!(encode(&msg), Err(WireError::PayloadTooLarge(_))));
    }
}
