use std::io::{Read, Write};

use crate::codec::{decode, encode, Decoded};
use crate::message::WireMessage;
use crate::{Result, WireError};

pub fn write_message<W: Write>(w: &mut W, msg: &WireMessage) -> Result<usize> {
    let bytes = encode(msg)?;
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(bytes.len())
}

/// Incremental decoder over a byte stream.
pub struct MessageReader<R> {
    inner: R,
    buf: Vec<u8>,
    start: usize,
}

impl<R: Read> MessageReader<R> {
    pub fn new(inner: R) -> Self {
        MessageReader {
            inner,
            buf: Vec::with_capacity(64 * 1024),
            start: 0,
        }
    }

    pub fn get_ref(&self) -> &R {
        &self.inner
    }

    /// Next message, or `None` on a clean end of stream between messages.
    pub fn read_message(&mut self) -> Result<Option<WireMessage>> {
        loop {
            match decode(&self.buf, self.start)? {
                Decoded::Message { message, consumed } => {
                    self.start += consumed;
                    if self.start == self.buf.len() {
                        self.buf.clear();
                        self.start = 0;
                    }
                    return Ok(Some(message));
                }
                Decoded::NeedMore(n) => {
                    if self.start > 0 {
                        self.buf.drain(..self.start);
                        self.start = 0;
                    }
                    let old = self.buf.len();
                    self.buf.resize(old + n.max(8192), 0);
                    let got = match self.inner.read(&mut self.buf[old..]) {
                        Ok(g) => g,
                        Err(e) => {
                            self.buf.truncate(old);
                            return Err(e.into());
                        }
                    };
                    self.buf.truncate(old + got);
                    if got == 0 {
                        return if old == 0 {
                            Ok(None)
                        } else {
                            Err(WireError::UnexpectedEof)
                        };
                    }
                }
            }
        }
    }
}

impl<R: Read> Iterator for MessageReader<R> {
    type Item = Result<WireMessage>;

    fn next(&mut self) -> Option<Self::Item> {
        self.read_message().transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::*;

    /// Reader that hands out one byte per call.
    struct Trickle(Vec<u8>, usize);

    impl Read for Trickle {
        fn read(&mut self, out: &mut [u8]) -> std::io::Result<usize> {
            if self.1 >= self.0.len() || out.is_empty() {
                return Ok(0);
            }
            out[0] = self.0[self.1];
            self.1 += 1;
            Ok(1)
        }
    }

    fn sample() -> Vec<WireMessage> {
        vec![
            WireMessage::Ping(Ping {
                nonce: 3,
                t_sent_micros: 9,
            }),
            WireMessage::Config(ConfigUpdate {
                profile_json: b"{\"filters\":[]}".to_vec(),
            }),
            WireMessage::Touch(TouchEvent {
                x: 1.5,
                y: -2.0,
                action: TouchAction::Move,
                t_micros: 77,
            }),
        ]
    }

    #[test]
    fn byte_at_a_time_stream() {
        let mut bytes = Vec::new();
        for m in sample() {
            write_message(&mut bytes, &m).unwrap();
        }
        let got: Vec<WireMessage> = MessageReader::new(Trickle(bytes, 0))
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(got, sample());
    }

    #[test]
    fn eof_inside_message_is_an_error() {
        let mut bytes = Vec::new();
        write_message(&mut bytes, &sample()[1]).unwrap();
        bytes.pop();
        let mut r = MessageReader::new(&bytes[..]);
        assert!(matches!(r.read_message(), Err(WireError::UnexpectedEof)));
    }

    #[test]
    fn garbage_requires_reset() {
        let mut r = MessageReader::new(&[0x42u8, 1, 2, 3][..]);
        let err = r.read_message().unwrap_err();
        assert!(err.requires_reset());
    }
}
