//! Redirection protocol between the IO phone, the orchestrator and the
//! VR sink, plus the differential screenshot gate and display scaling.

mod codec;
mod display;
mod gate;
mod message;
mod stream;
mod trace;

pub use codec::{decode, encode, Decoded, HEADER_LEN, MAGIC, MAX_PAYLOAD, VERSION};
pub use display::{scale_display, Scaled};
pub use gate::{digest, DiffGate, SeqTracker};
pub use message::*;
pub use stream::{write_message, MessageReader};
pub use trace::{read_trace, write_trace, TraceRecord};

#[derive(Debug, thiserror::Error)]
pub enum WireError {
    #[error("bad magic byte {0:#04x}")]
    BadMagic(u8),
    #[error("unsupported protocol version {0}")]
    BadVersion(u8),
    #[error("unknown message type {0}")]
    UnknownType(u8),
    #[error("declared payload length {0} exceeds the limit")]
    LengthOverflow(usize),
    #[error("payload of {0} bytes is too large")]
    PayloadTooLarge(usize),
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error("connection closed mid-message")]
    UnexpectedEof,
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] empathd_core::Error),
}

impl WireError {
    /// Protocol errors leave the byte stream unsynchronised; the connection
    /// must be dropped and re-established.
    pub fn requires_reset(&self) -> bool {
        matches!(
            self,
            WireError::BadMagic(_)
                | WireError::BadVersion(_)
                | WireError::UnknownType(_)
                | WireError::LengthOverflow(_)
                | WireError::Malformed(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, WireError>;
