use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TouchAction {
    Down,
    Move,
    Up,
}

impl TouchAction {
    pub fn code(self) -> u8 {
        match self {
            TouchAction::Down => 0,
            TouchAction::Move => 1,
            TouchAction::Up => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(TouchAction::Down),
            1 => Some(TouchAction::Move),
            2 => Some(TouchAction::Up),
            _ => None,
        }
    }
}

/// Touch on the IO-phone, in its screen pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TouchEvent {
    pub x: f64,
    pub y: f64,
    pub action: TouchAction,
    pub t_micros: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionEvent {
    /// m/s².
    pub accel: [f64; 3],
    /// rad/s.
    pub gyro: [f64; 3],
    pub t_micros: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameEncoding {
    Png,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameUpdate {
    pub seq: u64,
    pub t_micros: u64,
    pub width: u32,
    pub height: u32,
    pub encoding: FrameEncoding,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AudioChunk {
    pub seq: u64,
    pub t_micros: u64,
    pub sample_rate_hz: u32,
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseUpdate {
    pub seq: u64,
    pub t_micros: u64,
    pub translation: [f64; 3],
    /// Row-major rotation.
    pub rotation: [f64; 9],
}

/// Mesh serialised as `{vertices, triangles, uv}` JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshUpdate {
    pub seq: u64,
    pub t_micros: u64,
    pub payload: Vec<u8>,
}

/// Impairment profile JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigUpdate {
    pub profile_json: Vec<u8>,
}

/// Clock-offset probe; the peer answers with a `Pong` echoing `nonce` and
/// `t_sent_micros`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ping {
    pub nonce: u64,
    pub t_sent_micros: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pong {
    pub nonce: u64,
    pub t_ping_micros: u64,
    pub t_reply_micros: u64,
}

/// Sink acknowledgement of a displayed update. `stream` is the type id of the
/// acknowledged message; times are on the sink's clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderAck {
    pub stream: u8,
    pub seq: u64,
    pub t_recv_micros: u64,
    pub t_displayed_micros: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WireMessage {
    Touch(TouchEvent),
    Motion(MotionEvent),
    Frame(FrameUpdate),
    Audio(AudioChunk),
    Pose(PoseUpdate),
    Mesh(MeshUpdate),
    Config(ConfigUpdate),
    Ping(Ping),
    Pong(Pong),
    RenderAck(RenderAck),
}

impl WireMessage {
    pub fn type_id(&self) -> u8 {
        match self {
            WireMessage::Touch(_) => 1,
            WireMessage::Motion(_) => 2,
            WireMessage::Frame(_) => 3,
            WireMessage::Audio(_) => 4,
            WireMessage::Pose(_) => 5,
            WireMessage::Mesh(_) => 6,
            WireMessage::Config(_) => 7,
            WireMessage::Ping(_) => 8,
            WireMessage::Pong(_) => 9,
            WireMessage::RenderAck(_) => 10,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            WireMessage::Touch(_) => "touch",
            WireMessage::Motion(_) => "motion",
            WireMessage::Frame(_) => "frame",
            WireMessage::Audio(_) => "audio",
            WireMessage::Pose(_) => "pose",
            WireMessage::Mesh(_) => "mesh",
            WireMessage::Config(_) => "config",
            WireMessage::Ping(_) => "ping",
            WireMessage::Pong(_) => "pong",
            WireMessage::RenderAck(_) => "renderAck",
        }
    }

    /// Sequence number for sequenced streams.
    pub fn seq(&self) -> Option<u64> {
        match self {
            WireMessage::Frame(m) => Some(m.seq),
            WireMessage::Audio(m) => Some(m.seq),
            WireMessage::Pose(m) => Some(m.seq),
            WireMessage::Mesh(m) => Some(m.seq),
            WireMessage::RenderAck(m) => Some(m.seq),
            _ => None,
        }
    }

    pub fn t_micros(&self) -> Option<u64> {
        match self {
            WireMessage::Touch(m) => Some(m.t_micros),
            WireMessage::Motion(m) => Some(m.t_micros),
            WireMessage::Frame(m) => Some(m.t_micros),
            WireMessage::Audio(m) => Some(m.t_micros),
            WireMessage::Pose(m) => Some(m.t_micros),
            WireMessage::Mesh(m) => Some(m.t_micros),
            WireMessage::Ping(m) => Some(m.t_sent_micros),
            WireMessage::Pong(m) => Some(m.t_reply_micros),
            WireMessage::RenderAck(m) => Some(m.t_displayed_micros),
            WireMessage::Config(_) => None,
        }
    }
}
