//! Framed message protocol between the robot, the inference service and
//! operator consoles. See `docs/protocol.md` for the byte layout.

mod envelope;
mod fanout;
mod message;
mod queue;
mod sequence;

pub use envelope::{
    crc32, decode_envelope, decode_envelope_prefix, encode_envelope, read_envelope, write_envelope,
    Envelope, ProtocolError, ProtocolErrorKind, TransportError, HEADER_LEN, MAGIC, MAX_PAYLOAD,
    TRAILER_LEN,
};
pub use fanout::{Fanout, PublishOutcome};
pub use message::{
    decode_message, encode_message, ControlCommand, DetectionRecord, DetectionsMsg, Message,
    MessageKind, PixelEncoding, PixelFormat, RobotStatus, VehicleMode, VideoFrame,
};
pub use queue::{Backpressure, Plane, PlaneQueue, QueueStats};
pub use sequence::{detect_sequence_gaps, Gap, GapDetector, GapReport, SequenceCounter};

/// Default TCP ports.
pub const DEFAULT_MEDIA_PORT: u16 = 7701;
pub const DEFAULT_CONTROL_PORT: u16 = 7702;
pub const DEFAULT_CONSOLE_PORT: u16 = 7703;
