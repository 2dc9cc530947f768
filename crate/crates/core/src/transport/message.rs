//! Typed payloads for each message kind.

use super::envelope::{
    decode_envelope, encode_envelope, Envelope, ProtocolError, HEADER_LEN, MAX_PAYLOAD,
};
use crate::classifier::VerdictColor;
use crate::telemetry::{decode_link_frame, parse_head_pose, HeadPose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MessageKind {
    VideoFrame = 0x01,
    Detections = 0x02,
    Control = 0x03,
    HeadPose = 0x04,
    Heartbeat = 0x05,
}

impl MessageKind {
    pub fn from_u8(v: u8) -> Option<Self> {
        Some(match v {
            0x01 => Self::VideoFrame,
            0x02 => Self::Detections,
            0x03 => Self::Control,
            0x04 => Self::HeadPose,
            0x05 => Self::Heartbeat,
            _ => return None,
        })
    }

    /// Control-plane kinds are never dropped by the outbound queues.
    pub fn is_control_plane(self) -> bool {
        !matches!(self, Self::VideoFrame)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelFormat {
    Gray8,
    Rgb8,
}

impl PixelFormat {
    pub fn channels(self) -> usize {
        match self {
            Self::Gray8 => 1,
            Self::Rgb8 => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelEncoding {
    Raw,
    /// Runs of `count u8 (1..=255)` followed by one pixel.
    Rle,
}

/// Raster carried by a VIDEO_FRAME. `data` is always the decoded raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoFrame {
    pub width: u16,
    pub height: u16,
    pub format: PixelFormat,
    pub encoding: PixelEncoding,
    pub data: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VehicleMode {
    Ugv,
    Uav,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlCommand {
    ModeSwitch(VehicleMode),
    /// Wheel commands, -127..=127 mapping onto full reverse..full forward.
    Drive {
        left: i8,
        right: i8,
    },
    EStop {
        engaged: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionRecord {
    pub x: u16,
    pub y: u16,
    pub w: u16,
    pub h: u16,
    pub score: f32,
    pub color: VerdictColor,
    pub percent: u8,
    /// Index into the canonical label set; `None` when unclassified.
    pub label: Option<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionsMsg {
    /// Sequence number of the VIDEO_FRAME these detections annotate.
    pub frame_seq: u32,
    pub items: Vec<DetectionRecord>,
}

/// Robot state echoed in heartbeats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RobotStatus {
    pub mode: VehicleMode,
    pub pan_cd: i16,
    pub tilt_cd: i16,
    pub estop: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    VideoFrame(VideoFrame),
    Detections(DetectionsMsg),
    Control(ControlCommand),
    /// A complete, verified telemetry link frame holding a head-pose
    /// payload.
    HeadPose(Vec<u8>),
    Heartbeat(Option<RobotStatus>),
}

const FMT_GRAY_RAW: u8 = 0;
const FMT_RGB_RAW: u8 = 1;
const FMT_GRAY_RLE: u8 = 2;
const FMT_RGB_RLE: u8 = 3;

const CTL_MODE: u8 = 0x01;
const CTL_DRIVE: u8 = 0x02;
const CTL_ESTOP: u8 = 0x03;

const DET_RECORD_LEN: usize = 16;

fn rle_encode(data: &[u8], channels: usize, out: &mut Vec<u8>) {
    let mut px = data.chunks_exact(channels).peekable();
    while let Some(p) = px.next() {
        let mut run = 1u8;
        while run < 255 && px.peek() == Some(&p) {
            px.next();
            run += 1;
        }
        out.push(run);
        out.extend_from_slice(p);
    }
}

fn rle_decode(
    src: &[u8],
    channels: usize,
    expected: usize,
    base: usize,
) -> Result<Vec<u8>, ProtocolError> {
    let mut out = Vec::with_capacity(expected);
    let mut i = 0;
    while i < src.len() {
        let run = src[i] as usize;
        if run == 0 {
            return Err(ProtocolError::malformed(base + i, "zero-length run"));
        }
        let px = src
            .get(i + 1..i + 1 + channels)
            .ok_or_else(|| ProtocolError::malformed(base + i, "run without pixel"))?;
        if out.len() + run * channels > expected {
            return Err(ProtocolError::malformed(
                base + i,
                "runs overflow the raster",
            ));
        }
        for _ in 0..run {
            out.extend_from_slice(px);
        }
        i += 1 + channels;
    }
    if out.len() != expected {
        return Err(ProtocolError::malformed(
            base + src.len(),
            "runs do not fill the raster",
        ));
    }
    Ok(out)
}

impl VideoFrame {
    pub fn gray(width: u16, height: u16, data: Vec<u8>) -> Self {
        Self {
            width,
            height,
            format: PixelFormat::Gray8,
            encoding: PixelEncoding::Raw,
            data,
        }
    }

    pub fn rgb(width: u16, height: u16, data: Vec<u8>) -> Self {
        Self {
            width,
            height,
            format: PixelFormat::Rgb8,
            encoding: PixelEncoding::Raw,
            data,
        }
    }

    pub fn raster_len(&self) -> usize {
        self.width as usize * self.height as usize * self.format.channels()
    }

    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.width.to_be_bytes());
        out.extend_from_slice(&self.height.to_be_bytes());
        let tag = match (self.format, self.encoding) {
            (PixelFormat::Gray8, PixelEncoding::Raw) => FMT_GRAY_RAW,
            (PixelFormat::Rgb8, PixelEncoding::Raw) => FMT_RGB_RAW,
            (PixelFormat::Gray8, PixelEncoding::Rle) => FMT_GRAY_RLE,
            (PixelFormat::Rgb8, PixelEncoding::Rle) => FMT_RGB_RLE,
        };
        out.push(tag);
        match self.encoding {
            PixelEncoding::Raw => out.extend_from_slice(&self.data),
            PixelEncoding::Rle => rle_encode(&self.data, self.format.channels(), out),
        }
    }

    fn decode(p: &[u8]) -> Result<Self, ProtocolError> {
        if p.len() < 5 {
            return Err(ProtocolError::malformed(
                HEADER_LEN + p.len(),
                "short video header",
            ));
        }
        let width = u16::from_be_bytes([p[0], p[1]]);
        let height = u16::from_be_bytes([p[2], p[3]]);
        let (format, encoding) = match p[4] {
            FMT_GRAY_RAW => (PixelFormat::Gray8, PixelEncoding::Raw),
            FMT_RGB_RAW => (PixelFormat::Rgb8, PixelEncoding::Raw),
            FMT_GRAY_RLE => (PixelFormat::Gray8, PixelEncoding::Rle),
            FMT_RGB_RLE => (PixelFormat::Rgb8, PixelEncoding::Rle),
            t => {
                return Err(ProtocolError::malformed(
                    HEADER_LEN + 4,
                    format!("unknown pixel format {t}"),
                ))
            }
        };
        if width == 0 || height == 0 {
            return Err(ProtocolError::malformed(HEADER_LEN, "zero frame dimension"));
        }
        let expected = width as usize * height as usize * format.channels();
        if expected > MAX_PAYLOAD {
            return Err(ProtocolError::malformed(
                HEADER_LEN,
                "raster exceeds 16 MiB",
            ));
        }
        let body = &p[5..];
        let data = match encoding {
            PixelEncoding::Raw => {
                if body.len() != expected {
                    return Err(ProtocolError::malformed(
                        HEADER_LEN + 5,
                        format!("raster has {} bytes, expected {expected}", body.len()),
                    ));
                }
                body.to_vec()
            }
            PixelEncoding::Rle => rle_decode(body, format.channels(), expected, HEADER_LEN + 5)?,
        };
        Ok(Self {
            width,
            height,
            format,
            encoding,
            data,
        })
    }
}

fn color_byte(c: VerdictColor) -> u8 {
    match c {
        VerdictColor::Green => 0,
        VerdictColor::Red => 1,
        VerdictColor::Unknown => 2,
    }
}

impl Message {
    pub fn kind(&self) -> MessageKind {
        match self {
            Message::VideoFrame(_) => MessageKind::VideoFrame,
            Message::Detections(_) => MessageKind::Detections,
            Message::Control(_) => MessageKind::Control,
            Message::HeadPose(_) => MessageKind::HeadPose,
            Message::Heartbeat(_) => MessageKind::Heartbeat,
        }
    }

    pub fn to_payload(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            Message::VideoFrame(f) => {
                out.reserve(5 + f.data.len());
                f.encode_into(&mut out);
            }
            Message::Detections(d) => {
                out.extend_from_slice(&d.frame_seq.to_be_bytes());
                out.extend_from_slice(&(d.items.len() as u16).to_be_bytes());
                for r in &d.items {
                    for v in [r.x, r.y, r.w, r.h] {
                        out.extend_from_slice(&v.to_be_bytes());
                    }
                    out.extend_from_slice(&r.score.to_bits().to_be_bytes());
                    out.push(color_byte(r.color));
                    out.push(r.percent);
                    out.push(r.label.unwrap_or(0xFF));
                    out.push(0);
                }
            }
            Message::Control(c) => match *c {
                ControlCommand::ModeSwitch(m) => {
                    out.extend_from_slice(&[CTL_MODE, matches!(m, VehicleMode::Uav) as u8])
                }
                ControlCommand::Drive { left, right } => {
                    out.extend_from_slice(&[CTL_DRIVE, left as u8, right as u8])
                }
                ControlCommand::EStop { engaged } => {
                    out.extend_from_slice(&[CTL_ESTOP, engaged as u8])
                }
            },
            Message::HeadPose(frame) => out.extend_from_slice(frame),
            Message::Heartbeat(None) => {}
            Message::Heartbeat(Some(s)) => {
                out.push(matches!(s.mode, VehicleMode::Uav) as u8);
                out.extend_from_slice(&s.pan_cd.to_be_bytes());
                out.extend_from_slice(&s.tilt_cd.to_be_bytes());
                out.push(s.estop as u8);
            }
        }
        out
    }

    /// Parses a payload of the given kind. Error offsets are relative to the
    /// start of the enclosing envelope.
    pub fn from_payload(kind: MessageKind, p: &[u8]) -> Result<Self, ProtocolError> {
        let at = |i: usize| HEADER_LEN + i;
        Ok(match kind {
            MessageKind::VideoFrame => Message::VideoFrame(VideoFrame::decode(p)?),
            MessageKind::Detections => {
                if p.len() < 6 {
                    return Err(ProtocolError::malformed(
                        at(p.len()),
                        "short detections header",
                    ));
                }
                let frame_seq = u32::from_be_bytes([p[0], p[1], p[2], p[3]]);
                let n = u16::from_be_bytes([p[4], p[5]]) as usize;
                if p.len() != 6 + n * DET_RECORD_LEN {
                    return Err(ProtocolError::malformed(
                        at(4),
                        format!(
                            "{n} detections need {} bytes, have {}",
                            6 + n * DET_RECORD_LEN,
                            p.len()
                        ),
                    ));
                }
                let mut items = Vec::with_capacity(n);
                for (i, r) in p[6..].chunks_exact(DET_RECORD_LEN).enumerate() {
                    let base = 6 + i * DET_RECORD_LEN;
                    let u = |k: usize| u16::from_be_bytes([r[k], r[k + 1]]);
                    let color = match r[12] {
                        0 => VerdictColor::Green,
                        1 => VerdictColor::Red,
                        2 => VerdictColor::Unknown,
                        c => {
                            return Err(ProtocolError::malformed(
                                at(base + 12),
                                format!("bad verdict color {c}"),
                            ))
                        }
                    };
                    if r[13] > 100 {
                        return Err(ProtocolError::malformed(at(base + 13), "percent above 100"));
                    }
                    if r[15] != 0 {
                        return Err(ProtocolError::malformed(at(base + 15), "reserved byte set"));
                    }
                    let score = f32::from_bits(u32::from_be_bytes([r[8], r[9], r[10], r[11]]));
                    if !score.is_finite() {
                        return Err(ProtocolError::malformed(at(base + 8), "non-finite score"));
                    }
                    items.push(DetectionRecord {
                        x: u(0),
                        y: u(2),
                        w: u(4),
                        h: u(6),
                        score,
                        color,
                        percent: r[13],
                        label: if r[14] == 0xFF { None } else { Some(r[14]) },
                    });
                }
                Message::Detections(DetectionsMsg { frame_seq, items })
            }
            MessageKind::Control => {
                let cmd = match p {
                    [CTL_MODE, 0] => ControlCommand::ModeSwitch(VehicleMode::Ugv),
                    [CTL_MODE, 1] => ControlCommand::ModeSwitch(VehicleMode::Uav),
                    [CTL_DRIVE, l, r] => ControlCommand::Drive {
                        left: *l as i8,
                        right: *r as i8,
                    },
                    [CTL_ESTOP, e @ (0 | 1)] => ControlCommand::EStop { engaged: *e == 1 },
                    [] => return Err(ProtocolError::malformed(at(0), "empty control payload")),
                    [c, ..] => {
                        return Err(ProtocolError::malformed(
                            at(0),
                            format!("bad control command 0x{c:02X}"),
                        ))
                    }
                };
                Message::Control(cmd)
            }
            MessageKind::HeadPose => {
                let inner = decode_link_frame(p)
                    .map_err(|e| ProtocolError::malformed(at(0), e.to_string()))?;
                parse_head_pose(&inner)
                    .map_err(|e| ProtocolError::malformed(at(3), e.to_string()))?;
                Message::HeadPose(p.to_vec())
            }
            MessageKind::Heartbeat => match p {
                [] => Message::Heartbeat(None),
                [mode @ (0 | 1), a, b, c, d, e @ (0 | 1)] => {
                    Message::Heartbeat(Some(RobotStatus {
                        mode: if *mode == 1 {
                            VehicleMode::Uav
                        } else {
                            VehicleMode::Ugv
                        },
                        pan_cd: i16::from_be_bytes([*a, *b]),
                        tilt_cd: i16::from_be_bytes([*c, *d]),
                        estop: *e == 1,
                    }))
                }
                _ => return Err(ProtocolError::malformed(at(0), "bad heartbeat payload")),
            },
        })
    }

    /// Head pose and sequence carried by a HEAD_POSE message.
    pub fn head_pose(&self) -> Option<(HeadPose, u32)> {
        match self {
            Message::HeadPose(frame) => {
                let inner = decode_link_frame(frame).ok()?;
                parse_head_pose(&inner).ok()
            }
            _ => None,
        }
    }
}

/// Encodes a typed message into a complete envelope.
pub fn encode_message(
    msg: &Message,
    sequence: u32,
    timestamp_us: u64,
) -> Result<Vec<u8>, ProtocolError> {
    encode_envelope(msg.kind(), 0, &msg.to_payload(), sequence, timestamp_us)
}

/// Decodes a complete envelope into its header fields and typed message.
pub fn decode_message(bytes: &[u8]) -> Result<(Envelope, Message), ProtocolError> {
    let env = decode_envelope(bytes)?;
    let msg = Message::from_payload(env.kind, &env.payload)?;
    Ok((env, msg))
}

impl Envelope {
    pub fn message(&self) -> Result<Message, ProtocolError> {
        Message::from_payload(self.kind, &self.payload)
    }

    pub fn from_message(msg: &Message, sequence: u32, timestamp_us: u64) -> Self {
        Envelope {
            kind: msg.kind(),
            flags: 0,
            sequence,
            timestamp_us,
            payload: msg.to_payload(),
        }
    }
}
