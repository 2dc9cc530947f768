//! Envelope framing. All integers are big-endian.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "TSP1"
//!      4     1  msg_type
//!      5     1  flags
//!      6     4  sequence
//!     10     8  timestamp_us
//!     18     4  payload_len
//!     22     n  payload
//!   22+n     4  crc32 (IEEE) over bytes 4 .. 22+n
//! ```

use std::fmt;
use std::io::{self, Read, Write};

use super::MessageKind;

pub const MAGIC: [u8; 4] = *b"TSP1";
pub const HEADER_LEN: usize = 22;
pub const TRAILER_LEN: usize = 4;
/// Largest accepted payload (16 MiB).
pub const MAX_PAYLOAD: usize = 16 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub kind: MessageKind,
    pub flags: u8,
    pub sequence: u32,
    pub timestamp_us: u64,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProtocolErrorKind {
    BadMagic,
    UnknownType(u8),
    PayloadTooLarge(u32),
    Truncated { needed: usize, available: usize },
    CrcMismatch { expected: u32, found: u32 },
    TrailingBytes(usize),
    MalformedPayload(String),
}

/// A decode failure and the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ProtocolError {
    pub kind: ProtocolErrorKind,
    pub offset: usize,
}

impl ProtocolError {
    pub(crate) fn new(kind: ProtocolErrorKind, offset: usize) -> Self {
        Self { kind, offset }
    }

    pub(crate) fn malformed(offset: usize, msg: impl Into<String>) -> Self {
        Self::new(ProtocolErrorKind::MalformedPayload(msg.into()), offset)
    }
}

impl fmt::Display for ProtocolError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ProtocolErrorKind::BadMagic => write!(f, "bad magic")?,
            ProtocolErrorKind::UnknownType(t) => write!(f, "unknown message type 0x{t:02X}")?,
            ProtocolErrorKind::PayloadTooLarge(n) => {
                write!(f, "payload length {n} exceeds 16 MiB")?
            }
            ProtocolErrorKind::Truncated { needed, available } => {
                write!(f, "truncated: need {needed} bytes, have {available}")?
            }
            ProtocolErrorKind::CrcMismatch { expected, found } => write!(
                f,
                "crc mismatch: computed 0x{expected:08X}, frame carries 0x{found:08X}"
            )?,
            ProtocolErrorKind::TrailingBytes(n) => write!(f, "{n} trailing bytes")?,
            ProtocolErrorKind::MalformedPayload(m) => write!(f, "malformed payload: {m}")?,
        }
        write!(f, " at byte offset {}", self.offset)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

pub fn crc32(bytes: &[u8]) -> u32 {
    crc32fast::hash(bytes)
}

pub fn encode_envelope(
    kind: MessageKind,
    flags: u8,
    payload: &[u8],
    sequence: u32,
    timestamp_us: u64,
) -> Result<Vec<u8>, ProtocolError> {
    if payload.len() > MAX_PAYLOAD {
        return Err(ProtocolError::new(
            ProtocolErrorKind::PayloadTooLarge(payload.len().min(u32::MAX as usize) as u32),
            18,
        ));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + TRAILER_LEN);
    out.extend_from_slice(&MAGIC);
    out.push(kind as u8);
    out.push(flags);
    out.extend_from_slice(&sequence.to_be_bytes());
    out.extend_from_slice(&timestamp_us.to_be_bytes());
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.extend_from_slice(payload);
    let crc = crc32(&out[4..]);
    out.extend_from_slice(&crc.to_be_bytes());
    Ok(out)
}

impl Envelope {
    pub fn encode(&self) -> Result<Vec<u8>, ProtocolError> {
        encode_envelope(
            self.kind,
            self.flags,
            &self.payload,
            self.sequence,
            self.timestamp_us,
        )
    }
}

struct Header {
    kind: MessageKind,
    flags: u8,
    sequence: u32,
    timestamp_us: u64,
    payload_len: usize,
}

fn parse_header(h: &[u8]) -> Result<Header, ProtocolError> {
    debug_assert!(h.len() >= HEADER_LEN);
    if h[0..4] != MAGIC {
        return Err(ProtocolError::new(ProtocolErrorKind::BadMagic, 0));
    }
    let kind = MessageKind::from_u8(h[4])
        .ok_or_else(|| ProtocolError::new(ProtocolErrorKind::UnknownType(h[4]), 4))?;
    let payload_len = u32::from_be_bytes([h[18], h[19], h[20], h[21]]);
    if payload_len as usize > MAX_PAYLOAD {
        return Err(ProtocolError::new(
            ProtocolErrorKind::PayloadTooLarge(payload_len),
            18,
        ));
    }
    Ok(Header {
        kind,
        flags: h[5],
        sequence: u32::from_be_bytes([h[6], h[7], h[8], h[9]]),
        timestamp_us: u64::from_be_bytes(h[10..18].try_into().expect("8 bytes")),
        payload_len: payload_len as usize,
    })
}

fn check_crc(covered: &[u8], trailer: &[u8], offset: usize) -> Result<(), ProtocolError> {
    let found = u32::from_be_bytes(trailer.try_into().expect("4 bytes"));
    let expected = crc32(covered);
    if found != expected {
        return Err(ProtocolError::new(
            ProtocolErrorKind::CrcMismatch { expected, found },
            offset,
        ));
    }
    Ok(())
}

/// Decodes the envelope at the front of `buf` and reports how many bytes it
/// occupied.
pub fn decode_envelope_prefix(buf: &[u8]) -> Result<(Envelope, usize), ProtocolError> {
    let truncated = |needed: usize| {
        ProtocolError::new(
            ProtocolErrorKind::Truncated {
                needed,
                available: buf.len(),
            },
            buf.len(),
        )
    };
    if buf.len() < 4 {
        if buf[..] != MAGIC[..buf.len()] {
            return Err(ProtocolError::new(ProtocolErrorKind::BadMagic, 0));
        }
        return Err(truncated(HEADER_LEN));
    }
    if buf[0..4] != MAGIC {
        return Err(ProtocolError::new(ProtocolErrorKind::BadMagic, 0));
    }
    if buf.len() < HEADER_LEN {
        return Err(truncated(HEADER_LEN));
    }
    let h = parse_header(&buf[..HEADER_LEN])?;
    let total = HEADER_LEN + h.payload_len + TRAILER_LEN;
    if buf.len() < total {
        return Err(truncated(total));
    }
    let crc_at = HEADER_LEN + h.payload_len;
    check_crc(&buf[4..crc_at], &buf[crc_at..total], crc_at)?;
    Ok((
        Envelope {
            kind: h.kind,
            flags: h.flags,
            sequence: h.sequence,
            timestamp_us: h.timestamp_us,
            payload: buf[HEADER_LEN..crc_at].to_vec(),
        },
        total,
    ))
}

/// Decodes a buffer that holds exactly one envelope.
pub fn decode_envelope(buf: &[u8]) -> Result<Envelope, ProtocolError> {
    let (env, used) = decode_envelope_prefix(buf)?;
    if used != buf.len() {
        return Err(ProtocolError::new(
            ProtocolErrorKind::TrailingBytes(buf.len() - used),
            used,
        ));
    }
    Ok(env)
}

/// Reads one envelope from a byte stream. Returns `Ok(None)` on a clean end
/// of stream between envelopes.
pub fn read_envelope<R: Read>(r: &mut R) -> Result<Option<Envelope>, TransportError> {
    let mut header = [0u8; HEADER_LEN];
    let mut got = 0;
    while got < HEADER_LEN {
        match r.read(&mut header[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => {
                return Err(ProtocolError::new(
                    ProtocolErrorKind::Truncated {
                        needed: HEADER_LEN,
                        available: got,
                    },
                    got,
                )
                .into())
            }
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let h = parse_header(&header)?;
    let mut rest = vec![0u8; h.payload_len + TRAILER_LEN];
    r.read_exact(&mut rest).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            TransportError::Protocol(ProtocolError::new(
                ProtocolErrorKind::Truncated {
                    needed: HEADER_LEN + rest.len(),
                    available: HEADER_LEN,
                },
                HEADER_LEN,
            ))
        } else {
            e.into()
        }
    })?;
    let crc_at = h.payload_len;
    let mut hasher = crc32fast::Hasher::new();
    hasher.update(&header[4..]);
    hasher.update(&rest[..crc_at]);
    let expected = hasher.finalize();
    let found = u32::from_be_bytes(rest[crc_at..].try_into().expect("4 bytes"));
    if expected != found {
        return Err(ProtocolError::new(
            ProtocolErrorKind::CrcMismatch { expected, found },
            HEADER_LEN + crc_at,
        )
        .into());
    }
    rest.truncate(crc_at);
    Ok(Some(Envelope {
        kind: h.kind,
        flags: h.flags,
        sequence: h.sequence,
        timestamp_us: h.timestamp_us,
        payload: rest,
    }))
}

pub fn write_envelope<W: Write>(w: &mut W, env: &Envelope) -> Result<(), TransportError> {
    w.write_all(&env.encode()?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crc_check_vector() {
        assert_eq!(crc32(b"123456789"), 0xCBF43926);
    }

    #[test]
    fn heartbeat_round_trip() {
        let bytes = encode_envelope(MessageKind::Heartbeat, 0, &[], 7, 99).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + TRAILER_LEN);
        let env = decode_envelope(&bytes).unwrap();
        assert_eq!(env.kind, MessageKind::Heartbeat);
        assert_eq!((env.sequence, env.timestamp_us), (7, 99));
        assert!(env.payload.is_empty());
    }

    #[test]
    fn header_layout() {
        let bytes = encode_envelope(
            MessageKind::Control,
            0xA5,
            &[1, 2],
            0x01020304,
            0x1122334455667788,
        )
        .unwrap();
        assert_eq!(&bytes[0..4], b"TSP1");
        assert_eq!(bytes[4], 0x03);
        assert_eq!(bytes[5], 0xA5);
        assert_eq!(&bytes[6..10], &[1, 2, 3, 4]);
        assert_eq!(
            &bytes[10..18],
            &[0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88]
        );
        assert_eq!(&bytes[18..22], &[0, 0, 0, 2]);
        assert_eq!(&bytes[22..24], &[1, 2]);
        let crc = crc32(&bytes[4..24]);
        assert_eq!(&bytes[24..28], &crc.to_be_bytes());
    }

    #[test]
    fn distinct_errors_with_offsets() {
        let good = encode_envelope(MessageKind::Heartbeat, 0, &[], 1, 1).unwrap();

        let mut bad = good.clone();
        bad[1] = b'X';
        assert_eq!(
            decode_envelope(&bad).unwrap_err().kind,
            ProtocolErrorKind::BadMagic
        );

        let mut bad = good.clone();
        bad[4] = 0x77;
        let e = decode_envelope(&bad).unwrap_err();
        assert_eq!(
            (e.kind, e.offset),
            (ProtocolErrorKind::UnknownType(0x77), 4)
        );

        let mut bad = good.clone();
        bad[24] ^= 1;
        let e = decode_envelope(&bad).unwrap_err();
        assert!(matches!(e.kind, ProtocolErrorKind::CrcMismatch { .. }));
        assert_eq!(e.offset, 22);

        let e = decode_envelope(&good[..10]).unwrap_err();
        assert!(matches!(e.kind, ProtocolErrorKind::Truncated { .. }));

        let mut bad = good.clone();
        bad[18] = 0xFF;
        let e = decode_envelope(&bad).unwrap_err();
        assert_eq!(e.offset, 18);
        assert!(matches!(e.kind, ProtocolErrorKind::PayloadTooLarge(_)));
        assert!(e.to_string().contains("offset 18"));
    }

    #[test]
    fn stream_reader() {
        let mut buf = encode_envelope(MessageKind::Heartbeat, 0, &[], 1, 1).unwrap();
        buf.extend(encode_envelope(MessageKind::Control, 0, &[3, 1], 2, 2).unwrap());
        let mut cur = io::Cursor::new(buf);
        assert_eq!(read_envelope(&mut cur).unwrap().unwrap().sequence, 1);
        assert_eq!(
            read_envelope(&mut cur).unwrap().unwrap().payload,
            vec![3, 1]
        );
        assert!(read_envelope(&mut cur).unwrap().is_none());

        let buf = encode_envelope(MessageKind::Heartbeat, 0, &[], 1, 1).unwrap();
        let mut cur = io::Cursor::new(buf[..25].to_vec());
        assert!(matches!(
            read_envelope(&mut cur),
            Err(TransportError::Protocol(_))
        ));
    }

    #[test]
    fn oversize_payload_refused() {
        let big = vec![0u8; MAX_PAYLOAD + 1];
        assert!(encode_envelope(MessageKind::VideoFrame, 0, &big, 0, 0).is_err());
    }
}
