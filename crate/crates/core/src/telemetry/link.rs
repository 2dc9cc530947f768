//! API-style serial link frames:
//!
//! ```text
//! 0x7E | len_hi len_lo | payload[len] | checksum
//! ```
//!
//! `checksum = 0xFF - (sum(payload) mod 256)`, so a valid frame satisfies
//! `(sum(payload) + checksum) mod 256 == 0xFF`.

pub const LINK_START_BYTE: u8 = 0x7E;
pub const MAX_LINK_PAYLOAD: usize = u16::MAX as usize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinkError {
    #[error("bad start byte 0x{0:02X}")]
    BadStartByte(u8),
    #[error("truncated frame: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("checksum mismatch: frame carries 0x{found:02X}, payload implies 0x{expected:02X}")]
    ChecksumMismatch { expected: u8, found: u8 },
    #[error("{0} trailing bytes after frame")]
    TrailingBytes(usize),
    #[error("payload of {0} bytes exceeds 65535")]
    PayloadTooLong(usize),
}

fn checksum(payload: &[u8]) -> u8 {
    0xFF - payload.iter().fold(0u8, |acc, &b| acc.wrapping_add(b))
}

pub fn encode_link_frame(payload: &[u8]) -> Result<Vec<u8>, LinkError> {
    if payload.len() > MAX_LINK_PAYLOAD {
        return Err(LinkError::PayloadTooLong(payload.len()));
    }
    let mut out = Vec::with_capacity(payload.len() + 4);
    out.push(LINK_START_BYTE);
    out.extend_from_slice(&(payload.len() as u16).to_be_bytes());
    out.extend_from_slice(payload);
    out.push(checksum(payload));
    Ok(out)
}

/// Decodes the frame at the start of `buf`, returning its payload and the
/// number of bytes consumed.
pub fn next_link_frame(buf: &[u8]) -> Result<(&[u8], usize), LinkError> {
    let first = *buf.first().ok_or(LinkError::Truncated {
        needed: 4,
        available: 0,
    })?;
    if first != LINK_START_BYTE {
        return Err(LinkError::BadStartByte(first));
    }
    if buf.len() < 3 {
        return Err(LinkError::Truncated {
            needed: 4,
            available: buf.len(),
        });
    }
    let len = u16::from_be_bytes([buf[1], buf[2]]) as usize;
    let total = len + 4;
    if buf.len() < total {
        return Err(LinkError::Truncated {
            needed: total,
            available: buf.len(),
        });
    }
    let payload = &buf[3..3 + len];
    let found = buf[3 + len];
    let expected = checksum(payload);
    if found != expected {
        return Err(LinkError::ChecksumMismatch { expected, found });
    }
    Ok((payload, total))
}

/// Decodes a buffer holding exactly one frame.
pub fn decode_link_frame(buf: &[u8]) -> Result<Vec<u8>, LinkError> {
    let (payload, used) = next_link_frame(buf)?;
    if used != buf.len() {
        return Err(LinkError::TrailingBytes(buf.len() - used));
    }
    Ok(payload.to_vec())
}

/// Splits a replay buffer of back-to-back frames into payloads.
pub fn split_link_frames(mut buf: &[u8]) -> Result<Vec<Vec<u8>>, LinkError> {
    let mut out = Vec::new();
    while !buf.is_empty() {
        let (payload, used) = next_link_frame(buf)?;
        out.push(payload.to_vec());
        buf = &buf[used..];
    }
    Ok(out)
}
