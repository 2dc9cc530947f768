//! Head-pose payload carried inside a link frame:
//! `0x10 | pitch i16 | yaw i16 | seq u32`, big-endian, angles in
//! centidegrees.

use super::HeadPose;

pub const HEAD_POSE_TYPE: u8 = 0x10;
pub const HEAD_POSE_PAYLOAD_LEN: usize = 9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PayloadError {
    #[error("unknown payload type 0x{0:02X}")]
    UnknownType(u8),
    #[error("wrong payload length {got}, expected {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("pose out of range: pitch {pitch}, yaw {yaw}")]
    OutOfRange { pitch: f64, yaw: f64 },
}

fn centidegrees(v: f64) -> i16 {
    (v * 100.0).round() as i16
}

pub fn head_pose_payload(
    pose: &HeadPose,
    seq: u32,
) -> Result<[u8; HEAD_POSE_PAYLOAD_LEN], PayloadError> {
    let in_range = (-90.0..=90.0).contains(&pose.pitch) && pose.yaw > -180.0 && pose.yaw <= 180.0;
    if !in_range {
        return Err(PayloadError::OutOfRange {
            pitch: pose.pitch,
            yaw: pose.yaw,
        });
    }
    let mut out = [0u8; HEAD_POSE_PAYLOAD_LEN];
    out[0] = HEAD_POSE_TYPE;
    out[1..3].copy_from_slice(&centidegrees(pose.pitch).to_be_bytes());
    out[3..5].copy_from_slice(&centidegrees(pose.yaw).to_be_bytes());
    out[5..9].copy_from_slice(&seq.to_be_bytes());
    Ok(out)
}

/// Returns the pose (timestamp zero, the payload carries none) and its
/// sequence number.
pub fn parse_head_pose(bytes: &[u8]) -> Result<(HeadPose, u32), PayloadError> {
    if let Some(&t) = bytes.first() {
        if t != HEAD_POSE_TYPE {
            return Err(PayloadError::UnknownType(t));
        }
    }
    if bytes.len() != HEAD_POSE_PAYLOAD_LEN {
        return Err(PayloadError::WrongLength {
            expected: HEAD_POSE_PAYLOAD_LEN,
            got: bytes.len(),
        });
    }
    let pitch = i16::from_be_bytes([bytes[1], bytes[2]]) as f64 / 100.0;
    let yaw = i16::from_be_bytes([bytes[3], bytes[4]]) as f64 / 100.0;
    let seq = u32::from_be_bytes([bytes[5], bytes[6], bytes[7], bytes[8]]);
    Ok((
        HeadPose {
            pitch,
            yaw,
            timestamp_us: 0,
        },
        seq,
    ))
}
