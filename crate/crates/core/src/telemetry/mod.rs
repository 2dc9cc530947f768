//! Operator head tracking and the radio link that carries it.
//!
//! IMU samples become head poses (accelerometer pitch, magnetometer yaw),
//! are zeroed against a calibration taken at rest, smoothed with an
//! exponential moving average and mapped onto pan-tilt servo commands. The
//! link framing is the byte-exact wire contract between the operator side
//! and the robot.

mod filter;
mod imu;
mod link;
mod payload;

pub use filter::{HeadTracker, LowPassState, DEFAULT_ALPHA, DEFAULT_SAMPLE_RATE_HZ};
pub use imu::{
    calibrate, circular_mean_deg, normalize_yaw, pitch_from_accel, shortest_arc, yaw_from_mag,
    CalibrationOffsets, HeadPose, ImuSample, MIN_ACCEL_G, MIN_HORIZONTAL_FIELD,
};
pub use link::{
    decode_link_frame, encode_link_frame, next_link_frame, split_link_frames, LinkError,
    LINK_START_BYTE, MAX_LINK_PAYLOAD,
};
pub use payload::{
    head_pose_payload, parse_head_pose, PayloadError, HEAD_POSE_PAYLOAD_LEN, HEAD_POSE_TYPE,
};

/// Servo travel limits, degrees.
pub const PAN_LIMIT_DEG: f64 = 90.0;
pub const TILT_LIMIT_DEG: f64 = 45.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanTiltCommand {
    pub pan: f64,
    pub tilt: f64,
    pub seq: u32,
}

/// Yaw drives pan and pitch drives tilt, each clamped to the servo range.
pub fn pose_to_pan_tilt(pose: &HeadPose, seq: u32) -> PanTiltCommand {
    let clamp = |v: f64, lim: f64| if v.is_nan() { 0.0 } else { v.clamp(-lim, lim) };
    PanTiltCommand {
        pan: clamp(pose.yaw, PAN_LIMIT_DEG),
        tilt: clamp(pose.pitch, TILT_LIMIT_DEG),
        seq,
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TelemetryError {
    #[error("unreliable sample: {0}")]
    UnreliableSample(&'static str),
    #[error("insufficient calibration: need {needed} reliable samples, got {got}")]
    InsufficientCalibration { needed: usize, got: usize },
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pose(pitch: f64, yaw: f64) -> HeadPose {
        HeadPose {
            pitch,
            yaw,
            timestamp_us: 0,
        }
    }

    #[test]
    fn centre_maps_to_centre() {
        let c = pose_to_pan_tilt(&pose(0.0, 0.0), 7);
        assert_eq!((c.pan, c.tilt, c.seq), (0.0, 0.0, 7));
    }

    #[test]
    fn clamps_to_servo_range() {
        assert_eq!(pose_to_pan_tilt(&pose(0.0, 120.0), 0).pan, 90.0);
        assert_eq!(pose_to_pan_tilt(&pose(-50.0, 0.0), 0).tilt, -45.0);
        assert_eq!(pose_to_pan_tilt(&pose(80.0, -179.0), 0).tilt, 45.0);
        assert_eq!(pose_to_pan_tilt(&pose(80.0, -179.0), 0).pan, -90.0);
    }
}
