//! Turns simulated headset IMU readings into pan-tilt commands: calibrate at
//! rest, low-pass filter, then frame each pose for the serial link.
//!
//! ```text
//! cargo run --release --example head_tracking
//! ```

use teleop::telemetry::{
    calibrate, decode_link_frame, encode_link_frame, head_pose_payload, parse_head_pose,
    pose_to_pan_tilt, HeadTracker, ImuSample, DEFAULT_ALPHA, DEFAULT_SAMPLE_RATE_HZ,
};

/// Accelerometer and magnetometer readings for a head at `pitch`, `yaw`.
fn imu(pitch: f64, yaw: f64, timestamp_us: u64) -> ImuSample {
    let (p, y) = (pitch.to_radians(), yaw.to_radians());
    ImuSample {
        accel: [-p.sin(), 0.0, p.cos()],
        mag: [30.0 * y.cos(), -30.0 * y.sin(), -20.0],
        timestamp_us,
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dt_us = (1e6 / DEFAULT_SAMPLE_RATE_HZ) as u64;
    // The operator sits facing 170° with the head tipped 5° down.
    let rest: Vec<ImuSample> = (0..50).map(|i| imu(5.0, 170.0, i * dt_us)).collect();
    let offsets = calibrate(&rest, 50)?;
    println!(
        "calibration offsets: pitch {:.2} yaw {:.2}",
        offsets.pitch, offsets.yaw
    );

    let mut tracker = HeadTracker::new(offsets, DEFAULT_ALPHA);
    // Still for a moment, then a 30° turn that crosses the ±180° seam.
    for i in 0..30u64 {
        let yaw = if i < 5 { 170.0 } else { -160.0 };
        let s = imu(5.0, yaw, (50 + i) * dt_us);
        let Some(pose) = tracker.update(&s) else {
            continue;
        };
        let cmd = pose_to_pan_tilt(&pose, i as u32);
        if i % 3 == 0 {
            let frame = encode_link_frame(&head_pose_payload(&pose, i as u32)?)?;
            let hex: Vec<String> = frame.iter().map(|b| format!("{b:02X}")).collect();
            println!(
                "t={:>3} ms pan {:>7.3} tilt {:>6.3}  link {}",
                pose.timestamp_us / 1000,
                cmd.pan,
                cmd.tilt,
                hex.join(" ")
            );
            let (back, seq) = parse_head_pose(&decode_link_frame(&frame)?)?;
            assert_eq!(seq, i as u32);
            assert!((back.yaw - pose.yaw).abs() <= 0.005);
        }
    }
    Ok(())
}
