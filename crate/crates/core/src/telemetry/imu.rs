use super::TelemetryError;

/// Accelerometer magnitudes below this (in g) are treated as free fall.
pub const MIN_ACCEL_G: f64 = 0.5;
/// Horizontal magnetic field magnitude below which yaw is undefined.
pub const MIN_HORIZONTAL_FIELD: f64 = 1e-3;

/// One raw reading from the head-mounted IMU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    /// Acceleration in g.
    pub accel: [f64; 3],
    /// Magnetic field in μT.
    pub mag: [f64; 3],
    pub timestamp_us: u64,
}

/// Operator head orientation in degrees: pitch in [-90, 90], yaw in
/// (-180, 180].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadPose {
    pub pitch: f64,
    pub yaw: f64,
    pub timestamp_us: u64,
}

/// Wraps an angle into (-180, 180].
pub fn normalize_yaw(deg: f64) -> f64 {
    let mut a = deg % 360.0;
    if a <= -180.0 {
        a += 360.0;
    } else if a > 180.0 {
        a -= 360.0;
    }
    a
}

/// Signed shortest rotation from `from` to `to`, in (-180, 180].
pub fn shortest_arc(from: f64, to: f64) -> f64 {
    normalize_yaw(to - from)
}

pub fn pitch_from_accel(accel: [f64; 3]) -> Result<f64, TelemetryError> {
    let [ax, ay, az] = accel;
    if !(ax.is_finite() && ay.is_finite() && az.is_finite()) {
        return Err(TelemetryError::UnreliableSample("non-finite acceleration"));
    }
    if (ax * ax + ay * ay + az * az).sqrt() <= MIN_ACCEL_G {
        return Err(TelemetryError::UnreliableSample(
            "acceleration magnitude too low",
        ));
    }
    Ok((-ax).atan2((ay * ay + az * az).sqrt()).to_degrees())
}

/// Heading from the horizontal field components; assumes a level head, so
/// the vertical component is ignored.
pub fn yaw_from_mag(mag: [f64; 3]) -> Result<f64, TelemetryError> {
    let [mx, my, mz] = mag;
    if !(mx.is_finite() && my.is_finite() && mz.is_finite()) {
        return Err(TelemetryError::UnreliableSample(
            "non-finite magnetic field",
        ));
    }
    if (mx * mx + my * my).sqrt() <= MIN_HORIZONTAL_FIELD {
        return Err(TelemetryError::UnreliableSample(
            "horizontal field too weak",
        ));
    }
    Ok(normalize_yaw((-my).atan2(mx).to_degrees()))
}

impl ImuSample {
    pub fn pose(&self) -> Result<HeadPose, TelemetryError> {
        Ok(HeadPose {
            pitch: pitch_from_accel(self.accel)?,
            yaw: yaw_from_mag(self.mag)?,
            timestamp_us: self.timestamp_us,
        })
    }
}

/// Mean direction of a set of angles, in (-180, 180].
pub fn circular_mean_deg(angles: impl IntoIterator<Item = f64>) -> f64 {
    let (s, c) = angles.into_iter().fold((0.0, 0.0), |(s, c), a: f64| {
        let r = a.to_radians();
        (s + r.sin(), c + r.cos())
    });
    normalize_yaw(s.atan2(c).to_degrees())
}

/// Rest orientation captured at start-up; later poses are reported relative
/// to it.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CalibrationOffsets {
    pub pitch: f64,
    pub yaw: f64,
}

impl CalibrationOffsets {
    pub fn apply(&self, pose: &HeadPose) -> HeadPose {
        HeadPose {
            pitch: (pose.pitch - self.pitch).clamp(-90.0, 90.0),
            yaw: shortest_arc(self.yaw, pose.yaw),
            timestamp_us: pose.timestamp_us,
        }
    }
}

/// Averages the first `n` reliable samples (pitch arithmetically, yaw on
/// the circle). Unreliable samples are skipped.
pub fn calibrate(samples: &[ImuSample], n: usize) -> Result<CalibrationOffsets, TelemetryError> {
    let needed = n.max(10);
    let poses: Vec<HeadPose> = samples
        .iter()
        .filter_map(|s| s.pose().ok())
        .take(needed)
        .collect();
    if poses.len() < needed {
        return Err(TelemetryError::InsufficientCalibration {
            needed,
            got: poses.len(),
        });
    }
    let pitch = poses.iter().map(|p| p.pitch).sum::<f64>() / poses.len() as f64;
    let yaw = circular_mean_deg(poses.iter().map(|p| p.yaw));
    Ok(CalibrationOffsets { pitch, yaw })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-9;

    #[test]
    fn pitch_examples() {
        assert!((pitch_from_accel([0.0, 0.0, 1.0]).unwrap()).abs() < TOL);
        assert!((pitch_from_accel([-1.0, 0.0, 0.0]).unwrap() - 90.0).abs() < TOL);
        let a = 30f64.to_radians();
        let p = pitch_from_accel([-a.sin(), 0.0, a.cos()]).unwrap();
        assert!((p - 30.0).abs() < TOL, "{p}");
    }

    #[test]
    fn free_fall_is_unreliable() {
        assert!(matches!(
            pitch_from_accel([0.1, 0.1, 0.1]),
            Err(TelemetryError::UnreliableSample(_))
        ));
        assert!(pitch_from_accel([f64::NAN, 0.0, 1.0]).is_err());
    }

    #[test]
    fn yaw_examples() {
        assert!(yaw_from_mag([1.0, 0.0, 0.0]).unwrap().abs() < TOL);
        assert!((yaw_from_mag([0.0, -1.0, 0.0]).unwrap() - 90.0).abs() < TOL);
        let a = 40f64.to_radians();
        let y = yaw_from_mag([a.cos(), -a.sin(), 0.3]).unwrap();
        assert!((y - 40.0).abs() < TOL);
        assert_eq!(yaw_from_mag([-1.0, 0.0, 0.0]).unwrap(), 180.0);
        assert_eq!(yaw_from_mag([-1.0, -0.0, 0.0]).unwrap(), 180.0);
    }

    #[test]
    fn degenerate_field_is_unreliable() {
        assert!(yaw_from_mag([0.0, 0.0, 45.0]).is_err());
    }

    #[test]
    fn normalize_range() {
        assert_eq!(normalize_yaw(180.0), 180.0);
        assert_eq!(normalize_yaw(-180.0), 180.0);
        assert_eq!(normalize_yaw(540.0), 180.0);
        assert!((normalize_yaw(359.0) + 1.0).abs() < TOL);
        assert!((shortest_arc(179.0, -179.0) - 2.0).abs() < TOL);
    }

    fn sample(pitch: f64, yaw: f64, t: u64) -> ImuSample {
        let (p, y) = (pitch.to_radians(), yaw.to_radians());
        ImuSample {
            accel: [-p.sin(), 0.0, p.cos()],
            mag: [30.0 * y.cos(), -30.0 * y.sin(), -20.0],
            timestamp_us: t,
        }
    }

    #[test]
    fn identical_samples_calibrate_to_that_pose() {
        let samples: Vec<_> = (0..12).map(|i| sample(5.0, -30.0, i)).collect();
        let off = calibrate(&samples, 10).unwrap();
        assert!((off.pitch - 5.0).abs() < TOL);
        assert!((off.yaw + 30.0).abs() < TOL);
        let rel = off.apply(&samples[11].pose().unwrap());
        assert!(rel.pitch.abs() < TOL && rel.yaw.abs() < TOL);
    }

    #[test]
    fn circular_mean_across_the_seam() {
        let mut samples: Vec<_> = (0..5).map(|i| sample(0.0, 179.0, i)).collect();
        samples.extend((5..10).map(|i| sample(0.0, -179.0, i)));
        let off = calibrate(&samples, 10).unwrap();
        assert!((off.yaw.abs() - 180.0).abs() < 1e-9, "{}", off.yaw);
    }

    #[test]
    fn too_few_samples() {
        let samples: Vec<_> = (0..9).map(|i| sample(0.0, 0.0, i)).collect();
        assert_eq!(
            calibrate(&samples, 10),
            Err(TelemetryError::InsufficientCalibration { needed: 10, got: 9 })
        );
        let samples: Vec<_> = (0..15).map(|i| sample(0.0, 0.0, i)).collect();
        assert!(calibrate(&samples, 20).is_err());
    }
}
