use super::{normalize_yaw, shortest_arc, CalibrationOffsets, HeadPose, ImuSample};

pub const DEFAULT_ALPHA: f64 = 0.2;
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 50.0;

/// Exponential moving average over pitch and yaw. Yaw steps along the
/// shortest arc so the output never swings the long way round at ±180°.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPassState {
    alpha: f64,
    current: HeadPose,
}

impl LowPassState {
    /// Seeds the filter with its first sample. `alpha` is clamped into
    /// (0, 1].
    pub fn new(alpha: f64, first: HeadPose) -> Self {
        let alpha = if alpha.is_nan() {
            DEFAULT_ALPHA
        } else {
            alpha.clamp(f64::MIN_POSITIVE, 1.0)
        };
        Self {
            alpha,
            current: first,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn current(&self) -> HeadPose {
        self.current
    }

    pub fn step(&mut self, pose: &HeadPose) -> HeadPose {
        let dp = pose.pitch - self.current.pitch;
        let dy = shortest_arc(self.current.yaw, pose.yaw);
        self.current = HeadPose {
            pitch: (self.current.pitch + self.alpha * dp).clamp(-90.0, 90.0),
            yaw: normalize_yaw(self.current.yaw + self.alpha * dy),
            timestamp_us: pose.timestamp_us,
        };
        self.current
    }
}

/// Calibration plus smoothing: raw IMU samples in, filtered relative poses
/// out. Unreliable samples are skipped and the last output is held.
#[derive(Debug, Clone)]
pub struct HeadTracker {
    offsets: CalibrationOffsets,
    alpha: f64,
    filter: Option<LowPassState>,
}

impl HeadTracker {
    pub fn new(offsets: CalibrationOffsets, alpha: f64) -> Self {
        Self {
            offsets,
            alpha,
            filter: None,
        }
    }

    pub fn offsets(&self) -> CalibrationOffsets {
        self.offsets
    }

    /// Latest filtered pose, `None` until the first reliable sample.
    pub fn update(&mut self, sample: &ImuSample) -> Option<HeadPose> {
        if let Ok(raw) = sample.pose() {
            let rel = self.offsets.apply(&raw);
            match self.filter.as_mut() {
                Some(f) => {
                    f.step(&rel);
                }
                None => self.filter = Some(LowPassState::new(self.alpha, rel)),
            }
        }
        self.filter.map(|f| f.current())
    }
}
