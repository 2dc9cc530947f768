use super::render::{project, render_frame, Background, CameraState, SpriteView};
use super::scene::Scene;
use crate::telemetry::{PanTiltCommand, PAN_LIMIT_DEG, TILT_LIMIT_DEG};
use crate::transport::{ControlCommand, RobotStatus, VehicleMode};
use crate::vision::GrayImage;

pub const SERVO_SLEW_DEG_PER_S: f64 = 300.0;
pub const MAX_WHEEL_SPEED: f64 = 1.0;
pub const TRACK_WIDTH_M: f64 = 0.5;
pub const MAX_UAV_SPEED: f64 = 1.0;
/// Capability metadata only; terrain is not simulated.
pub const MAX_SLOPE_DEG: f64 = 50.0;

/// One rate-limited servo axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServoModel {
    pub slew_limit: f64,
    pub position: f64,
    pub target: f64,
    pub min: f64,
    pub max: f64,
}

impl ServoModel {
    pub fn new(min: f64, max: f64) -> Self {
        Self {
            slew_limit: SERVO_SLEW_DEG_PER_S,
            position: 0.0,
            target: 0.0,
            min,
            max,
        }
    }

    /// Clamped into range; NaN is ignored.
    pub fn set_target(&mut self, t: f64) {
        if !t.is_nan() {
            self.target = t.clamp(self.min, self.max);
        }
    }

    pub fn step(&mut self, dt: f64) {
        let max_move = self.slew_limit * dt;
        let delta = (self.target - self.position).clamp(-max_move, max_move);
        self.position = (self.position + delta).clamp(self.min, self.max);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimCommand {
    Control(ControlCommand),
    PanTilt(PanTiltCommand),
}

/// The whole simulated robot. Advances only through [`Simulator::step`].
#[derive(Debug, Clone)]
pub struct Simulator {
    scene: Scene,
    background: Background,
    camera: CameraState,
    pan: ServoModel,
    tilt: ServoModel,
    /// Normalized wheel (or UAV axis) commands in [−1, 1].
    drive: (f64, f64),
    estop: bool,
    pending_mode: Option<VehicleMode>,
    time_us: u64,
    frames: u64,
    resolution: (u32, u32),
}

impl Simulator {
    pub fn new(scene: Scene) -> Self {
        let background = Background::new(scene.background_seed);
        Self::with_background(scene, background)
    }

    /// Reuses an already generated texture; it must match the scene seed to
    /// reproduce [`Simulator::new`].
    pub fn with_background(scene: Scene, background: Background) -> Self {
        let camera = CameraState::at_start(&scene);
        Self {
            scene,
            background,
            camera,
            pan: ServoModel::new(-PAN_LIMIT_DEG, PAN_LIMIT_DEG),
            tilt: ServoModel::new(-TILT_LIMIT_DEG, TILT_LIMIT_DEG),
            drive: (0.0, 0.0),
            estop: false,
            pending_mode: None,
            time_us: 0,
            frames: 0,
            resolution: (super::CAMERA_WIDTH, super::CAMERA_HEIGHT),
        }
    }

    pub fn with_resolution(mut self, width: u32, height: u32) -> Self {
        self.resolution = (width.max(1), height.max(1));
        self
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn camera(&self) -> &CameraState {
        &self.camera
    }

    pub fn servos(&self) -> (&ServoModel, &ServoModel) {
        (&self.pan, &self.tilt)
    }

    pub fn time_us(&self) -> u64 {
        self.time_us
    }

    pub fn frames_rendered(&self) -> u64 {
        self.frames
    }

    pub fn estop_engaged(&self) -> bool {
        self.estop
    }

    pub fn status(&self) -> RobotStatus {
        RobotStatus {
            mode: self.camera.mode,
            pan_cd: (self.camera.pan * 100.0).round() as i16,
            tilt_cd: (self.camera.tilt * 100.0).round() as i16,
            estop: self.estop,
        }
    }

    fn apply(&mut self, cmd: &SimCommand) {
        match *cmd {
            SimCommand::PanTilt(pt) => {
                self.pan.set_target(pt.pan);
                self.tilt.set_target(pt.tilt);
            }
            SimCommand::Control(ControlCommand::ModeSwitch(m)) => self.pending_mode = Some(m),
            SimCommand::Control(ControlCommand::Drive { left, right }) => {
                if !self.estop {
                    self.drive = (left as f64 / 127.0, right as f64 / 127.0);
                }
            }
            SimCommand::Control(ControlCommand::EStop { engaged }) => {
                self.estop = engaged;
                if engaged {
                    self.drive = (0.0, 0.0);
                }
            }
        }
    }

    /// Applies `commands` in order, then advances servos and vehicle by
    /// `dt` seconds. A mode switch takes effect at the end of the step, so
    /// the next rendered frame is the first in the new mode.
    pub fn step(&mut self, dt: f64, commands: &[SimCommand]) {
        for c in commands {
            self.apply(c);
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return;
        }
        self.pan.step(dt);
        self.tilt.step(dt);
        self.camera.pan = self.pan.position;
        self.camera.tilt = self.tilt.position;

        let (l, r) = (
            self.drive.0 * MAX_WHEEL_SPEED,
            self.drive.1 * MAX_WHEEL_SPEED,
        );
        match self.camera.mode {
            VehicleMode::Ugv => {
                let v = (l + r) / 2.0;
                let omega = (r - l) / TRACK_WIDTH_M;
                let p = &mut self.camera.ugv;
                let th = p.heading_deg.to_radians();
                p.x += v * th.cos() * dt;
                p.y += v * th.sin() * dt;
                p.heading_deg = (p.heading_deg + omega.to_degrees() * dt).rem_euclid(360.0);
            }
            VehicleMode::Uav => {
                self.camera.uav.x += self.drive.0 * MAX_UAV_SPEED * dt;
                self.camera.uav.y += self.drive.1 * MAX_UAV_SPEED * dt;
            }
        }
        if let Some(m) = self.pending_mode.take() {
            self.camera.mode = m;
        }
        self.time_us += (dt * 1e6).round() as u64;
    }

    pub fn render(&mut self) -> GrayImage {
        self.frames += 1;
        let (w, h) = self.resolution;
        render_frame(&self.scene, &self.camera, &self.background, w, h)
    }

    /// Screen placement of people in the current view.
    pub fn visible_people(&self) -> Vec<SpriteView> {
        let (w, h) = self.resolution;
        project(&self.scene, &self.camera, w, h)
    }
}
