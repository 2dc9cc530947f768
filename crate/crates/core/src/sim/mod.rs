//! Deterministic simulated ground/aerial robot with a pan-tilt camera.

mod corpus;
mod dynamics;
mod mission;
mod render;
mod scene;
mod server;

pub use corpus::{
    labeled_corpus, labeled_corpus_with, CORPUS_SCALE_JITTER, CORPUS_SHIFT_JITTER,
    CORPUS_SPRITE_HEIGHT,
};
pub use dynamics::{
    ServoModel, SimCommand, Simulator, MAX_SLOPE_DEG, MAX_UAV_SPEED, MAX_WHEEL_SPEED,
    SERVO_SLEW_DEG_PER_S, TRACK_WIDTH_M,
};
pub use mission::{Mission, MissionFrame};
pub use render::{
    project, render_frame, weapon_parts, Background, CameraState, Part, SpriteView, UavPose,
    UgvPose, BACKGROUND_MAX, BACKGROUND_MIN, BODY_LEVEL, CAMERA_HEIGHT, CAMERA_WIDTH, FOCAL_PX,
    HEAD_LEVEL, PERSON_HEIGHT_M, PIXELS_PER_DEGREE, WEAPON_LEVEL, WEAPON_MAX_LEVEL,
};
pub use scene::{Entity, EntityKind, Facing, Scene, SceneError, StartPose, DEFAULT_UAV_ALTITUDE};
pub use server::{RobotServer, RobotServerConfig, RobotServerStats, HEARTBEAT_PERIOD};
