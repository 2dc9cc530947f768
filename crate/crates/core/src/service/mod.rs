//! The inference service: consumes the robot's video, runs the detection
//! and threat pipeline, feeds consoles and relays operator commands.

mod config;
mod evaluate;
mod metrics;
mod pipeline;
mod server;

pub use config::{
    parse_config_entries, ClassifierKind, ConfigError, DetectorKind, PipelineConfig, ServiceConfig,
    DEFAULT_DETECTION_RESOLUTION,
};
pub use evaluate::{evaluate_mission, MissionReport};
pub use metrics::{Counters, LatencySummary, MetricsSnapshot, Stage, StageMetrics, LATENCY_WINDOW};
pub use pipeline::{
    detection_record, encode_outputs, EncodedOutput, FrameOutput, Pipeline, PipelineError,
};
pub use server::{
    run_service, start_service, static_path, Backoff, ServiceError, ServiceHandle,
    HEARTBEAT_TIMEOUT, RECONNECT_INITIAL, RECONNECT_MAX,
};
