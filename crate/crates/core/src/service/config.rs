//! Pipeline and service settings, loadable from a `key = value` file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::model_io::ParseError;
use crate::transport::{DEFAULT_CONSOLE_PORT, DEFAULT_CONTROL_PORT, DEFAULT_MEDIA_PORT};
use crate::vision::{GaussianKernelParams, PyramidParams, DEFAULT_CONTAINMENT, DEFAULT_NMS_IOU};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    Haar,
    HogSvm,
}

impl FromStr for DetectorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "haar" => Ok(DetectorKind::Haar),
            "hog" | "hog_svm" => Ok(DetectorKind::HogSvm),
            _ => Err(format!("detector must be haar or hog, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassifierKind {
    Reference,
    /// `stub v1` file with a fixed probability vector.
    Stub(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub detector: DetectorKind,
    /// `None` uses the embedded model.
    pub cascade_model: Option<PathBuf>,
    pub svm_model: Option<PathBuf>,
    pub reference_model: Option<PathBuf>,
    pub classifier: ClassifierKind,
    pub gaussian: GaussianKernelParams,
    pub pyramid: PyramidParams,
    pub nms_iou: f64,
    /// Post-NMS nested-box suppression; `>= 1` disables.
    pub containment: f64,
    /// Red at or above, in (0, 1).
    pub threshold: f64,
    /// Resolution the detector runs at; frames are area-downscaled to it.
    pub detection_resolution: (u32, u32),
}

pub const DEFAULT_DETECTION_RESOLUTION: (u32, u32) = (633, 333);

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            detector: DetectorKind::Haar,
            cascade_model: None,
            svm_model: None,
            reference_model: None,
            classifier: ClassifierKind::Reference,
            gaussian: GaussianKernelParams::default(),
            pyramid: PyramidParams::default(),
            nms_iou: DEFAULT_NMS_IOU,
            containment: DEFAULT_CONTAINMENT,
            threshold: crate::classifier::DEFAULT_THRESHOLD,
            detection_resolution: DEFAULT_DETECTION_RESOLUTION,
        }
    }
}

/// Network and housekeeping settings for the serve loop.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub pipeline: PipelineConfig,
    /// Robot host, optionally `host:media_port`.
    pub robot: String,
    pub media_port: u16,
    pub control_port: u16,
    /// Console feed listen address.
    pub listen: String,
    pub metrics_path: Option<PathBuf>,
    /// Static console bundle served over HTTP on the console port.
    pub serve_console: Option<PathBuf>,
    /// Debug: write every emitted SBS frame here as PPM.
    pub dump_ppm: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            robot: "127.0.0.1".into(),
            media_port: DEFAULT_MEDIA_PORT,
            control_port: DEFAULT_CONTROL_PORT,
            listen: format!("127.0.0.1:{DEFAULT_CONSOLE_PORT}"),
            metrics_path: None,
            serve_console: None,
            dump_ppm: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// `key = value` entries with their line numbers. `#` starts a comment.
pub fn parse_config_entries(text: &str) -> Result<Vec<(String, String, usize)>, ParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ParseError::new(i + 1, "expected `key = value`"))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(ParseError::new(i + 1, "empty key or value"));
        }
        out.push((k.to_string(), v.to_string(), i + 1));
    }
    Ok(out)
}

fn value<T: FromStr>(v: &str, line: usize, key: &str) -> Result<T, ParseError> {
    v.parse()
        .map_err(|_| ParseError::new(line, format!("invalid value `{v}` for `{key}`")))
}

impl PipelineConfig {
    /// Applies one setting. Returns `Ok(false)` for keys it does not own.
    pub fn set(&mut self, key: &str, v: &str, line: usize) -> Result<bool, ParseError> {
        match key {
            "detector" => {
                self.detector = v.parse().map_err(|e: String| ParseError::new(line, e))?
            }
            "cascade_model" => self.cascade_model = Some(v.into()),
            "svm_model" => self.svm_model = Some(v.into()),
            "reference_model" => self.reference_model = Some(v.into()),
            "classifier" => {
                self.classifier = match v {
                    "reference" => ClassifierKind::Reference,
                    _ => match v.strip_prefix("stub:") {
                        Some(p) => ClassifierKind::Stub(p.into()),
                        None => {
                            return Err(ParseError::new(
                                line,
                                format!(
                                    "classifier must be `reference` or `stub:<path>`, got `{v}`"
                                ),
                            ))
                        }
                    },
                }
            }
            "threshold" => self.threshold = value(v, line, key)?,
            "sigma_x" => self.gaussian.sigma_x = value(v, line, key)?,
            "sigma_y" => self.gaussian.sigma_y = value(v, line, key)?,
            "mu_x" => self.gaussian.mu_x = value(v, line, key)?,
            "mu_y" => self.gaussian.mu_y = value(v, line, key)?,
            "blur_radius" => self.gaussian.radius = value(v, line, key)?,
            "scale_factor" => self.pyramid.scale_factor = value(v, line, key)?,
            "stride" => self.pyramid.stride = value(v, line, key)?,
            "min_window_w" => self.pyramid.min_window.0 = value(v, line, key)?,
            "min_window_h" => self.pyramid.min_window.1 = value(v, line, key)?,
            "nms_iou" => self.nms_iou = value(v, line, key)?,
            "containment" => self.containment = value(v, line, key)?,
            "detection_width" => self.detection_resolution.0 = value(v, line, key)?,
            "detection_height" => self.detection_resolution.1 = value(v, line, key)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Checks ranges that do not need model files.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(ConfigError::Invalid(format!(
                "threshold must be in (0, 1), got {}",
                self.threshold
            )));
        }
        if !(self.nms_iou > 0.0 && self.nms_iou <= 1.0) {
            return Err(ConfigError::Invalid(format!(
                "nms_iou must be in (0, 1], got {}",
                self.nms_iou
            )));
        }
        if !(self.containment > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "containment must be positive, got {}",
                self.containment
            )));
        }
        let (w, h) = self.detection_resolution;
        if w == 0 || h == 0 {
            return Err(ConfigError::Invalid(
                "detection resolution must be non-zero".into(),
            ));
        }
        crate::vision::gaussian_kernel(&self.gaussian)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }
}

impl ServiceConfig {
    pub fn set(&mut self, key: &str, v: &str, line: usize) -> Result<(), ParseError> {
        if self.pipeline.set(key, v, line)? {
            return Ok(());
        }
        match key {
            "robot" => self.robot = v.into(),
            "media_port" => self.media_port = value(v, line, key)?,
            "control_port" => self.control_port = value(v, line, key)?,
            "listen" => self.listen = v.into(),
            "metrics" => self.metrics_path = Some(v.into()),
            "serve_console" => self.serve_console = Some(v.into()),
            "dump_ppm" => self.dump_ppm = Some(v.into()),
            _ => return Err(ParseError::new(line, format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ParseError> {
        for (k, v, line) in parse_config_entries(text)? {
            self.set(&k, &v, line)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(self.apply_text(&text)?)
    }

    /// `(media, control)` socket addresses of the robot.
    pub fn robot_addrs(&self) -> (String, String) {
        match self.robot.rsplit_once(':') {
            Some((host, port)) if port.parse::<u16>().is_ok() && !host.ends_with(':') => {
                let media: u16 = port.parse().unwrap_or(self.media_port);
                let control = if self.control_port == DEFAULT_CONTROL_PORT {
                    media.wrapping_add(1)
                } else {
                    self.control_port
                };
                (format!("{host}:{media}"), format!("{host}:{control}"))
            }
            _ => (
                format!("{}:{}", self.robot, self.media_port),
                format!("{}:{}", self.robot, self.control_port),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_settings_apply() {
        let mut c = ServiceConfig::default();
        c.apply_text("# demo\ndetector = hog\nthreshold = 0.6\nclassifier = stub:/tmp/s.txt\nstride = 16\nmetrics = /tmp/m.csv\n")
            .unwrap();
        assert_eq!(c.pipeline.detector, DetectorKind::HogSvm);
        assert_eq!(c.pipeline.threshold, 0.6);
        assert_eq!(
            c.pipeline.classifier,
            ClassifierKind::Stub("/tmp/s.txt".into())
        );
        assert_eq!(c.pipeline.pyramid.stride, 16);
        assert_eq!(c.metrics_path, Some("/tmp/m.csv".into()));
    }

    #[test]
    fn errors_carry_lines() {
        let mut c = ServiceConfig::default();
        assert_eq!(
            c.apply_text("threshold = 0.5\nbogus = 1\n")
                .unwrap_err()
                .line,
            2
        );
        assert_eq!(c.apply_text("\n\nthreshold = abc\n").unwrap_err().line, 3);
        assert_eq!(c.apply_text("detector\n").unwrap_err().line, 1);
    }

    #[test]
    fn threshold_range() {
        let mut p = PipelineConfig {
            threshold: 1.0,
            ..PipelineConfig::default()
        };
        assert!(p.validate().is_err());
        p.threshold = 0.5;
        assert!(p.validate().is_ok());
    }

    #[test]
    fn robot_address_forms() {
        let mut c = ServiceConfig::default();
        assert_eq!(
            c.robot_addrs(),
            ("127.0.0.1:7701".into(), "127.0.0.1:7702".into())
        );
        c.robot = "10.0.0.2:9000".into();
        assert_eq!(
            c.robot_addrs(),
            ("10.0.0.2:9000".into(), "10.0.0.2:9001".into())
        );
    }
}
