//! Per-frame processing: downscale, blur, detect, classify, annotate,
//! half side-by-side.

use std::path::Path;

use super::config::{ClassifierKind, ConfigError, DetectorKind, PipelineConfig};
use super::metrics::{Stage, StageMetrics};
use crate::classifier::{
    extract_and_resize, verdict, ClassifierError, ClassifierPlugin, PluginHost,
    ReferenceClassifier, StubClassifier, ThreatVerdict,
};
use crate::overlay::{draw_annotations, to_half_sbs, AnnotatedFrame, SbsFrame, FRAME_H, FRAME_W};
use crate::transport::{
    encode_message, DetectionRecord, DetectionsMsg, Message, ProtocolError, VideoFrame,
};
use crate::vision::{
    gaussian_blur, non_max_suppression, resize_area, sliding_window_detect, suppress_contained,
    CascadeModel, Detection, Detector, GrayImage, HogParams, LinearSvmModel, Rect, VisionError,
};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("model {path}: {message}")]
    Model { path: String, message: String },
    #[error(transparent)]
    Vision(#[from] VisionError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// Everything one frame produces.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutput {
    pub annotated: AnnotatedFrame,
    pub sbs: SbsFrame,
    pub detections: DetectionsMsg,
}

/// A configured pipeline with its models loaded and validated. Shareable
/// across threads; non-thread-safe classifier plugins are serialized.
pub struct Pipeline {
    config: PipelineConfig,
    cascade: CascadeModel,
    hog: HogParams,
    svm: LinearSvmModel,
    classifier: PluginHost,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline")
            .field("config", &self.config)
            .field("classifier", &self.classifier)
            .finish_non_exhaustive()
    }
}

fn read_model(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|e| PipelineError::Model {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn model_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Model {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

impl Pipeline {
    /// Loads every referenced model and fails on any problem, so a bad
    /// detector never surfaces mid-stream.
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        let plugin: Box<dyn ClassifierPlugin> = match &config.classifier {
            ClassifierKind::Reference => Box::new(match &config.reference_model {
                Some(p) => {
                    ReferenceClassifier::parse(&read_model(p)?).map_err(|e| model_err(p, e))?
                }
                None => crate::models::reference_classifier().clone(),
            }),
            ClassifierKind::Stub(p) => {
                Box::new(StubClassifier::parse(&read_model(p)?).map_err(|e| model_err(p, e))?)
            }
        };
        Self::with_plugin(config, plugin)
    }

    /// As [`Pipeline::new`] with a caller-supplied classifier.
    pub fn with_plugin(
        config: PipelineConfig,
        plugin: Box<dyn ClassifierPlugin>,
    ) -> Result<Self, PipelineError> {
        config.validate()?;
        let cascade = match &config.cascade_model {
            Some(p) => CascadeModel::parse(&read_model(p)?).map_err(|e| model_err(p, e))?,
            None => crate::models::person_cascade().clone(),
        };
        let svm = match &config.svm_model {
            Some(p) => LinearSvmModel::parse(&read_model(p)?).map_err(|e| model_err(p, e))?,
            None => crate::models::person_hog_svm().clone(),
        };
        let p = Self {
            config,
            cascade,
            hog: HogParams::default(),
            svm,
            classifier: PluginHost::new(plugin),
        };
        p.detector().validate(&p.config.pyramid)?;
        Ok(p)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn detector(&self) -> Detector<'_> {
        match self.config.detector {
            DetectorKind::Haar => Detector::Cascade(&self.cascade),
            DetectorKind::HogSvm => Detector::HogSvm {
                params: &self.hog,
                svm: &self.svm,
            },
        }
    }

    /// Downscale to the detection resolution, then blur.
    pub fn detection_input(&self, frame: &GrayImage) -> Result<GrayImage, VisionError> {
        let (w, h) = self.config.detection_resolution;
        let small = if (frame.width(), frame.height()) == (w, h) {
            frame.clone()
        } else {
            resize_area(frame, w, h)?
        };
        gaussian_blur(&small, &self.config.gaussian)
    }

    /// NMS- and containment-filtered detections in detection-resolution coordinates.
    pub fn detect_small(&self, small: &GrayImage) -> Result<Vec<Detection>, VisionError> {
        let raw = sliding_window_detect(small, self.detector(), &self.config.pyramid)?;
        let kept = non_max_suppression(&raw, self.config.nms_iou);
        Ok(suppress_contained(&kept, self.config.containment))
    }

    /// Maps a detection-resolution box onto a `frame`-sized raster.
    pub fn to_frame_coords(&self, bbox: Rect, frame: (u32, u32)) -> Rect {
        let (w, h) = self.config.detection_resolution;
        let sx = frame.0 as f64 / w as f64;
        let sy = frame.1 as f64 / h as f64;
        let x = ((bbox.x as f64 * sx).floor() as u32).min(frame.0 - 1);
        let y = ((bbox.y as f64 * sy).floor() as u32).min(frame.1 - 1);
        let bw = ((bbox.w as f64 * sx).round() as u32).clamp(1, frame.0 - x);
        let bh = ((bbox.h as f64 * sy).round() as u32).clamp(1, frame.1 - y);
        Rect::new(x, y, bw, bh)
    }

    /// Full-resolution detections for `frame`.
    pub fn detect(&self, frame: &GrayImage) -> Result<Vec<Detection>, VisionError> {
        let small = self.detection_input(frame)?;
        let dims = (frame.width(), frame.height());
        Ok(self
            .detect_small(&small)?
            .into_iter()
            .map(|d| Detection {
                bbox: self.to_frame_coords(d.bbox, dims),
                ..d
            })
            .collect())
    }

    /// Verdict for one full-resolution box. Classifier failures become
    /// UNKNOWN verdicts.
    pub fn classify_box(
        &self,
        frame: &GrayImage,
        bbox: Rect,
    ) -> Result<ThreatVerdict, ClassifierError> {
        let roi = extract_and_resize(frame, bbox)?;
        let scores = self.classifier.classify(&roi)?;
        Ok(verdict(&scores, self.config.threshold))
    }

    /// Blur, detect and classify one 1900×1000 frame. Every detection gets
    /// a verdict; classifier failures become UNKNOWN.
    pub fn analyze(
        &self,
        frame: &GrayImage,
        metrics: Option<&StageMetrics>,
    ) -> Result<Vec<(Detection, ThreatVerdict)>, PipelineError> {
        if (frame.width(), frame.height()) != (FRAME_W, FRAME_H) {
            return Err(VisionError::InvalidInput(format!(
                "frame must be {FRAME_W}x{FRAME_H}, got {}x{}",
                frame.width(),
                frame.height()
            ))
            .into());
        }
        let small = timed(metrics, Stage::Blur, || self.detection_input(frame))?;
        let dims = (frame.width(), frame.height());
        let dets: Vec<Detection> = timed(metrics, Stage::Detect, || self.detect_small(&small))?
            .into_iter()
            .map(|d| Detection {
                bbox: self.to_frame_coords(d.bbox, dims),
                ..d
            })
            .collect();

        let mut failures = 0u64;
        let judged: Vec<(Detection, ThreatVerdict)> = timed(metrics, Stage::Classify, || {
            dets.iter()
                .map(|d| {
                    let v = self.classify_box(frame, d.bbox).unwrap_or_else(|e| {
                        log::warn!("classifier failed on {:?}: {e}", d.bbox);
                        failures += 1;
                        ThreatVerdict::unknown()
                    });
                    (*d, v)
                })
                .collect()
        });
        if let Some(m) = metrics {
            m.update(|c| {
                c.classifier_calls += judged.len() as u64;
                c.classifier_failures += failures;
                c.detections += judged.len() as u64;
            });
        }
        Ok(judged)
    }

    /// Annotates `frame` with `judged` and formats it side by side.
    pub fn render(
        &self,
        frame: &GrayImage,
        judged: Vec<(Detection, ThreatVerdict)>,
        frame_seq: u32,
        timestamp_us: u64,
        metrics: Option<&StageMetrics>,
    ) -> Result<FrameOutput, PipelineError> {
        let annotated = timed(metrics, Stage::Annotate, || {
            draw_annotations(frame.to_rgb(), &judged, frame_seq, timestamp_us)
        });
        let sbs = timed(metrics, Stage::Sbs, || to_half_sbs(&annotated))?;
        let detections = DetectionsMsg {
            frame_seq,
            items: judged.iter().map(|(d, v)| detection_record(d, v)).collect(),
        };
        Ok(FrameOutput {
            annotated,
            sbs,
            detections,
        })
    }

    /// Runs the whole chain on one 1900×1000 frame.
    pub fn process_frame(
        &self,
        frame: &GrayImage,
        frame_seq: u32,
        timestamp_us: u64,
        metrics: Option<&StageMetrics>,
    ) -> Result<FrameOutput, PipelineError> {
        let judged = self.analyze(frame, metrics)?;
        self.render(frame, judged, frame_seq, timestamp_us, metrics)
    }

    /// [`Pipeline::process_frame`] plus wire encoding, timed end to end.
    /// Both output messages carry `out_seq`.
    pub fn process_and_encode(
        &self,
        frame: &GrayImage,
        frame_seq: u32,
        out_seq: u32,
        timestamp_us: u64,
        metrics: Option<&StageMetrics>,
    ) -> Result<(FrameOutput, EncodedOutput), PipelineError> {
        timed(metrics, Stage::EndToEnd, || {
            let out = self.process_frame(frame, frame_seq, timestamp_us, metrics)?;
            let enc = timed(metrics, Stage::Encode, || {
                encode_outputs(&out, out_seq, out_seq, timestamp_us)
            })?;
            Ok((out, enc))
        })
    }
}

fn timed<T>(metrics: Option<&StageMetrics>, stage: Stage, f: impl FnOnce() -> T) -> T {
    match metrics {
        Some(m) => m.time(stage, f),
        None => f(),
    }
}

pub fn detection_record(d: &Detection, v: &ThreatVerdict) -> DetectionRecord {
    let c = |x: u32| x.min(u16::MAX as u32) as u16;
    DetectionRecord {
        x: c(d.bbox.x),
        y: c(d.bbox.y),
        w: c(d.bbox.w),
        h: c(d.bbox.h),
        score: d.person_score as f32,
        color: v.color,
        percent: v.percent,
        label: v.label.map(|l| l.index() as u8),
    }
}

/// Encoded envelopes for one output frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedOutput {
    pub video: Vec<u8>,
    pub detections: Vec<u8>,
}

/// Wire bytes for the console: the SBS frame as a raw RGB VIDEO_FRAME and
/// the DETECTIONS message.
pub fn encode_outputs(
    out: &FrameOutput,
    video_seq: u32,
    detections_seq: u32,
    timestamp_us: u64,
) -> Result<EncodedOutput, ProtocolError> {
    let img = out.sbs.image();
    let video = Message::VideoFrame(VideoFrame::rgb(
        img.width() as u16,
        img.height() as u16,
        img.data().to_vec(),
    ));
    Ok(EncodedOutput {
        video: encode_message(&video, video_seq, timestamp_us)?,
        detections: encode_message(
            &Message::Detections(out.detections.clone()),
            detections_seq,
            timestamp_us,
        )?,
    })
}
