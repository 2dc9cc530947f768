//! Multi-scale sliding-window detection.

use std::borrow::Cow;

use super::{
    evaluate_cascade, integral_image, resize_area, CascadeModel, GrayImage, HogGrid, HogParams,
    LinearSvmModel, Rect, VisionError,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    /// Full-frame pixel box, always inside the frame.
    pub bbox: Rect,
    pub person_score: f64,
    /// Downscale factor of the pyramid level that produced the window.
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PyramidParams {
    /// Ratio between consecutive levels, must exceed 1.
    pub scale_factor: f64,
    /// Window step in level pixels.
    pub stride: u32,
    /// Smallest object size to search for, in input pixels. The first level
    /// is downscaled so that the detector window covers at least this size.
    /// `(0, 0)` starts at the input resolution.
    pub min_window: (u32, u32),
}

impl Default for PyramidParams {
    fn default() -> Self {
        Self {
            scale_factor: 1.2,
            stride: 8,
            min_window: (0, 0),
        }
    }
}

/// Which window classifier to slide.
#[derive(Debug, Clone, Copy)]
pub enum Detector<'a> {
    Cascade(&'a CascadeModel),
    HogSvm {
        params: &'a HogParams,
        svm: &'a LinearSvmModel,
    },
}

impl Detector<'_> {
    pub fn window(&self) -> (u32, u32) {
        match self {
            Detector::Cascade(m) => (m.window_w, m.window_h),
            Detector::HogSvm { params, .. } => (params.window_w, params.window_h),
        }
    }

    /// Checks the model against itself and against `pyramid`.
    pub fn validate(&self, pyramid: &PyramidParams) -> Result<(), VisionError> {
        match self {
            Detector::Cascade(m) => m.validate(),
            Detector::HogSvm { params, svm } => {
                params.validate()?;
                if svm.weights.len() != params.descriptor_len() {
                    return Err(VisionError::InvalidModel(format!(
                        "SVM has {} weights, HOG descriptor has {}",
                        svm.weights.len(),
                        params.descriptor_len()
                    )));
                }
                if !pyramid
                    .stride
                    .is_multiple_of(params.cell * params.block_stride)
                {
                    return Err(VisionError::InvalidParameter(
                        "HOG detection stride must be a multiple of the block step".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScanReport {
    pub detections: Vec<Detection>,
    pub windows_evaluated: usize,
    pub levels: usize,
}

/// Every accepted window over every pyramid level, ordered by level and
/// then row-major within a level.
pub fn sliding_window_detect(
    img: &GrayImage,
    detector: Detector<'_>,
    pyramid: &PyramidParams,
) -> Result<Vec<Detection>, VisionError> {
    Ok(sliding_window_scan(img, detector, pyramid)?.detections)
}

/// One pyramid level and its downscale factors relative to the input.
pub(crate) struct Level<'a> {
    pub image: Cow<'a, GrayImage>,
    pub scale: f64,
    pub sx: f64,
    pub sy: f64,
}

pub(crate) fn build_pyramid<'a>(
    img: &'a GrayImage,
    window: (u32, u32),
    pyramid: &PyramidParams,
) -> Result<Vec<Level<'a>>, VisionError> {
    if !(pyramid.scale_factor > 1.0) || !pyramid.scale_factor.is_finite() {
        return Err(VisionError::InvalidParameter(format!(
            "pyramid scale factor must exceed 1, got {}",
            pyramid.scale_factor
        )));
    }
    if pyramid.stride == 0 {
        return Err(VisionError::InvalidParameter(
            "pyramid stride must be non-zero".into(),
        ));
    }
    let (ww, wh) = window;
    let (w, h) = (img.width(), img.height());
    let first = (pyramid.min_window.0 as f64 / ww as f64)
        .max(pyramid.min_window.1 as f64 / wh as f64)
        .max(1.0);

    let mut levels = Vec::new();
    let mut current: Cow<'a, GrayImage> = if first > 1.0 {
        let (lw, lh) = ((w as f64 / first) as u32, (h as f64 / first) as u32);
        if lw < ww || lh < wh {
            return Ok(levels);
        }
        Cow::Owned(resize_area(img, lw, lh)?)
    } else {
        Cow::Borrowed(img)
    };
    let mut scale = first;
    loop {
        if current.width() < ww || current.height() < wh {
            break;
        }
        let next_w = (current.width() as f64 / pyramid.scale_factor) as u32;
        let next_h = (current.height() as f64 / pyramid.scale_factor) as u32;
        let sx = w as f64 / current.width() as f64;
        let sy = h as f64 / current.height() as f64;
        let next = if next_w >= ww && next_h >= wh {
            Some(resize_area(&current, next_w, next_h)?)
        } else {
            None
        };
        levels.push(Level {
            image: current,
            scale,
            sx,
            sy,
        });
        match next {
            Some(n) => {
                current = Cow::Owned(n);
                scale *= pyramid.scale_factor;
            }
            None => break,
        }
    }
    Ok(levels)
}

/// Maps a level window back to input coordinates, clamped to the frame.
pub(crate) fn map_window(
    x: u32,
    y: u32,
    window: (u32, u32),
    level: &Level<'_>,
    frame: (u32, u32),
) -> Rect {
    let fx = ((x as f64 * level.sx).floor() as u32).min(frame.0 - 1);
    let fy = ((y as f64 * level.sy).floor() as u32).min(frame.1 - 1);
    let fw = ((window.0 as f64 * level.sx).round() as u32).clamp(1, frame.0 - fx);
    let fh = ((window.1 as f64 * level.sy).round() as u32).clamp(1, frame.1 - fy);
    Rect::new(fx, fy, fw, fh)
}

/// Like [`sliding_window_detect`] but also reports how many windows were
/// classified.
pub fn sliding_window_scan(
    img: &GrayImage,
    detector: Detector<'_>,
    pyramid: &PyramidParams,
) -> Result<ScanReport, VisionError> {
    detector.validate(pyramid)?;
    let window = detector.window();
    let levels = build_pyramid(img, window, pyramid)?;
    let frame = (img.width(), img.height());
    let mut report = ScanReport {
        levels: levels.len(),
        ..ScanReport::default()
    };
    let stride = pyramid.stride as usize;

    for level in &levels {
        let (lw, lh) = (level.image.width(), level.image.height());
        let xs = (0..=lw - window.0).step_by(stride);
        let ys = (0..=lh - window.1).step_by(stride);
        match detector {
            Detector::Cascade(model) => {
                let ii = integral_image(&level.image);
                for y in ys {
                    for x in xs.clone() {
                        report.windows_evaluated += 1;
                        let out = evaluate_cascade(&ii, model, (x, y), 1.0)?;
                        if out.accepted {
                            report.detections.push(Detection {
                                bbox: map_window(x, y, window, level, frame),
                                person_score: out.score,
                                scale: level.scale,
                            });
                        }
                    }
                }
            }
            Detector::HogSvm { params, svm } => {
                let grid = HogGrid::compute(&level.image, params)?;
                for y in ys {
                    for x in xs.clone() {
                        report.windows_evaluated += 1;
                        let score =
                            grid.window_dot(x / params.cell, y / params.cell, &svm.weights)?
                                + svm.bias;
                        if svm.is_positive(score) {
                            report.detections.push(Detection {
                                bbox: map_window(x, y, window, level, frame),
                                person_score: score,
                                scale: level.scale,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}
