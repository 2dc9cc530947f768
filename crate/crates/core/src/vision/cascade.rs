//! Haar-like features and stage cascades over an integral image.

use std::fmt::Write as _;

use super::{IntegralImage, Rect, VisionError};
use crate::model_io::{fmt_f64, ParseError, Records};

/// A window-relative rectangle with a signed weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedRect {
    pub rect: Rect,
    pub weight: f64,
}

/// Weighted sum of rectangle sums inside a detection window.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarFeature {
    pub rects: Vec<WeightedRect>,
    pub window_w: u32,
    pub window_h: u32,
}

impl HaarFeature {
    pub fn new(
        window_w: u32,
        window_h: u32,
        rects: Vec<WeightedRect>,
    ) -> Result<Self, VisionError> {
        let f = Self {
            rects,
            window_w,
            window_h,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<(), VisionError> {
        if self.rects.len() < 2 {
            return Err(VisionError::InvalidModel(
                "haar feature needs at least two rectangles".into(),
            ));
        }
        for wr in &self.rects {
            if !wr.rect.fits_in(self.window_w, self.window_h) {
                return Err(VisionError::InvalidModel(format!(
                    "feature rect {:?} outside {}x{} window",
                    wr.rect, self.window_w, self.window_h
                )));
            }
            if !wr.weight.is_finite() {
                return Err(VisionError::InvalidModel(
                    "non-finite feature weight".into(),
                ));
            }
        }
        let pos = self.rects.iter().any(|r| r.weight > 0.0);
        let neg = self.rects.iter().any(|r| r.weight < 0.0);
        if !(pos && neg) {
            return Err(VisionError::InvalidModel(
                "feature weights must include both signs".into(),
            ));
        }
        Ok(())
    }
}

/// Depth-one decision stump over a single feature.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakClassifier {
    pub feature: HaarFeature,
    pub split_threshold: f64,
    pub left_value: f64,
    pub right_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub threshold: f64,
    pub weak_classifiers: Vec<WeakClassifier>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeModel {
    pub window_w: u32,
    pub window_h: u32,
    pub stages: Vec<Stage>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeOutcome {
    pub accepted: bool,
    pub stages_evaluated: usize,
    /// Sum of all stage scores when accepted; the failing stage's score
    /// otherwise.
    pub score: f64,
}

#[inline]
fn scale_rect(r: Rect, origin: (u32, u32), scale: f64) -> Rect {
    if scale == 1.0 {
        return Rect::new(origin.0 + r.x, origin.1 + r.y, r.w, r.h);
    }
    let s = |v: u32| (v as f64 * scale).round() as u32;
    Rect::new(origin.0 + s(r.x), origin.1 + s(r.y), s(r.w), s(r.h))
}

/// Feature response at a window placed at `window_origin`, with all
/// rectangles scaled by `scale`. Each rectangle costs four table lookups.
pub fn haar_feature_value(
    ii: &IntegralImage,
    f: &HaarFeature,
    window_origin: (u32, u32),
    scale: f64,
) -> Result<f64, VisionError> {
    let mut acc = 0.0;
    for wr in &f.rects {
        let r = scale_rect(wr.rect, window_origin, scale);
        if !r.fits_in(ii.width(), ii.height()) {
            return Err(VisionError::OutOfBounds {
                rect: r,
                width: ii.width(),
                height: ii.height(),
            });
        }
        acc += wr.weight * ii.sum_unchecked(r.x, r.y, r.w, r.h) as f64;
    }
    Ok(acc)
}

/// Runs the stages in order and stops at the first one whose score falls
/// below its threshold.
pub fn evaluate_cascade(
    ii: &IntegralImage,
    model: &CascadeModel,
    window_origin: (u32, u32),
    scale: f64,
) -> Result<CascadeOutcome, VisionError> {
    if model.stages.is_empty() {
        return Err(VisionError::InvalidModel("cascade has no stages".into()));
    }
    let win = scale_rect(
        Rect::new(0, 0, model.window_w, model.window_h),
        window_origin,
        scale,
    );
    if !win.fits_in(ii.width(), ii.height()) {
        return Err(VisionError::OutOfBounds {
            rect: win,
            width: ii.width(),
            height: ii.height(),
        });
    }
    let s2 = scale * scale;
    let mut total = 0.0;
    for (i, stage) in model.stages.iter().enumerate() {
        let mut stage_score = 0.0;
        for weak in &stage.weak_classifiers {
            let v = haar_feature_value(ii, &weak.feature, window_origin, scale)?;
            stage_score += if v < weak.split_threshold * s2 {
                weak.left_value
            } else {
                weak.right_value
            };
        }
        if stage_score < stage.threshold {
            return Ok(CascadeOutcome {
                accepted: false,
                stages_evaluated: i + 1,
                score: stage_score,
            });
        }
        total += stage_score;
    }
    Ok(CascadeOutcome {
        accepted: true,
        stages_evaluated: model.stages.len(),
        score: total,
    })
}

impl CascadeModel {
    pub fn validate(&self) -> Result<(), VisionError> {
        if self.window_w == 0 || self.window_h == 0 {
            return Err(VisionError::InvalidModel(
                "zero-sized cascade window".into(),
            ));
        }
        if self.stages.is_empty() {
            return Err(VisionError::InvalidModel("cascade has no stages".into()));
        }
        for stage in &self.stages {
            if stage.threshold.is_nan() {
                return Err(VisionError::InvalidModel("NaN stage threshold".into()));
            }
            for weak in &stage.weak_classifiers {
                if weak.feature.window_w != self.window_w || weak.feature.window_h != self.window_h
                {
                    return Err(VisionError::InvalidModel(
                        "feature window differs from cascade window".into(),
                    ));
                }
                weak.feature.validate()?;
            }
        }
        Ok(())
    }

    /// Parses the `cascade v1` text format:
    ///
    /// ```text
    /// cascade v1 <win_w> <win_h> <n_stages>
    /// stage <threshold> <n_weak>
    /// weak <split_threshold> <left_value> <right_value> <n_rects>
    /// rect <x> <y> <w> <h> <weight>
    /// ```
    ///
    /// `stage` records are followed by their `weak` records, and each `weak`
    /// by its `rect` records.
    pub fn parse(text: &str) -> Result<Self, VisionError> {
        let mut recs = Records::new(text);
        let head = recs.expect("cascade header")?;
        head.keyword("cascade", 4)?;
        if head.tokens[1] != "v1" {
            return Err(ParseError::new(
                head.line,
                format!("unsupported version `{}`", head.tokens[1]),
            )
            .into());
        }
        let window_w: u32 = head.parse(2, "window width")?;
        let window_h: u32 = head.parse(3, "window height")?;
        let n_stages: usize = head.parse(4, "stage count")?;
        if n_stages == 0 {
            return Err(ParseError::new(head.line, "stage count must be at least 1").into());
        }

        let mut stages = Vec::with_capacity(n_stages.min(1024));
        for _ in 0..n_stages {
            let rec = recs.expect("stage")?;
            rec.keyword("stage", 2)?;
            let threshold: f64 = rec.parse(1, "stage threshold")?;
            let n_weak: usize = rec.parse(2, "weak classifier count")?;
            let mut weak_classifiers = Vec::with_capacity(n_weak.min(1024));
            for _ in 0..n_weak {
                let w = recs.expect("weak")?;
                w.keyword("weak", 4)?;
                let split_threshold: f64 = w.parse(1, "split threshold")?;
                let left_value: f64 = w.parse(2, "left value")?;
                let right_value: f64 = w.parse(3, "right value")?;
                let n_rects: usize = w.parse(4, "rect count")?;
                let mut rects = Vec::with_capacity(n_rects.min(64));
                for _ in 0..n_rects {
                    let r = recs.expect("rect")?;
                    r.keyword("rect", 5)?;
                    let rect = Rect::new(
                        r.parse(1, "rect x")?,
                        r.parse(2, "rect y")?,
                        r.parse(3, "rect w")?,
                        r.parse(4, "rect h")?,
                    );
                    rects.push(WeightedRect {
                        rect,
                        weight: r.parse(5, "rect weight")?,
                    });
                }
                let feature = HaarFeature {
                    rects,
                    window_w,
                    window_h,
                };
                feature
                    .validate()
                    .map_err(|e| ParseError::new(w.line, e.to_string()))?;
                weak_classifiers.push(WeakClassifier {
                    feature,
                    split_threshold,
                    left_value,
                    right_value,
                });
            }
            stages.push(Stage {
                threshold,
                weak_classifiers,
            });
        }
        recs.finish()?;
        let model = CascadeModel {
            window_w,
            window_h,
            stages,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "cascade v1 {} {} {}",
            self.window_w,
            self.window_h,
            self.stages.len()
        );
        for stage in &self.stages {
            let _ = writeln!(
                out,
                "stage {} {}",
                fmt_f64(stage.threshold),
                stage.weak_classifiers.len()
            );
            for weak in &stage.weak_classifiers {
                let _ = writeln!(
                    out,
                    "  weak {} {} {} {}",
                    fmt_f64(weak.split_threshold),
                    fmt_f64(weak.left_value),
                    fmt_f64(weak.right_value),
                    weak.feature.rects.len()
                );
                for wr in &weak.feature.rects {
                    let _ = writeln!(
                        out,
                        "    rect {} {} {} {} {}",
                        wr.rect.x,
                        wr.rect.y,
                        wr.rect.w,
                        wr.rect.h,
                        fmt_f64(wr.weight)
                    );
                }
            }
        }
        out
    }
}
