//! Image processing and person detection primitives.
//!
//! Everything here is a pure function over immutable inputs. Models are
//! read-only once loaded, so a single `CascadeModel` or `LinearSvmModel` can
//! be shared across threads freely.

mod cascade;
mod detect;
mod gaussian;
mod hog;
mod image;
mod integral;
mod nms;
mod svm;

pub use cascade::{
    evaluate_cascade, haar_feature_value, CascadeModel, CascadeOutcome, HaarFeature, Stage,
    WeakClassifier, WeightedRect,
};
pub use detect::{
    sliding_window_detect, sliding_window_scan, Detection, Detector, PyramidParams, ScanReport,
};
pub use gaussian::{gaussian_blur, gaussian_kernel, GaussianKernelParams, Kernel2D};
pub use hog::{hog_descriptor, HogGrid, HogParams};
pub use image::{luma_bt601, resize_area, resize_bilinear, GrayImage, Rect, RgbImage};
pub use integral::{integral_image, rect_sum, IntegralImage};
pub use nms::{non_max_suppression, suppress_contained, DEFAULT_CONTAINMENT, DEFAULT_NMS_IOU};
pub use svm::{fit_linear_svm, svm_score, LinearSvmModel, SvmFitOptions};

use crate::model_io::ParseError;

#[derive(Debug, thiserror::Error)]
pub enum VisionError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("rect {rect:?} out of bounds for {width}x{height} image")]
    OutOfBounds { rect: Rect, width: u32, height: u32 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}
