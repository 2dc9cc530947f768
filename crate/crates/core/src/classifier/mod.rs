//! Threat classification of detected people.
//!
//! A detection box is cropped and resized to a fixed 227×227 ROI, handed to
//! a [`ClassifierPlugin`] that returns one probability per label, and the
//! result is reduced to a green/red [`ThreatVerdict`].

mod fit;
mod plugin;
mod reference;

use std::fmt;

pub use fit::{fit_softmax_regression, FitOptions, FitReport};
pub use plugin::{classify, ClassifierPlugin, PluginError, PluginHost, StubClassifier};
pub use reference::ReferenceClassifier;

use crate::vision::{resize_bilinear, GrayImage, Rect, VisionError};

pub const ROI_SIZE: u32 = 227;
pub const NUM_CLASSES: usize = 8;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Canonical label set. Index 0 is the only non-threat class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WeaponClass {
    NoWeapon,
    AssaultRifle,
    Revolver,
    Pistol,
    Shotgun,
    SubmachineGun,
    SniperRifle,
    MachineGun,
}

impl WeaponClass {
    pub const ALL: [WeaponClass; NUM_CLASSES] = [
        WeaponClass::NoWeapon,
        WeaponClass::AssaultRifle,
        WeaponClass::Revolver,
        WeaponClass::Pistol,
        WeaponClass::Shotgun,
        WeaponClass::SubmachineGun,
        WeaponClass::SniperRifle,
        WeaponClass::MachineGun,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            WeaponClass::NoWeapon => "no_weapon",
            WeaponClass::AssaultRifle => "assault_rifle",
            WeaponClass::Revolver => "revolver",
            WeaponClass::Pistol => "pistol",
            WeaponClass::Shotgun => "shotgun",
            WeaponClass::SubmachineGun => "submachine_gun",
            WeaponClass::SniperRifle => "sniper_rifle",
            WeaponClass::MachineGun => "machine_gun",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn is_armed(self) -> bool {
        self != WeaponClass::NoWeapon
    }
}

impl fmt::Display for WeaponClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ClassifierError {
    #[error(transparent)]
    Vision(#[from] VisionError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid class scores: {0}")]
    InvalidScores(String),
    #[error("classifier unavailable: {0}")]
    Unavailable(String),
}

/// Person crop resized to 227×227, plus the full-frame box it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoiImage {
    image: GrayImage,
    pub source_bbox: Rect,
}

impl RoiImage {
    pub fn new(image: GrayImage, source_bbox: Rect) -> Result<Self, ClassifierError> {
        if image.width() != ROI_SIZE || image.height() != ROI_SIZE {
            return Err(ClassifierError::InvalidInput(format!(
                "ROI must be {ROI_SIZE}x{ROI_SIZE}, got {}x{}",
                image.width(),
                image.height()
            )));
        }
        Ok(Self { image, source_bbox })
    }

    pub fn image(&self) -> &GrayImage {
        &self.image
    }

    pub fn bytes(&self) -> &[u8] {
        self.image.data()
    }
}

/// Crop `bbox` out of `frame` and bilinearly resize it to 227×227.
pub fn extract_and_resize(frame: &GrayImage, bbox: Rect) -> Result<RoiImage, ClassifierError> {
    let crop = frame.crop(bbox)?;
    let image = resize_bilinear(&crop, ROI_SIZE, ROI_SIZE)?;
    RoiImage::new(image, bbox)
}

/// A validated probability vector over [`WeaponClass::ALL`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScores {
    probabilities: [f64; NUM_CLASSES],
}

impl ClassScores {
    /// Accepts exactly eight finite probabilities in [0, 1] summing to 1
    /// within 1e-9.
    pub fn new(probs: &[f64]) -> Result<Self, ClassifierError> {
        if probs.len() != NUM_CLASSES {
            return Err(ClassifierError::InvalidScores(format!(
                "expected {NUM_CLASSES} probabilities, got {}",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(ClassifierError::InvalidScores(format!(
                "probability {p} outside [0, 1]"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ClassifierError::InvalidScores(format!(
                "probabilities sum to {sum}"
            )));
        }
        let mut probabilities = [0.0; NUM_CLASSES];
        probabilities.copy_from_slice(probs);
        Ok(Self { probabilities })
    }

    pub fn probabilities(&self) -> &[f64; NUM_CLASSES] {
        &self.probabilities
    }

    pub fn get(&self, c: WeaponClass) -> f64 {
        self.probabilities[c.index()]
    }

    /// Most probable label; the lowest index wins ties.
    pub fn argmax_label(&self) -> WeaponClass {
        let mut best = 0;
        for i in 1..NUM_CLASSES {
            if self.probabilities[i] > self.probabilities[best] {
                best = i;
            }
        }
        WeaponClass::ALL[best]
    }

    pub fn threat_probability(&self) -> f64 {
        (1.0 - self.get(WeaponClass::NoWeapon)).clamp(0.0, 1.0)
    }
}

/// Numerically stable softmax over eight logits.
pub fn softmax(logits: &[f64]) -> Result<ClassScores, ClassifierError> {
    if logits.len() != NUM_CLASSES {
        return Err(ClassifierError::InvalidInput(format!(
            "expected {NUM_CLASSES} logits, got {}",
            logits.len()
        )));
    }
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(ClassifierError::InvalidInput("non-finite logit".into()));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let probs: Vec<f64> = exps.iter().map(|e| e / sum).collect();
    ClassScores::new(&probs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VerdictColor {
    Green,
    Red,
    /// Classifier failed; drawn as a dashed gray box.
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreatVerdict {
    pub threat_probability: f64,
    /// `round_half_up(100 · threat_probability)`.
    pub percent: u8,
    pub color: VerdictColor,
    /// Argmax label; `None` for unknown verdicts.
    pub label: Option<WeaponClass>,
}

impl ThreatVerdict {
    pub fn unknown() -> Self {
        Self {
            threat_probability: 0.0,
            percent: 0,
            color: VerdictColor::Unknown,
            label: None,
        }
    }
}

pub fn percent_half_up(p: f64) -> u8 {
    // Nudge by a few ulps so exact decimal halves such as 0.495 round up.
    (100.0 * p + 0.5 + 1e-9).floor().clamp(0.0, 100.0) as u8
}

/// Red at or above `threshold`, green below.
pub fn verdict(scores: &ClassScores, threshold: f64) -> ThreatVerdict {
    let threat_probability = scores.threat_probability();
    ThreatVerdict {
        threat_probability,
        percent: percent_half_up(threat_probability),
        color: if threat_probability >= threshold {
            VerdictColor::Red
        } else {
            VerdictColor::Green
        },
        label: Some(scores.argmax_label()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_hot(i: usize) -> ClassScores {
        let mut p = [0.0; NUM_CLASSES];
        p[i] = 1.0;
        ClassScores::new(&p).unwrap()
    }

    #[test]
    fn label_names_round_trip() {
        for c in WeaponClass::ALL {
            assert_eq!(WeaponClass::from_name(c.name()), Some(c));
            assert_eq!(WeaponClass::from_index(c.index()), Some(c));
        }
        assert!(!WeaponClass::NoWeapon.is_armed());
        assert!(WeaponClass::Pistol.is_armed());
    }

    #[test]
    fn identity_and_uniform_crops() {
        let frame = GrayImage::from_fn(300, 300, |x, y| ((x * 3 + y * 5) % 251) as u8).unwrap();
        let bbox = Rect::new(10, 20, ROI_SIZE, ROI_SIZE);
        let roi = extract_and_resize(&frame, bbox).unwrap();
        assert_eq!(roi.image(), &frame.crop(bbox).unwrap());
        assert_eq!(roi.source_bbox, bbox);

        let flat = GrayImage::filled(500, 500, 99).unwrap();
        let roi = extract_and_resize(&flat, Rect::new(3, 4, 454, 454)).unwrap();
        assert!(roi.bytes().iter().all(|&v| v == 99));
    }

    #[test]
    fn out_of_bounds_crop() {
        let frame = GrayImage::filled(100, 100, 0).unwrap();
        assert!(extract_and_resize(&frame, Rect::new(50, 50, 60, 10)).is_err());
    }

    #[test]
    fn softmax_examples() {
        let s = softmax(&[0.3; 8]).unwrap();
        assert!(s.probabilities().iter().all(|&p| (p - 0.125).abs() < 1e-15));
        let mut l = [0.0; 8];
        l[3] = 50.0;
        let s = softmax(&l).unwrap();
        assert!(s.get(WeaponClass::Pistol) > 0.999);
        assert_eq!(s.argmax_label(), WeaponClass::Pistol);
        assert!(softmax(&[f64::NAN; 8]).is_err());
        assert!(softmax(&[0.0; 7]).is_err());
    }

    #[test]
    fn score_validation() {
        assert!(ClassScores::new(&[0.5; 8]).is_err());
        assert!(ClassScores::new(&[1.5, -0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
        assert!(ClassScores::new(&[1.0; 1]).is_err());
    }

    #[test]
    fn verdict_examples() {
        let v = verdict(&one_hot(0), 0.5);
        assert_eq!(
            (v.threat_probability, v.percent, v.color),
            (0.0, 0, VerdictColor::Green)
        );
        let v = verdict(&one_hot(1), 0.5);
        assert_eq!(
            (v.threat_probability, v.percent, v.color),
            (1.0, 100, VerdictColor::Red)
        );
        assert_eq!(v.label, Some(WeaponClass::AssaultRifle));

        let mut p = [0.0; 8];
        p[0] = 0.505;
        p[2] = 0.495;
        let v = verdict(&ClassScores::new(&p).unwrap(), 0.5);
        assert_eq!(v.color, VerdictColor::Green);
        assert_eq!(v.percent, 50);
    }

    #[test]
    fn threshold_is_inclusive() {
        let mut p = [0.0; 8];
        p[0] = 0.5;
        p[1] = 0.5;
        assert_eq!(
            verdict(&ClassScores::new(&p).unwrap(), 0.5).color,
            VerdictColor::Red
        );
    }
}
