//! Labeled person crops for fitting and evaluating ROI classifiers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::render::{draw_side_sprite, Background, Canvas, HALF_WIDTH};
use super::scene::{EntityKind, Facing};
use crate::classifier::{RoiImage, WeaponClass, NUM_CLASSES, ROI_SIZE};
use crate::vision::{resize_bilinear, GrayImage, Rect};

/// Sprite heights in frame pixels, spanning the useful detection range.
pub const CORPUS_SPRITE_HEIGHT: (f64, f64) = (150.0, 640.0);
/// Crop size error relative to the sprite window.
pub const CORPUS_SCALE_JITTER: f64 = 0.12;
/// Crop centre error as a fraction of sprite height.
pub const CORPUS_SHIFT_JITTER: f64 = 0.06;

/// `n` ROIs with labels drawn uniformly from the eight classes. Each is a
/// sprite rendered at native size over a random patch of background, cropped
/// with a jittered window, then bilinearly resized to 227×227 exactly as the
/// pipeline resizes detections.
pub fn labeled_corpus(seed: u64, n: usize) -> Vec<(RoiImage, WeaponClass)> {
    let bg = Background::new(seed);
    labeled_corpus_with(&bg, seed, n)
}

pub fn labeled_corpus_with(bg: &Background, seed: u64, n: usize) -> Vec<(RoiImage, WeaponClass)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| corpus_sample(&mut rng, bg)).collect()
}

fn corpus_sample(rng: &mut ChaCha8Rng, bg: &Background) -> (RoiImage, WeaponClass) {
    let label = WeaponClass::ALL[rng.gen_range(0..NUM_CLASSES)];
    let facing = if rng.gen::<bool>() {
        Facing::Right
    } else {
        Facing::Left
    };
    let s = rng.gen_range(CORPUS_SPRITE_HEIGHT.0..CORPUS_SPRITE_HEIGHT.1);
    let crop_h = (s * (1.0 + rng.gen_range(-CORPUS_SCALE_JITTER..CORPUS_SCALE_JITTER)))
        .round()
        .max(2.0);
    let crop_w = (crop_h * 2.0 * HALF_WIDTH).round().max(1.0);
    let shift = (
        s * rng.gen_range(-CORPUS_SHIFT_JITTER..CORPUS_SHIFT_JITTER),
        s * rng.gen_range(-CORPUS_SHIFT_JITTER..CORPUS_SHIFT_JITTER),
    );
    let ox = rng.gen_range(0..super::render::TILE_WIDTH as i64);
    let oy = rng.gen_range(0..super::render::TILE_HEIGHT as i64);

    let mut img = GrayImage::new(crop_w as u32, crop_h as u32).expect("non-empty crop");
    bg.fill(&mut img, ox, oy);
    // Sprite centre sits at the crop centre minus the framing error.
    let cx = crop_w / 2.0 - shift.0;
    let top = crop_h / 2.0 - shift.1 - s / 2.0;
    let mut canvas = Canvas {
        img: &mut img,
        origin: (0.0, 0.0),
    };
    draw_side_sprite(
        &mut canvas,
        cx,
        top,
        s,
        EntityKind::from_label(label),
        facing,
    );
    let roi = resize_bilinear(&img, ROI_SIZE, ROI_SIZE).expect("ROI size is non-zero");
    let bbox = Rect::new(0, 0, crop_w as u32, crop_h as u32);
    (RoiImage::new(roi, bbox).expect("ROI is 227x227"), label)
}
