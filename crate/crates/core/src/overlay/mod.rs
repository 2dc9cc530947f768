//! Detection annotation and head-mounted display formatting.

mod font;
mod ppm;

pub use font::{glyph, text_width, GLYPH_H, GLYPH_W};
pub use ppm::{read_ppm, write_pgm, write_ppm, PpmError};

use crate::classifier::{ThreatVerdict, VerdictColor};
use crate::vision::{Detection, Rect, RgbImage, VisionError};

pub const FRAME_W: u32 = 1900;
pub const FRAME_H: u32 = 1000;
pub const BOX_THICKNESS: u32 = 3;
/// Glyph magnification on the full-resolution frame.
pub const TEXT_SCALE: u32 = 3;

pub const GREEN: [u8; 3] = [0, 255, 0];
pub const RED: [u8; 3] = [255, 0, 0];
pub const UNKNOWN_GRAY: [u8; 3] = [128, 128, 128];
const TEXT_BACKGROUND: [u8; 3] = [0, 0, 0];
const DASH_ON: u32 = 8;
const DASH_OFF: u32 = 4;

pub fn verdict_rgb(color: VerdictColor) -> [u8; 3] {
    match color {
        VerdictColor::Green => GREEN,
        VerdictColor::Red => RED,
        VerdictColor::Unknown => UNKNOWN_GRAY,
    }
}

/// Annotated color frame, nominally 1900×1000.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedFrame {
    pub image: RgbImage,
    pub detections: Vec<(Detection, ThreatVerdict)>,
    pub frame_seq: u32,
    pub timestamp_us: u64,
}

/// Frame for a half side-by-side headset: two identical 950×1000 views.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SbsFrame {
    image: RgbImage,
}

impl SbsFrame {
    pub fn image(&self) -> &RgbImage {
        &self.image
    }

    pub fn into_image(self) -> RgbImage {
        self.image
    }

    /// True when the right half repeats the left half bit for bit.
    pub fn halves_identical(&self) -> bool {
        let half = (self.image.width() / 2) as usize * 3;
        self.image
            .data()
            .chunks_exact(half * 2)
            .all(|row| row[..half] == row[half..])
    }
}

/// Label drawn next to a box: the threat percentage, or `?` when unknown.
pub fn label_text(v: &ThreatVerdict) -> String {
    match v.color {
        VerdictColor::Unknown => "?".to_string(),
        _ => v.percent.to_string(),
    }
}

/// Draws every detection onto `image` and wraps the result.
pub fn draw_annotations(
    mut image: RgbImage,
    detections: &[(Detection, ThreatVerdict)],
    frame_seq: u32,
    timestamp_us: u64,
) -> AnnotatedFrame {
    for (d, v) in detections {
        annotate(&mut image, d.bbox, v);
    }
    AnnotatedFrame {
        image,
        detections: detections.to_vec(),
        frame_seq,
        timestamp_us,
    }
}

/// Draws one box and its label. Parts falling outside the image are
/// clipped.
pub fn annotate(image: &mut RgbImage, bbox: Rect, v: &ThreatVerdict) {
    let rgb = verdict_rgb(v.color);
    let dashed = v.color == VerdictColor::Unknown;
    draw_box(image, bbox, BOX_THICKNESS, rgb, dashed);
    let text = label_text(v);
    let text_h = GLYPH_H * TEXT_SCALE;
    // Above the top-left corner, or just inside the box when there is no room.
    let ty = if bbox.y >= text_h + 2 {
        bbox.y as i64 - text_h as i64 - 2
    } else {
        (bbox.y + BOX_THICKNESS + 2) as i64
    };
    let tx = bbox.x as i64
        + if bbox.y >= text_h + 2 {
            0
        } else {
            (BOX_THICKNESS + 2) as i64
        };
    draw_text(image, tx, ty, &text, TEXT_SCALE, rgb);
}

fn put(image: &mut RgbImage, x: i64, y: i64, rgb: [u8; 3]) {
    if x >= 0 && y >= 0 && x < image.width() as i64 && y < image.height() as i64 {
        image.set(x as u32, y as u32, rgb);
    }
}

/// Border of `thickness` pixels lying inside `bbox`. Dashed borders follow
/// an on/off pattern along each edge.
pub fn draw_box(image: &mut RgbImage, bbox: Rect, thickness: u32, rgb: [u8; 3], dashed: bool) {
    if bbox.w == 0 || bbox.h == 0 {
        return;
    }
    let t = thickness.min(bbox.w).min(bbox.h) as i64;
    let (x0, y0) = (bbox.x as i64, bbox.y as i64);
    let (w, h) = (bbox.w as i64, bbox.h as i64);
    let on = |i: i64| !dashed || (i as u32 % (DASH_ON + DASH_OFF)) < DASH_ON;
    for i in 0..w {
        if on(i) {
            for k in 0..t {
                put(image, x0 + i, y0 + k, rgb);
                put(image, x0 + i, y0 + h - 1 - k, rgb);
            }
        }
    }
    for j in 0..h {
        if on(j) {
            for k in 0..t {
                put(image, x0 + k, y0 + j, rgb);
                put(image, x0 + w - 1 - k, y0 + j, rgb);
            }
        }
    }
}

/// Renders `text` with the built-in font. Each glyph cell is painted in
/// full: foreground on a black background. Unsupported characters render
/// as blank cells.
pub fn draw_text(image: &mut RgbImage, x: i64, y: i64, text: &str, scale: u32, rgb: [u8; 3]) {
    let s = scale.max(1) as i64;
    let advance = (GLYPH_W as i64 + 1) * s;
    for (i, ch) in text.chars().enumerate() {
        let rows = glyph(ch).unwrap_or([0; GLYPH_H as usize]);
        let gx = x + i as i64 * advance;
        for (r, bits) in rows.iter().enumerate() {
            for c in 0..GLYPH_W as i64 {
                let lit = bits >> (GLYPH_W as i64 - 1 - c) & 1 == 1;
                let color = if lit { rgb } else { TEXT_BACKGROUND };
                for dy in 0..s {
                    for dx in 0..s {
                        put(image, gx + c * s + dx, y + r as i64 * s + dy, color);
                    }
                }
            }
        }
    }
}

/// Horizontal 2:1 decimation: each output pixel is the per-channel mean of
/// a column pair, rounded half up. Width must be even.
pub fn decimate_columns(image: &RgbImage) -> Result<RgbImage, VisionError> {
    if !image.width().is_multiple_of(2) {
        return Err(VisionError::InvalidInput(format!(
            "width {} is not even",
            image.width()
        )));
    }
    let out: Vec<u8> = image
        .data()
        .chunks_exact(6)
        .flat_map(|p| {
            [
                ((p[0] as u16 + p[3] as u16 + 1) >> 1) as u8,
                ((p[1] as u16 + p[4] as u16 + 1) >> 1) as u8,
                ((p[2] as u16 + p[5] as u16 + 1) >> 1) as u8,
            ]
        })
        .collect();
    RgbImage::from_raw(image.width() / 2, image.height(), out)
}

/// Converts a 1900×1000 frame to half side-by-side: the decimated 950×1000
/// view placed in both halves.
pub fn to_half_sbs(frame: &AnnotatedFrame) -> Result<SbsFrame, VisionError> {
    sbs_from_image(&frame.image)
}

/// As [`to_half_sbs`] for a bare raster.
pub fn sbs_from_image(image: &RgbImage) -> Result<SbsFrame, VisionError> {
    if image.width() != FRAME_W || image.height() != FRAME_H {
        return Err(VisionError::InvalidInput(format!(
            "half side-by-side needs {FRAME_W}x{FRAME_H}, got {}x{}",
            image.width(),
            image.height()
        )));
    }
    let half = decimate_columns(image)?;
    let row = half.width() as usize * 3;
    let mut out = Vec::with_capacity(image.data().len());
    for r in half.data().chunks_exact(row) {
        out.extend_from_slice(r);
        out.extend_from_slice(r);
    }
    Ok(SbsFrame {
        image: RgbImage::from_raw(FRAME_W, FRAME_H, out)?,
    })
}
