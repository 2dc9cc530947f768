//! Independent reference implementations shared by the integration suites
//! and the acceptance target. Each check returns `Err` with a description of
//! the first mismatch.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use teleop::classifier::VerdictColor;
use teleop::overlay::{sbs_from_image, FRAME_H, FRAME_W};
use teleop::telemetry::{
    calibrate, decode_link_frame, encode_link_frame, pose_to_pan_tilt, HeadPose, HeadTracker,
    ImuSample, LowPassState,
};
use teleop::transport::{
    crc32, decode_envelope, decode_message, encode_envelope, encode_message, ControlCommand,
    DetectionRecord, DetectionsMsg, Message, MessageKind, RobotStatus, VehicleMode, VideoFrame,
};
use teleop::vision::{
    evaluate_cascade, gaussian_blur, gaussian_kernel, haar_feature_value, hog_descriptor,
    integral_image, non_max_suppression, rect_sum, CascadeModel, Detection, GaussianKernelParams,
    GrayImage, HaarFeature, HogGrid, HogParams, Rect, RgbImage, Stage, WeakClassifier,
    WeightedRect,
};

pub type Check = Result<(), String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_gray(r: &mut ChaCha8Rng, w: u32, h: u32) -> GrayImage {
    let data = (0..w * h).map(|_| r.gen()).collect();
    GrayImage::from_raw(w, h, data).unwrap()
}

/// Smooth-ish image: random blobs over noise, so detectors and gradients see
/// structure rather than white noise only.
pub fn blobby_gray(r: &mut ChaCha8Rng, w: u32, h: u32) -> GrayImage {
    let mut img = random_gray(r, w, h);
    for _ in 0..8 {
        let (bw, bh) = (r.gen_range(1..=w / 2), r.gen_range(1..=h / 2));
        let (bx, by) = (r.gen_range(0..=w - bw), r.gen_range(0..=h - bh));
        let v: u8 = r.gen();
        for y in by..by + bh {
            for x in bx..bx + bw {
                img.set(x, y, v);
            }
        }
    }
    img
}

pub fn random_rect(r: &mut ChaCha8Rng, w: u32, h: u32) -> Rect {
    let x = r.gen_range(0..w);
    let y = r.gen_range(0..h);
    Rect::new(x, y, r.gen_range(0..=w - x), r.gen_range(0..=h - y))
}

pub fn naive_sum(img: &GrayImage, rect: Rect) -> u64 {
    let mut s = 0u64;
    for y in rect.y..rect.y + rect.h {
        for x in rect.x..rect.x + rect.w {
            s += img.get(x, y) as u64;
        }
    }
    s
}

// ---------------------------------------------------------------- vision

/// 20 images, 1000 rectangles each, against pixel-by-pixel summation.
pub fn integral_oracle() -> Check {
    let mut r = rng(0x1A7E);
    for i in 0..20 {
        let (w, h) = (r.gen_range(1..=96), r.gen_range(1..=96));
        let img = random_gray(&mut r, w, h);
        let ii = integral_image(&img);
        for _ in 0..1000 {
            let rect = random_rect(&mut r, w, h);
            let got = rect_sum(&ii, rect).map_err(|e| e.to_string())?;
            let want = naive_sum(&img, rect);
            if got != want {
                return Err(format!("image {i} {w}x{h} rect {rect:?}: {got} != {want}"));
            }
        }
        for y in 0..=h {
            for x in 0..=w {
                let v = ii.at(x, y);
                if (x > 0 && ii.at(x - 1, y) > v) || (y > 0 && ii.at(x, y - 1) > v) {
                    return Err(format!("table not monotone at ({x}, {y})"));
                }
            }
        }
    }
    Ok(())
}

fn random_feature(r: &mut ChaCha8Rng, ww: u32, wh: u32) -> HaarFeature {
    let n = r.gen_range(2..=4);
    let mut rects: Vec<WeightedRect> = (0..n)
        .map(|_| {
            let rect = loop {
                let rc = random_rect(r, ww, wh);
                if rc.w > 0 && rc.h > 0 {
                    break rc;
                }
            };
            WeightedRect {
                rect,
                weight: r.gen_range(1..=3) as f64,
            }
        })
        .collect();
    rects[0].weight = -rects[0].weight;
    HaarFeature::new(ww, wh, rects).unwrap()
}

fn scaled(v: u32, s: f64) -> u32 {
    (v as f64 * s).round() as u32
}

/// Pixel extent covered by a feature's scaled rectangles. Rounding can push
/// it one pixel past the scaled window.
fn scaled_extent<'a>(features: impl IntoIterator<Item = &'a HaarFeature>, s: f64) -> (u32, u32) {
    features
        .into_iter()
        .flat_map(|f| &f.rects)
        .fold((0, 0), |(w, h), wr| {
            (
                w.max(scaled(wr.rect.x, s) + scaled(wr.rect.w, s)),
                h.max(scaled(wr.rect.y, s) + scaled(wr.rect.h, s)),
            )
        })
}

/// Feature value computed from raw pixels with the same rectangle scaling
/// rule: each coordinate and side is multiplied by the scale and rounded.
pub fn naive_feature(img: &GrayImage, f: &HaarFeature, origin: (u32, u32), scale: f64) -> f64 {
    f.rects
        .iter()
        .map(|wr| {
            let r = Rect::new(
                origin.0 + scaled(wr.rect.x, scale),
                origin.1 + scaled(wr.rect.y, scale),
                scaled(wr.rect.w, scale),
                scaled(wr.rect.h, scale),
            );
            wr.weight * naive_sum(img, r) as f64
        })
        .sum()
}

/// Haar responses at random windows and scales against region sums over raw
/// pixels, plus the step-edge case with its closed-form value.
pub fn haar_oracle() -> Check {
    let mut edge = GrayImage::new(24, 24).unwrap();
    for y in 0..24 {
        for x in 12..24 {
            edge.set(x, y, 255);
        }
    }
    let f = HaarFeature::new(
        24,
        24,
        vec![
            WeightedRect {
                rect: Rect::new(0, 0, 12, 24),
                weight: 1.0,
            },
            WeightedRect {
                rect: Rect::new(12, 0, 12, 24),
                weight: -1.0,
            },
        ],
    )
    .unwrap();
    let v =
        haar_feature_value(&integral_image(&edge), &f, (0, 0), 1.0).map_err(|e| e.to_string())?;
    if v != -255.0 * 12.0 * 24.0 {
        return Err(format!("step edge feature {v}"));
    }

    let mut r = rng(0x4AA2);
    for _ in 0..20 {
        let (w, h) = (r.gen_range(48..=128), r.gen_range(48..=128));
        let img = blobby_gray(&mut r, w, h);
        let ii = integral_image(&img);
        for _ in 0..200 {
            let (ww, wh) = (r.gen_range(4..=24), r.gen_range(4..=24));
            let f = random_feature(&mut r, ww, wh);
            let scale = [1.0, 1.25, 1.5, 2.0][r.gen_range(0..4)];
            let (ew, eh) = scaled_extent([&f], scale);
            let (sw, sh) = (scaled(ww, scale).max(ew), scaled(wh, scale).max(eh));
            if sw > w || sh > h {
                continue;
            }
            let origin = (r.gen_range(0..=w - sw), r.gen_range(0..=h - sh));
            let got = haar_feature_value(&ii, &f, origin, scale).map_err(|e| e.to_string())?;
            let want = naive_feature(&img, &f, origin, scale);
            if got != want {
                return Err(format!(
                    "feature at {origin:?} scale {scale}: {got} != {want}"
                ));
            }
        }
    }
    Ok(())
}

/// Decision of a cascade that always runs every stage and computes feature
/// responses from raw pixels.
pub fn cascade_without_early_exit(
    img: &GrayImage,
    m: &CascadeModel,
    origin: (u32, u32),
    scale: f64,
) -> (bool, Option<usize>) {
    let s2 = scale * scale;
    let mut first_fail = None;
    for (i, stage) in m.stages.iter().enumerate() {
        let score: f64 = stage
            .weak_classifiers
            .iter()
            .map(|w| {
                if naive_feature(img, &w.feature, origin, scale) < w.split_threshold * s2 {
                    w.left_value
                } else {
                    w.right_value
                }
            })
            .sum();
        if score < stage.threshold && first_fail.is_none() {
            first_fail = Some(i);
        }
    }
    (first_fail.is_none(), first_fail)
}

fn random_cascade(r: &mut ChaCha8Rng, img: &GrayImage, ww: u32, wh: u32) -> CascadeModel {
    let stages = (0..r.gen_range(2..=4))
        .map(|_| {
            let weak: Vec<WeakClassifier> = (0..r.gen_range(1..=4))
                .map(|_| {
                    let feature = random_feature(r, ww, wh);
                    // Split near a response seen on the image so both branches occur.
                    let ox = r.gen_range(0..=img.width() - ww);
                    let oy = r.gen_range(0..=img.height() - wh);
                    WeakClassifier {
                        split_threshold: naive_feature(img, &feature, (ox, oy), 1.0),
                        feature,
                        left_value: r.gen_range(-1.0..1.0),
                        right_value: r.gen_range(-1.0..1.0),
                    }
                })
                .collect();
            Stage {
                threshold: r.gen_range(-0.5..0.5),
                weak_classifiers: weak,
            }
        })
        .collect();
    CascadeModel {
        window_w: ww,
        window_h: wh,
        stages,
    }
}

/// Random cascades and the embedded person cascade, early exit against
/// exhaustive evaluation.
pub fn cascade_oracle() -> Check {
    let mut r = rng(0xCA5C);
    let mut accepted = 0;
    let mut rejected = 0;
    for _ in 0..40 {
        let (w, h) = (r.gen_range(40..=96), r.gen_range(40..=96));
        let img = blobby_gray(&mut r, w, h);
        let ii = integral_image(&img);
        let (ww, wh) = (r.gen_range(8..=24), r.gen_range(8..=24));
        let m = random_cascade(&mut r, &img, ww, wh);
        m.validate().map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let scale = [1.0, 1.5][r.gen_range(0..2)];
            let (ew, eh) = scaled_extent(
                m.stages
                    .iter()
                    .flat_map(|s| &s.weak_classifiers)
                    .map(|w| &w.feature),
                scale,
            );
            let (sw, sh) = (scaled(ww, scale).max(ew), scaled(wh, scale).max(eh));
            let origin = (r.gen_range(0..=w - sw), r.gen_range(0..=h - sh));
            let fast = evaluate_cascade(&ii, &m, origin, scale).map_err(|e| e.to_string())?;
            let (acc, fail) = cascade_without_early_exit(&img, &m, origin, scale);
            if fast.accepted != acc {
                return Err(format!("decision differs at {origin:?} scale {scale}"));
            }
            if fast.stages_evaluated > m.stages.len() {
                return Err("evaluated more stages than exist".into());
            }
            let expected_stages = fail.map_or(m.stages.len(), |i| i + 1);
            if fast.stages_evaluated != expected_stages {
                return Err(format!(
                    "stopped after {} stages, first failure is stage {expected_stages}",
                    fast.stages_evaluated
                ));
            }
            if acc {
                accepted += 1;
            } else {
                rejected += 1;
            }
        }
    }
    if accepted == 0 || rejected == 0 {
        return Err(format!(
            "degenerate sample: {accepted} accepted, {rejected} rejected"
        ));
    }

    let m = teleop::models::person_cascade();
    let mission = teleop::sim::Mission::standard(3, 1);
    let frame = mission.frames().next().expect("one frame").image;
    let small = teleop::vision::resize_area(&frame, 633, 333).map_err(|e| e.to_string())?;
    let ii = integral_image(&small);
    for _ in 0..300 {
        let origin = (
            r.gen_range(0..=633 - m.window_w),
            r.gen_range(0..=333 - m.window_h),
        );
        let fast = evaluate_cascade(&ii, m, origin, 1.0).map_err(|e| e.to_string())?;
        let (acc, _) = cascade_without_early_exit(&small, m, origin, 1.0);
        if fast.accepted != acc {
            return Err(format!("person cascade decision differs at {origin:?}"));
        }
    }
    Ok(())
}

fn iou_f64(a: &Rect, b: &Rect) -> f64 {
    let ix = (a.x + a.w).min(b.x + b.w) as f64 - a.x.max(b.x) as f64;
    let iy = (a.y + a.h).min(b.y + b.h) as f64 - a.y.max(b.y) as f64;
    let inter = ix.max(0.0) * iy.max(0.0);
    let union = (a.w * a.h + b.w * b.h) as f64 - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Classic quadratic suppression over a precomputed order: each kept box
/// marks every later box that overlaps it too much.
pub fn nms_quadratic(dets: &[Detection], thr: f64) -> Vec<Detection> {
    let mut idx: Vec<usize> = (0..dets.len()).collect();
    idx.sort_by(|&i, &j| {
        let (a, b) = (&dets[i], &dets[j]);
        b.person_score
            .total_cmp(&a.person_score)
            .then(a.bbox.x.cmp(&b.bbox.x))
            .then(a.bbox.y.cmp(&b.bbox.y))
    });
    let mut suppressed = vec![false; dets.len()];
    let mut out = Vec::new();
    for (k, &i) in idx.iter().enumerate() {
        if suppressed[i] {
            continue;
        }
        out.push(dets[i]);
        for &j in &idx[k + 1..] {
            if iou_f64(&dets[i].bbox, &dets[j].bbox) > thr {
                suppressed[j] = true;
            }
        }
    }
    out
}

pub fn random_detections(r: &mut ChaCha8Rng, n: usize) -> Vec<Detection> {
    (0..n)
        .map(|_| {
            let (w, h) = (r.gen_range(4..60), r.gen_range(4..60));
            Detection {
                bbox: Rect::new(r.gen_range(0..100), r.gen_range(0..100), w, h),
                // Coarse scores so ties exercise the position tie-break.
                person_score: r.gen_range(0..8) as f64 * 0.25,
                scale: 1.0,
            }
        })
        .collect()
}

pub fn nms_oracle() -> Check {
    let mut r = rng(0x0035);
    for case in 0..2000 {
        let n = r.gen_range(0..=20);
        let dets = random_detections(&mut r, n);
        let thr = if case % 2 == 0 {
            0.5
        } else {
            r.gen_range(0.0..1.0)
        };
        let got = non_max_suppression(&dets, thr);
        let want = nms_quadratic(&dets, thr);
        if got != want {
            return Err(format!(
                "case {case}: {} kept vs {} expected",
                got.len(),
                want.len()
            ));
        }
    }
    Ok(())
}

/// HOG descriptor of the window whose top-left pixel is `(ox, oy)` in `img`,
/// computed pixel by pixel with no shared state. Gradients read the full
/// image, clamped at its border.
pub fn hog_scalar(img: &GrayImage, ox: u32, oy: u32, p: &HogParams) -> Vec<f64> {
    let bins = p.bins as usize;
    let (cx, cy) = (
        (p.window_w / p.cell) as usize,
        (p.window_h / p.cell) as usize,
    );
    let mut cells = vec![vec![0f64; bins]; cx * cy];
    let px = |x: i64, y: i64| img.get_clamped(x, y) as f64;
    for wy in 0..p.window_h as i64 {
        for wx in 0..p.window_w as i64 {
            let (x, y) = (ox as i64 + wx, oy as i64 + wy);
            let gx = px(x + 1, y) - px(x - 1, y);
            let gy = px(x, y + 1) - px(x, y - 1);
            if gx == 0.0 && gy == 0.0 {
                continue;
            }
            let mag = gx.hypot(gy);
            let mut deg = gy.atan2(gx).to_degrees();
            while deg < 0.0 {
                deg += 180.0;
            }
            while deg >= 180.0 {
                deg -= 180.0;
            }
            let pos = deg * bins as f64 / 180.0;
            let lo = pos.floor();
            let t = pos - lo;
            let lo = lo as usize % bins;
            let c =
                &mut cells[(wy as usize / p.cell as usize) * cx + wx as usize / p.cell as usize];
            c[lo] += mag * (1.0 - t);
            c[(lo + 1) % bins] += mag * t;
        }
    }
    let mut out = Vec::new();
    let eps2 = p.epsilon * p.epsilon;
    let step = p.block_stride as usize;
    let b = p.block as usize;
    let mut by = 0;
    while by + b <= cy {
        let mut bx = 0;
        while bx + b <= cx {
            let mut v = Vec::with_capacity(b * b * bins);
            for j in 0..b {
                for i in 0..b {
                    v.extend_from_slice(&cells[(by + j) * cx + bx + i]);
                }
            }
            let n = (v.iter().map(|a| a * a).sum::<f64>() + eps2).sqrt();
            v.iter_mut().for_each(|a| *a = (*a / n).min(p.clip));
            let n = (v.iter().map(|a| a * a).sum::<f64>() + eps2).sqrt();
            v.iter_mut().for_each(|a| *a /= n);
            out.extend(v);
            bx += step;
        }
        by += step;
    }
    out
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Window descriptors and grid windows against the scalar reference.
pub fn hog_oracle() -> Check {
    let mut r = rng(0x4067);
    let p = HogParams::default();
    for i in 0..30 {
        let win = if i % 3 == 0 {
            random_gray(&mut r, 64, 128)
        } else {
            blobby_gray(&mut r, 64, 128)
        };
        let got = hog_descriptor(&win, &p).map_err(|e| e.to_string())?;
        let want = hog_scalar(&win, 0, 0, &p);
        if got.len() != want.len() || got.len() != p.descriptor_len() {
            return Err(format!("length {} vs {}", got.len(), want.len()));
        }
        let d = max_abs_diff(&got, &want);
        if d > 1e-9 {
            return Err(format!("window {i}: max difference {d:e}"));
        }
    }
    let odd = HogParams {
        cell: 6,
        bins: 12,
        block: 3,
        block_stride: 1,
        window_w: 36,
        window_h: 48,
        ..HogParams::default()
    };
    for _ in 0..5 {
        let img = blobby_gray(&mut r, 150, 170);
        for params in [&p, &odd] {
            let grid = HogGrid::compute(&img, params).map_err(|e| e.to_string())?;
            let (cells_x, cells_y) = grid.cells();
            let (wcx, wcy) = (params.window_w / params.cell, params.window_h / params.cell);
            for _ in 0..10 {
                let (cx, cy) = (
                    r.gen_range(0..=cells_x - wcx),
                    r.gen_range(0..=cells_y - wcy),
                );
                let got = grid.window_descriptor(cx, cy).map_err(|e| e.to_string())?;
                let want = hog_scalar(&img, cx * params.cell, cy * params.cell, params);
                let d = max_abs_diff(&got, &want);
                if d > 1e-9 {
                    return Err(format!("grid window ({cx}, {cy}): max difference {d:e}"));
                }
            }
        }
    }
    Ok(())
}

/// Direct `(2r+1)²` convolution with the normalized 2-D kernel, clamped
/// borders, rounded half up.
pub fn blur_direct(img: &GrayImage, p: &GaussianKernelParams) -> GrayImage {
    let k = gaussian_kernel(p).unwrap();
    let r = p.radius as i32;
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let mut acc = 0.0;
        for dy in -r..=r {
            for dx in -r..=r {
                acc += k.at(dx, dy)
                    * img.get_clamped(x as i64 + dx as i64, y as i64 + dy as i64) as f64;
            }
        }
        (acc + 0.5).floor().clamp(0.0, 255.0) as u8
    })
    .unwrap()
}

pub fn gaussian_oracle() -> Check {
    let mut r = rng(0x6A55);
    let p = GaussianKernelParams::default();
    for i in 0..100 {
        let (w, h) = (r.gen_range(1..=80), r.gen_range(1..=80));
        let img = if i % 2 == 0 {
            random_gray(&mut r, w, h)
        } else {
            blobby_gray(&mut r, w, h)
        };
        let fast = gaussian_blur(&img, &p).map_err(|e| e.to_string())?;
        let slow = blur_direct(&img, &p);
        for (k, (a, b)) in fast.data().iter().zip(slow.data()).enumerate() {
            if a.abs_diff(*b) > 1 {
                return Err(format!("image {i} pixel {k}: {a} vs {b}"));
            }
        }
    }
    Ok(())
}

// -------------------------------------------------------------- protocol

pub const CRC_CHECK_VECTOR: u32 = 0xCBF4_3926;

pub fn crc_vector() -> Check {
    let c = crc32(b"123456789");
    if c == CRC_CHECK_VECTOR {
        Ok(())
    } else {
        Err(format!("crc32(\"123456789\") = 0x{c:08X}"))
    }
}

pub fn random_message(r: &mut ChaCha8Rng) -> Message {
    match r.gen_range(0..5) {
        0 => {
            let (w, h) = (r.gen_range(1..=12u16), r.gen_range(1..=8u16));
            let n = w as usize * h as usize;
            let flat = r.gen_bool(0.5);
            Message::VideoFrame(if r.gen_bool(0.5) {
                let v: u8 = r.gen();
                VideoFrame::gray(
                    w,
                    h,
                    (0..n).map(|_| if flat { v } else { r.gen() }).collect(),
                )
            } else {
                VideoFrame::rgb(w, h, (0..3 * n).map(|_| r.gen()).collect())
            })
        }
        1 => Message::Detections(DetectionsMsg {
            frame_seq: r.gen(),
            items: (0..r.gen_range(0..4))
                .map(|_| DetectionRecord {
                    x: r.gen(),
                    y: r.gen(),
                    w: r.gen(),
                    h: r.gen(),
                    score: r.gen_range(-10.0..10.0f32),
                    color: [
                        VerdictColor::Green,
                        VerdictColor::Red,
                        VerdictColor::Unknown,
                    ][r.gen_range(0..3)],
                    percent: r.gen_range(0..=100),
                    label: if r.gen_bool(0.8) {
                        Some(r.gen_range(0..8))
                    } else {
                        None
                    },
                })
                .collect(),
        }),
        2 => Message::Control(match r.gen_range(0..3) {
            0 => ControlCommand::ModeSwitch(if r.gen() {
                VehicleMode::Ugv
            } else {
                VehicleMode::Uav
            }),
            1 => ControlCommand::Drive {
                left: r.gen_range(-127..=127),
                right: r.gen_range(-127..=127),
            },
            _ => ControlCommand::EStop { engaged: r.gen() },
        }),
        3 => {
            let pose = HeadPose {
                pitch: r.gen_range(-90.0..=90.0),
                yaw: r.gen_range(-179.99..=180.0),
                timestamp_us: 0,
            };
            let payload = teleop::telemetry::head_pose_payload(&pose, r.gen()).unwrap();
            Message::HeadPose(encode_link_frame(&payload).unwrap())
        }
        _ => Message::Heartbeat(if r.gen() {
            Some(RobotStatus {
                mode: if r.gen() {
                    VehicleMode::Ugv
                } else {
                    VehicleMode::Uav
                },
                pan_cd: r.gen_range(-9000..=9000),
                tilt_cd: r.gen_range(-4500..=4500),
                estop: r.gen(),
            })
        } else {
            None
        }),
    }
}

/// Round trip plus every single-bit flip and a random single-byte
/// replacement at every offset of each encoded envelope. All corruptions
/// must come back as errors. Returns the number of corruptions checked.
pub fn envelope_fuzz(cases: usize) -> Result<u64, String> {
    let mut r = rng(0xE1E1);
    let mut corruptions = 0u64;
    for case in 0..cases {
        let (seq, ts): (u32, u64) = (r.gen(), r.gen());
        let bytes = if case % 4 == 3 {
            // Arbitrary payload bytes under a random valid type.
            let kind = [
                MessageKind::VideoFrame,
                MessageKind::Detections,
                MessageKind::Control,
                MessageKind::HeadPose,
                MessageKind::Heartbeat,
            ][r.gen_range(0..5)];
            let payload: Vec<u8> = (0..r.gen_range(0..48)).map(|_| r.gen()).collect();
            let flags: u8 = r.gen();
            let b = encode_envelope(kind, flags, &payload, seq, ts).map_err(|e| e.to_string())?;
            let env = decode_envelope(&b).map_err(|e| format!("case {case}: {e}"))?;
            if env.payload != payload || env.kind != kind || env.flags != flags {
                return Err(format!("case {case}: envelope fields changed"));
            }
            b
        } else {
            let msg = random_message(&mut r);
            let b = encode_message(&msg, seq, ts).map_err(|e| e.to_string())?;
            let (env, back) = decode_message(&b).map_err(|e| format!("case {case}: {e}"))?;
            if back != msg || env.sequence != seq || env.timestamp_us != ts {
                return Err(format!("case {case}: {msg:?} came back as {back:?}"));
            }
            b
        };
        let mut buf = bytes.clone();
        for i in 0..buf.len() {
            for bit in 0..8 {
                buf[i] ^= 1 << bit;
                if decode_envelope(&buf).is_ok() {
                    return Err(format!(
                        "case {case}: bit {bit} of byte {i} flipped undetected"
                    ));
                }
                buf[i] ^= 1 << bit;
                corruptions += 1;
            }
            let orig = buf[i];
            buf[i] = orig ^ r.gen_range(1..=255u8);
            if decode_envelope(&buf).is_ok() {
                return Err(format!("case {case}: byte {i} replaced undetected"));
            }
            buf[i] = orig;
            corruptions += 1;
        }
        // Truncations and random garbage never panic.
        let cut = r.gen_range(0..bytes.len());
        if decode_envelope(&bytes[..cut]).is_ok() {
            return Err(format!("case {case}: truncation to {cut} accepted"));
        }
        let junk: Vec<u8> = (0..r.gen_range(0..64)).map(|_| r.gen()).collect();
        let _ = decode_message(&junk);
        let _ = Message::from_payload(MessageKind::Detections, &junk);
        let _ = Message::from_payload(MessageKind::VideoFrame, &junk);
    }
    Ok(corruptions)
}

/// Link frames: round trip, every single-byte replacement and bit flip.
pub fn link_fuzz(cases: usize) -> Result<u64, String> {
    let mut r = rng(0x11F7);
    let mut corruptions = 0u64;
    for case in 0..cases {
        let len = if case % 1000 == 999 {
            r.gen_range(0..=65535)
        } else {
            r.gen_range(0..64)
        };
        let payload: Vec<u8> = (0..len).map(|_| r.gen()).collect();
        let frame = encode_link_frame(&payload).map_err(|e| e.to_string())?;
        let sum = frame[3..].iter().fold(0u8, |a, &b| a.wrapping_add(b));
        if sum != 0xFF {
            return Err(format!(
                "case {case}: payload plus checksum sums to 0x{sum:02X}"
            ));
        }
        if decode_link_frame(&frame).map_err(|e| e.to_string())? != payload {
            return Err(format!("case {case}: payload changed"));
        }
        // Long frames get a sample of positions; short ones every position.
        let positions: Vec<usize> = if frame.len() > 256 {
            (0..64).map(|_| r.gen_range(0..frame.len())).collect()
        } else {
            (0..frame.len()).collect()
        };
        let mut buf = frame;
        for i in positions {
            let orig = buf[i];
            for bit in 0..8 {
                buf[i] = orig ^ (1 << bit);
                if decode_link_frame(&buf).is_ok() {
                    return Err(format!(
                        "case {case}: bit {bit} of byte {i} flipped undetected"
                    ));
                }
                corruptions += 1;
            }
            buf[i] = orig ^ r.gen_range(1..=255u8);
            if decode_link_frame(&buf).is_ok() {
                return Err(format!("case {case}: byte {i} replaced undetected"));
            }
            buf[i] = orig;
            corruptions += 1;
        }
    }
    Ok(corruptions)
}

// ------------------------------------------------------------- telemetry

fn pose(pitch: f64, yaw: f64, t: u64) -> HeadPose {
    HeadPose {
        pitch,
        yaw,
        timestamp_us: t,
    }
}

/// Steady-state output amplitude for ±1° alternating input, relative to the
/// input amplitude.
pub fn ema_nyquist_gain(alpha: f64) -> f64 {
    let mut f = LowPassState::new(alpha, pose(0.0, 0.0, 0));
    let mut last = (0.0, 0.0);
    for n in 1..=4000u64 {
        let x = if n % 2 == 0 { 1.0 } else { -1.0 };
        let out = f.step(&pose(x, 10.0 * x, n));
        last = (out.pitch, out.yaw / 10.0);
    }
    (last.0.abs() + last.1.abs()) / 2.0
}

pub fn ema_nyquist() -> Check {
    for alpha in [0.05, 0.2, 0.5, 0.9] {
        let got = ema_nyquist_gain(alpha);
        let want = alpha / (2.0 - alpha);
        if (got - want).abs() > 1e-6 {
            return Err(format!("alpha {alpha}: gain {got} vs {want}"));
        }
    }
    Ok(())
}

/// IMU reading for a head at `pitch`, `yaw` degrees (level-head magnetometer
/// model).
pub fn imu_at(pitch: f64, yaw: f64, t: u64) -> ImuSample {
    let (p, y) = (pitch.to_radians(), yaw.to_radians());
    ImuSample {
        accel: [-p.sin(), 0.0, p.cos()],
        mag: [30.0 * y.cos(), -30.0 * y.sin(), -20.0],
        timestamp_us: t,
    }
}

pub fn calibration_zero_motion() -> Check {
    for (p0, y0) in [(0.0, 0.0), (12.0, -35.0), (-20.0, 179.5), (5.0, -179.5)] {
        let samples: Vec<ImuSample> = (0..50).map(|i| imu_at(p0, y0, i * 20_000)).collect();
        let off = calibrate(&samples, 50).map_err(|e| e.to_string())?;
        let mut tracker = HeadTracker::new(off, teleop::telemetry::DEFAULT_ALPHA);
        for i in 0..500u64 {
            let out = tracker
                .update(&imu_at(p0, y0, 1_000_000 + i * 20_000))
                .ok_or("no pose from reliable samples")?;
            let cmd = pose_to_pan_tilt(&out, i as u32);
            if cmd.pan.abs() > 0.01 || cmd.tilt.abs() > 0.01 {
                return Err(format!(
                    "rest at ({p0}, {y0}) commands ({}, {})",
                    cmd.pan, cmd.tilt
                ));
            }
        }
    }
    Ok(())
}

/// Yaw stepping 179° → -179° must move 2° across the seam, never 358°.
pub fn yaw_wrap() -> Check {
    let alpha = teleop::telemetry::DEFAULT_ALPHA;
    let mut f = LowPassState::new(alpha, pose(0.0, 179.0, 0));
    let mut prev = 179.0f64;
    for n in 1..200u64 {
        let out = f.step(&pose(0.0, -179.0, n));
        let jump = teleop::telemetry::shortest_arc(prev, out.yaw).abs();
        let raw = (out.yaw - prev).abs();
        if jump > alpha * 180.0 + 1e-9 {
            return Err(format!("step {n}: jump {jump}"));
        }
        if raw > 2.0 + 1e-9 && raw < 358.0 - 1e-9 {
            return Err(format!("step {n}: yaw moved {raw}° through the front"));
        }
        // Always on the short side of the seam.
        if out.yaw.abs() < 179.0 - 1e-9 {
            return Err(format!("step {n}: yaw {} left the seam region", out.yaw));
        }
        prev = out.yaw;
    }
    if (prev + 179.0).abs() > 1e-6 {
        return Err(format!("did not settle at -179, got {prev}"));
    }
    Ok(())
}

// ---------------------------------------------------------------- overlay

/// Per-pixel half side-by-side: left-half pixel `x` is the rounded-up mean
/// of source columns `2x` and `2x+1`; the right half repeats the left.
pub fn sbs_oracle_image(src: &RgbImage) -> Vec<u8> {
    let (w, h) = (src.width(), src.height());
    let half = w / 2;
    let mut out = Vec::with_capacity((w * h * 3) as usize);
    for y in 0..h {
        for x in 0..w {
            let hx = x % half;
            let a = src.get(2 * hx, y);
            let b = src.get(2 * hx + 1, y);
            for c in 0..3 {
                out.push((a[c] as u32 + b[c] as u32).div_ceil(2) as u8);
            }
        }
    }
    out
}

pub fn random_rgb_frame(r: &mut ChaCha8Rng) -> RgbImage {
    let mut data = vec![0u8; (FRAME_W * FRAME_H * 3) as usize];
    match r.gen_range(0..3) {
        0 => r.fill(&mut data[..]),
        1 => {
            let c: [u8; 3] = r.gen();
            data.chunks_exact_mut(3).for_each(|p| p.copy_from_slice(&c));
        }
        _ => {
            // Column stripes hit the pair-averaging rounding hard.
            let (a, b): ([u8; 3], [u8; 3]) = (r.gen(), r.gen());
            for (i, p) in data.chunks_exact_mut(3).enumerate() {
                p.copy_from_slice(if i % 2 == 0 { &a } else { &b });
            }
        }
    }
    RgbImage::from_raw(FRAME_W, FRAME_H, data).unwrap()
}

pub fn sbs_oracle(frames: usize) -> Check {
    let mut r = rng(0x5B5);
    for i in 0..frames {
        let src = random_rgb_frame(&mut r);
        let sbs = sbs_from_image(&src).map_err(|e| e.to_string())?;
        let img = sbs.image();
        if (img.width(), img.height()) != (FRAME_W, FRAME_H) {
            return Err(format!(
                "frame {i}: output {}x{}",
                img.width(),
                img.height()
            ));
        }
        if !sbs.halves_identical() {
            return Err(format!("frame {i}: halves differ"));
        }
        if img.data() != &sbs_oracle_image(&src)[..] {
            return Err(format!("frame {i}: bytes differ from the oracle"));
        }
    }
    Ok(())
}

// ------------------------------------------------------------- classifier

/// Eight-way accuracy of the embedded reference classifier on a corpus seed
/// never used for fitting.
pub fn heldout_accuracy(seed: u64, n: usize) -> f64 {
    let model = teleop::models::reference_classifier();
    let corpus = teleop::sim::labeled_corpus(seed, n);
    let correct = corpus
        .iter()
        .filter(|(roi, label)| model.scores(roi).unwrap().argmax_label() == *label)
        .count();
    correct as f64 / n as f64
}
