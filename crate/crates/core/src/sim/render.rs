//! Sprite rasterizer. Ground view is a cylindrical projection with a fixed
//! number of pixels per degree; aerial view is an orthographic top-down map.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scene::{EntityKind, Facing, Scene};
use crate::classifier::WeaponClass;
use crate::transport::VehicleMode;
use crate::vision::GrayImage;

pub const CAMERA_WIDTH: u32 = 1900;
pub const CAMERA_HEIGHT: u32 = 1000;
pub const PIXELS_PER_DEGREE: f64 = 20.0;
/// Focal length matching [`PIXELS_PER_DEGREE`] at the optical axis.
pub const FOCAL_PX: f64 = PIXELS_PER_DEGREE * 180.0 / std::f64::consts::PI;
pub const PERSON_HEIGHT_M: f64 = 1.8;
/// Camera sits at half person height, so people straddle the horizon.
pub const CAMERA_HEIGHT_M: f64 = 0.9;

pub const BODY_LEVEL: u8 = 205;
pub const HEAD_LEVEL: u8 = 185;
pub const WEAPON_LEVEL: u8 = 8;
/// Every weapon pixel is at most this bright and nothing else is.
pub const WEAPON_MAX_LEVEL: u8 = 20;
pub const BACKGROUND_MIN: u8 = 85;
pub const BACKGROUND_MAX: u8 = 135;

/// Sprites further off-axis than this are not drawn.
const MAX_OFF_AXIS_DEG: f64 = 80.0;
const MIN_RANGE_M: f64 = 0.5;

/// Axis-aligned part of a sprite in sprite units: `u` is the horizontal
/// offset from the centre line towards the facing side, `v` the distance
/// from the top, both as fractions of sprite height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Part {
    pub u0: f64,
    pub u1: f64,
    pub v0: f64,
    pub v1: f64,
}

pub const BODY: Part = Part {
    u0: -0.15,
    u1: 0.15,
    v0: 0.2,
    v1: 1.0,
};
pub const HEAD_CENTER_V: f64 = 0.1;
pub const HEAD_RADIUS: f64 = 0.1;
/// Half width of the sprite's bounding window, as a fraction of height.
pub const HALF_WIDTH: f64 = 0.25;

const BAR_OUTER: f64 = 0.24;
const BAR_CENTER_V: f64 = 0.48;
const THIN: f64 = 0.03;
const THICK: f64 = 0.08;
const SHORT: f64 = 0.12;
const MEDIUM: f64 = 0.22;
const LONG: f64 = 0.32;

fn bar(len: f64, thickness: f64) -> Part {
    Part {
        u0: BAR_OUTER - len,
        u1: BAR_OUTER,
        v0: BAR_CENTER_V - thickness / 2.0,
        v1: BAR_CENTER_V + thickness / 2.0,
    }
}

/// Weapon geometry for each class. Empty for `NoWeapon`.
pub fn weapon_parts(w: WeaponClass) -> Vec<Part> {
    match w {
        WeaponClass::NoWeapon => vec![],
        WeaponClass::Pistol => vec![bar(SHORT, THIN)],
        WeaponClass::Revolver => {
            let b = bar(SHORT, THICK);
            let grip = Part {
                u0: b.u0,
                u1: b.u0 + 0.04,
                v0: b.v1,
                v1: b.v1 + 0.07,
            };
            vec![b, grip]
        }
        WeaponClass::SubmachineGun => vec![bar(MEDIUM, THICK)],
        WeaponClass::AssaultRifle => {
            let b = bar(MEDIUM, THIN);
            let mag = Part {
                u0: BAR_OUTER - 0.12,
                u1: BAR_OUTER - 0.07,
                v0: b.v1,
                v1: b.v1 + 0.1,
            };
            vec![b, mag]
        }
        WeaponClass::Shotgun => vec![bar(LONG, THIN)],
        WeaponClass::MachineGun => {
            let b = bar(LONG, THICK);
            let bipod = Part {
                u0: BAR_OUTER - 0.06,
                u1: BAR_OUTER - 0.035,
                v0: b.v1,
                v1: b.v1 + 0.1,
            };
            vec![b, bipod]
        }
        WeaponClass::SniperRifle => {
            let b = bar(LONG, THIN);
            let scope = Part {
                u0: BAR_OUTER - 0.2,
                u1: BAR_OUTER - 0.08,
                v0: b.v0 - 0.055,
                v1: b.v0 - 0.015,
            };
            vec![b, scope]
        }
    }
}

/// Raster target whose pixel `(i, j)` sits at screen position
/// `(origin.0 + i, origin.1 + j)`. Pixels are covered when their centre
/// lies inside a shape.
pub(crate) struct Canvas<'a> {
    pub img: &'a mut GrayImage,
    pub origin: (f64, f64),
}

impl Canvas<'_> {
    fn span(lo: f64, hi: f64, origin: f64, n: u32) -> (u32, u32) {
        let a = (lo - origin - 0.5).ceil().clamp(0.0, n as f64) as u32;
        let b = (hi - origin - 0.5).ceil().clamp(0.0, n as f64) as u32;
        (a, b.max(a))
    }

    pub fn fill_rect(&mut self, x0: f64, x1: f64, y0: f64, y1: f64, v: u8) {
        let (w, h) = (self.img.width(), self.img.height());
        let (i0, i1) = Self::span(x0.min(x1), x0.max(x1), self.origin.0, w);
        let (j0, j1) = Self::span(y0.min(y1), y0.max(y1), self.origin.1, h);
        let data = self.img.data_mut();
        for j in j0..j1 {
            let row = j as usize * w as usize;
            data[row + i0 as usize..row + i1 as usize].fill(v);
        }
    }

    pub fn fill_disc(&mut self, cx: f64, cy: f64, r: f64, v: u8) {
        let (w, h) = (self.img.width(), self.img.height());
        let (j0, j1) = Self::span(cy - r, cy + r, self.origin.1, h);
        for j in j0..j1 {
            let py = self.origin.1 + j as f64 + 0.5 - cy;
            let half = (r * r - py * py).max(0.0).sqrt();
            let (i0, i1) = Self::span(cx - half, cx + half, self.origin.0, w);
            let row = j as usize * w as usize;
            self.img.data_mut()[row + i0 as usize..row + i1 as usize].fill(v);
        }
    }
}

/// Upright person seen from the side: centre line `cx`, top `top`, height
/// `s`, all in screen pixels.
pub(crate) fn draw_side_sprite(
    c: &mut Canvas<'_>,
    cx: f64,
    top: f64,
    s: f64,
    kind: EntityKind,
    facing: Facing,
) {
    let f = facing.sign();
    let part = |c: &mut Canvas<'_>, p: &Part, v: u8| {
        c.fill_rect(
            cx + f * p.u0 * s,
            cx + f * p.u1 * s,
            top + p.v0 * s,
            top + p.v1 * s,
            v,
        )
    };
    part(c, &BODY, BODY_LEVEL);
    c.fill_disc(cx, top + HEAD_CENTER_V * s, HEAD_RADIUS * s, HEAD_LEVEL);
    for p in weapon_parts(kind.label()) {
        part(c, &p, WEAPON_LEVEL);
    }
}

/// Person seen from above at `k` pixels per metre: shoulders, head, and
/// the weapon laid along the facing side.
pub(crate) fn draw_top_sprite(
    c: &mut Canvas<'_>,
    sx: f64,
    sy: f64,
    k: f64,
    kind: EntityKind,
    facing: Facing,
) {
    let f = facing.sign();
    let m = PERSON_HEIGHT_M * k;
    c.fill_rect(
        sx - 0.25 * k,
        sx + 0.25 * k,
        sy - 0.125 * k,
        sy + 0.125 * k,
        BODY_LEVEL,
    );
    c.fill_disc(sx, sy, 0.12 * k, HEAD_LEVEL);
    for p in weapon_parts(kind.label()) {
        c.fill_rect(
            sx + f * p.u0 * m,
            sx + f * p.u1 * m,
            sy + (p.v0 - BAR_CENTER_V) * m,
            sy + (p.v1 - BAR_CENTER_V) * m,
            WEAPON_LEVEL,
        );
    }
}

pub const TILE_WIDTH: u32 = (360.0 * PIXELS_PER_DEGREE) as u32;
pub const TILE_HEIGHT: u32 = 960;

/// Seeded, seamlessly wrapping value-noise texture. Ground view wraps
/// horizontally once per full turn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Background {
    seed: u64,
    tile: Vec<u8>,
}

impl Background {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6267_5f74_696c_6531);
        let (tw, th) = (TILE_WIDTH as usize, TILE_HEIGHT as usize);
        let mut acc = vec![0f32; tw * th];
        for (cell, weight) in [(96usize, 0.55f32), (24, 0.45)] {
            let (gw, gh) = (tw / cell, th / cell);
            let lattice: Vec<f32> = (0..gw * gh).map(|_| rng.gen::<f32>()).collect();
            let smooth: Vec<f32> = (0..cell)
                .map(|i| {
                    let t = i as f32 / cell as f32;
                    t * t * (3.0 - 2.0 * t)
                })
                .collect();
            for y in 0..th {
                let (gy, ty) = (y / cell, smooth[y % cell]);
                let (r0, r1) = (gy * gw, ((gy + 1) % gh) * gw);
                let row = &mut acc[y * tw..(y + 1) * tw];
                for (x, a) in row.iter_mut().enumerate() {
                    let (gx, tx) = (x / cell, smooth[x % cell]);
                    let gx1 = (gx + 1) % gw;
                    let top = lattice[r0 + gx] + (lattice[r0 + gx1] - lattice[r0 + gx]) * tx;
                    let bot = lattice[r1 + gx] + (lattice[r1 + gx1] - lattice[r1 + gx]) * tx;
                    *a += weight * (top + (bot - top) * ty);
                }
            }
        }
        let span = (BACKGROUND_MAX - BACKGROUND_MIN) as f32;
        let tile = acc
            .iter()
            .map(|&a| (BACKGROUND_MIN as f32 + a.clamp(0.0, 1.0) * span).round() as u8)
            .collect();
        Self { seed, tile }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Fills `img` so that pixel `(x, y)` shows texel `(x + ox, y + oy)`,
    /// both wrapped.
    pub fn fill(&self, img: &mut GrayImage, ox: i64, oy: i64) {
        let (tw, th) = (TILE_WIDTH as i64, TILE_HEIGHT as i64);
        let w = img.width() as usize;
        let h = img.height();
        let data = img.data_mut();
        for y in 0..h as i64 {
            let ty = (y + oy).rem_euclid(th) as usize;
            let src = &self.tile[ty * tw as usize..(ty + 1) * tw as usize];
            let dst = &mut data[y as usize * w..(y as usize + 1) * w];
            let mut x = 0usize;
            let mut tx = ox.rem_euclid(tw) as usize;
            while x < w {
                let n = (w - x).min(tw as usize - tx);
                dst[x..x + n].copy_from_slice(&src[tx..tx + n]);
                x += n;
                tx = 0;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UgvPose {
    pub x: f64,
    pub y: f64,
    /// Degrees counter-clockwise from +x.
    pub heading_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavPose {
    pub x: f64,
    pub y: f64,
    pub altitude: f64,
}

/// Actual camera state. Pan is positive to the right, tilt positive up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraState {
    pub mode: VehicleMode,
    pub pan: f64,
    pub tilt: f64,
    pub ugv: UgvPose,
    pub uav: UavPose,
}

impl CameraState {
    pub fn at_start(scene: &Scene) -> Self {
        Self {
            mode: VehicleMode::Ugv,
            pan: 0.0,
            tilt: 0.0,
            ugv: UgvPose {
                x: scene.start.x,
                y: scene.start.y,
                heading_deg: scene.start.heading_deg,
            },
            uav: UavPose {
                x: scene.start.x,
                y: scene.start.y,
                altitude: scene.uav_altitude,
            },
        }
    }
}

/// Where one person lands on screen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpriteView {
    pub entity_id: u32,
    pub kind: EntityKind,
    pub facing: Facing,
    /// Bounding window `(x, y, w, h)` in screen pixels; ground view only
    /// uses the `0.5s × s` person window.
    pub window: (f64, f64, f64, f64),
    pub centroid: (f64, f64),
    pub fully_in_view: bool,
    pub range_m: f64,
}

fn normalize_deg(a: f64) -> f64 {
    let r = a.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// Screen placement of every drawable person, far to near.
pub fn project(scene: &Scene, cam: &CameraState, width: u32, height: u32) -> Vec<SpriteView> {
    let (w, h) = (width as f64, height as f64);
    let mut out = Vec::new();
    for e in &scene.entities {
        let view = match cam.mode {
            VehicleMode::Ugv => {
                let (dx, dy) = (e.x - cam.ugv.x, e.y - cam.ugv.y);
                let r = dx.hypot(dy);
                let az = dy.atan2(dx).to_degrees();
                let off = normalize_deg(cam.ugv.heading_deg - az) - cam.pan;
                if r < MIN_RANGE_M || off.abs() > MAX_OFF_AXIS_DEG {
                    continue;
                }
                let s = FOCAL_PX * PERSON_HEIGHT_M / r;
                let cx = w / 2.0 + off * PIXELS_PER_DEGREE;
                let horizon = h / 2.0 + cam.tilt * PIXELS_PER_DEGREE;
                let top = horizon - s * (PERSON_HEIGHT_M - CAMERA_HEIGHT_M) / PERSON_HEIGHT_M;
                (
                    (cx - HALF_WIDTH * s, top, 2.0 * HALF_WIDTH * s, s),
                    (cx, top + s / 2.0),
                    r,
                )
            }
            VehicleMode::Uav => {
                let k = FOCAL_PX / cam.uav.altitude;
                let sx = w / 2.0 + (e.x - cam.uav.x) * k - cam.pan * PIXELS_PER_DEGREE;
                let sy = h / 2.0 - (e.y - cam.uav.y) * k + cam.tilt * PIXELS_PER_DEGREE;
                let half = HALF_WIDTH * 2.0 * PERSON_HEIGHT_M * k;
                let r = (e.x - cam.uav.x)
                    .hypot(e.y - cam.uav.y)
                    .hypot(cam.uav.altitude);
                ((sx - half, sy - half, 2.0 * half, 2.0 * half), (sx, sy), r)
            }
        };
        let ((x, y, ww, hh), centroid, range_m) = view;
        if x + ww <= 0.0 || y + hh <= 0.0 || x >= w || y >= h {
            continue;
        }
        out.push(SpriteView {
            entity_id: e.id,
            kind: e.kind,
            facing: e.facing,
            window: (x, y, ww, hh),
            centroid,
            fully_in_view: x >= 0.0 && y >= 0.0 && x + ww <= w && y + hh <= h,
            range_m,
        });
    }
    out.sort_by(|a, b| {
        b.range_m
            .total_cmp(&a.range_m)
            .then(a.entity_id.cmp(&b.entity_id))
    });
    out
}

/// Renders the camera view. Identical inputs give identical pixels.
pub fn render_frame(
    scene: &Scene,
    cam: &CameraState,
    bg: &Background,
    width: u32,
    height: u32,
) -> GrayImage {
    let mut img = GrayImage::new(width, height).expect("camera resolution is non-zero");
    let half_w = (width / 2) as i64;
    let half_h = (height / 2) as i64;
    match cam.mode {
        VehicleMode::Ugv => {
            let ox = ((cam.pan - cam.ugv.heading_deg) * PIXELS_PER_DEGREE).round() as i64 - half_w;
            let oy = -(cam.tilt * PIXELS_PER_DEGREE).round() as i64;
            bg.fill(&mut img, ox, oy);
        }
        VehicleMode::Uav => {
            let k = FOCAL_PX / cam.uav.altitude;
            let ox = (cam.uav.x * k + cam.pan * PIXELS_PER_DEGREE).round() as i64 - half_w;
            let oy = (-cam.uav.y * k - cam.tilt * PIXELS_PER_DEGREE).round() as i64 - half_h;
            bg.fill(&mut img, ox, oy);
        }
    }
    let views = project(scene, cam, width, height);
    let mut canvas = Canvas {
        img: &mut img,
        origin: (0.0, 0.0),
    };
    for v in views {
        match cam.mode {
            VehicleMode::Ugv => {
                let (_, top, _, s) = v.window;
                draw_side_sprite(&mut canvas, v.centroid.0, top, s, v.kind, v.facing);
            }
            VehicleMode::Uav => {
                let k = FOCAL_PX / cam.uav.altitude;
                draw_top_sprite(&mut canvas, v.centroid.0, v.centroid.1, k, v.kind, v.facing);
            }
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene_with(kind: EntityKind) -> Scene {
        let mut s = Scene::new((40.0, 40.0), 3).unwrap();
        s.start.x = 20.0;
        s.start.y = 0.0;
        s.add(20.0, 6.0, kind, Facing::Right).unwrap();
        s
    }

    #[test]
    fn background_range_and_wrap() {
        let bg = Background::new(1);
        assert!(bg
            .tile
            .iter()
            .all(|&v| (BACKGROUND_MIN..=BACKGROUND_MAX).contains(&v)));
        let mut a = GrayImage::new(50, 5).unwrap();
        let mut b = GrayImage::new(50, 5).unwrap();
        bg.fill(&mut a, 3, 7);
        bg.fill(&mut b, 3 + TILE_WIDTH as i64, 7 - TILE_HEIGHT as i64);
        assert_eq!(a, b);
        assert_ne!(Background::new(1), Background::new(2));
    }

    #[test]
    fn sprite_sits_on_horizon_at_expected_size() {
        let s = scene_with(EntityKind::PersonUnarmed);
        let cam = CameraState::at_start(&s);
        let v = project(&s, &cam, CAMERA_WIDTH, CAMERA_HEIGHT);
        assert_eq!(v.len(), 1);
        let expect = FOCAL_PX * PERSON_HEIGHT_M / 6.0;
        assert!((v[0].window.3 - expect).abs() < 1e-9);
        assert!((v[0].centroid.0 - 950.0).abs() < 1e-9);
        assert!((v[0].centroid.1 - 500.0).abs() < 1e-9);
        assert!(v[0].fully_in_view);
    }

    #[test]
    fn armed_and_unarmed_differ_only_in_weapon_pixels() {
        let bg = Background::new(3);
        let a = scene_with(EntityKind::PersonUnarmed);
        let b = scene_with(EntityKind::PersonArmed(WeaponClass::MachineGun));
        let cam = CameraState::at_start(&a);
        let fa = render_frame(&a, &cam, &bg, CAMERA_WIDTH, CAMERA_HEIGHT);
        let fb = render_frame(&b, &cam, &bg, CAMERA_WIDTH, CAMERA_HEIGHT);
        let mut changed = 0;
        for (pa, pb) in fa.data().iter().zip(fb.data()) {
            if pa != pb {
                assert_eq!(*pb, WEAPON_LEVEL);
                changed += 1;
            }
        }
        assert!(changed > 100);
        assert!(fa.data().iter().all(|&v| v > WEAPON_MAX_LEVEL));
    }

    #[test]
    fn uav_view_draws_people_from_above() {
        let s = scene_with(EntityKind::PersonArmed(WeaponClass::Pistol));
        let mut cam = CameraState::at_start(&s);
        cam.mode = VehicleMode::Uav;
        cam.uav.y = 6.0;
        let f = render_frame(&s, &cam, &Background::new(3), CAMERA_WIDTH, CAMERA_HEIGHT);
        assert_eq!(f.get(950, 500), HEAD_LEVEL);
        assert!(f.data().contains(&WEAPON_LEVEL));
    }
}
