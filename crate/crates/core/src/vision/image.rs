//! Raster types shared by the whole pipeline.

use super::VisionError;

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> u64 {
        self.x as u64 + self.w as u64
    }

    pub fn bottom(&self) -> u64 {
        self.y as u64 + self.h as u64
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    /// True when the rectangle lies entirely inside a `width`×`height` raster.
    pub fn fits_in(&self, width: u32, height: u32) -> bool {
        self.right() <= width as u64 && self.bottom() <= height as u64
    }

    pub fn contains_point(&self, px: f64, py: f64) -> bool {
        px >= self.x as f64
            && py >= self.y as f64
            && px < self.right() as f64
            && py < self.bottom() as f64
    }

    pub fn intersection_area(&self, other: &Rect) -> u64 {
        let ix0 = self.x.max(other.x) as u64;
        let iy0 = self.y.max(other.y) as u64;
        let ix1 = self.right().min(other.right());
        let iy1 = self.bottom().min(other.bottom());
        if ix1 > ix0 && iy1 > iy0 {
            (ix1 - ix0) * (iy1 - iy0)
        } else {
            0
        }
    }

    /// Intersection over union; zero when either box is empty.
    pub fn iou(&self, other: &Rect) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// 8-bit single channel raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32) -> Result<Self, VisionError> {
        Self::filled(width, height, 0)
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self, VisionError> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            data: vec![value; width as usize * height as usize],
        })
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self, VisionError> {
        check_dims(width, height)?;
        if data.len() != width as usize * height as usize {
            return Err(VisionError::InvalidInput(format!(
                "raster length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(
        width: u32,
        height: u32,
        mut f: impl FnMut(u32, u32) -> u8,
    ) -> Result<Self, VisionError> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        let w = self.width as usize;
        self.data[y as usize * w + x as usize] = v;
    }

    /// Pixel with coordinates clamped to the raster (clamp-to-edge).
    #[inline]
    pub fn get_clamped(&self, x: i64, y: i64) -> u8 {
        let cx = x.clamp(0, self.width as i64 - 1) as u32;
        let cy = y.clamp(0, self.height as i64 - 1) as u32;
        self.get(cx, cy)
    }

    pub fn row(&self, y: u32) -> &[u8] {
        let w = self.width as usize;
        &self.data[y as usize * w..(y as usize + 1) * w]
    }

    pub fn crop(&self, rect: Rect) -> Result<GrayImage, VisionError> {
        if rect.w == 0 || rect.h == 0 || !rect.fits_in(self.width, self.height) {
            return Err(VisionError::OutOfBounds {
                rect,
                width: self.width,
                height: self.height,
            });
        }
        let mut data = Vec::with_capacity(rect.area() as usize);
        for y in rect.y..rect.y + rect.h {
            let row = self.row(y);
            data.extend_from_slice(&row[rect.x as usize..(rect.x + rect.w) as usize]);
        }
        GrayImage::from_raw(rect.w, rect.h, data)
    }

    /// Expand to RGB by replicating the intensity into every channel.
    pub fn to_rgb(&self) -> RgbImage {
        let mut data = Vec::with_capacity(self.data.len() * 3);
        for &v in &self.data {
            data.extend_from_slice(&[v, v, v]);
        }
        RgbImage {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// 8-bit RGB raster, row-major, interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self, VisionError> {
        check_dims(width, height)?;
        let n = width as usize * height as usize;
        let mut data = Vec::with_capacity(n * 3);
        for _ in 0..n {
            data.extend_from_slice(&rgb);
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self, VisionError> {
        check_dims(width, height)?;
        if data.len() != width as usize * height as usize * 3 {
            return Err(VisionError::InvalidInput(format!(
                "RGB raster length {} does not match {}x{}x3",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// BT.601 luma, rounded to nearest.
    pub fn to_luma(&self) -> GrayImage {
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| luma_bt601(p[0], p[1], p[2]))
            .collect();
        GrayImage {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

#[inline]
pub fn luma_bt601(r: u8, g: u8, b: u8) -> u8 {
    ((299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000) as u8
}

fn check_dims(width: u32, height: u32) -> Result<(), VisionError> {
    if width == 0 || height == 0 {
        return Err(VisionError::InvalidInput(format!(
            "image dimensions must be at least 1x1, got {width}x{height}"
        )));
    }
    Ok(())
}

/// One output sample of an area resampler: source taps and their weights.
struct AreaTaps {
    start: usize,
    weights: Vec<f32>,
}

fn area_taps(src_len: usize, dst_len: usize) -> Vec<AreaTaps> {
    let ratio = src_len as f64 / dst_len as f64;
    (0..dst_len)
        .map(|i| {
            let lo = i as f64 * ratio;
            let hi = ((i + 1) as f64 * ratio).min(src_len as f64);
            let start = lo.floor() as usize;
            let end = (hi.ceil() as usize).min(src_len).max(start + 1);
            let weights = (start..end)
                .map(|s| {
                    let a = lo.max(s as f64);
                    let b = hi.min((s + 1) as f64);
                    ((b - a).max(0.0) / ratio) as f32
                })
                .collect();
            AreaTaps { start, weights }
        })
        .collect()
}

/// Box-average (area) resampling to an arbitrary smaller size.
///
/// Every destination pixel is the mean of the source area it covers, with
/// fractional coverage at the edges. Upscaling is supported but degenerates
/// to nearest-neighbour.
pub fn resize_area(img: &GrayImage, dst_w: u32, dst_h: u32) -> Result<GrayImage, VisionError> {
    check_dims(dst_w, dst_h)?;
    let (sw, sh) = (img.width as usize, img.height as usize);
    let (dw, dh) = (dst_w as usize, dst_h as usize);
    let xt = area_taps(sw, dw);
    let yt = area_taps(sh, dh);

    let mut horiz = vec![0f32; dw * sh];
    for y in 0..sh {
        let row = img.row(y as u32);
        let out = &mut horiz[y * dw..(y + 1) * dw];
        for (o, t) in out.iter_mut().zip(&xt) {
            let mut acc = 0f32;
            for (k, w) in t.weights.iter().enumerate() {
                acc += row[t.start + k] as f32 * w;
            }
            *o = acc;
        }
    }

    let mut data = vec![0u8; dw * dh];
    let mut acc = vec![0f32; dw];
    for (y, t) in yt.iter().enumerate() {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for (k, w) in t.weights.iter().enumerate() {
            let src = &horiz[(t.start + k) * dw..(t.start + k + 1) * dw];
            for (a, s) in acc.iter_mut().zip(src) {
                *a += s * w;
            }
        }
        for (d, a) in data[y * dw..(y + 1) * dw].iter_mut().zip(&acc) {
            *d = (a + 0.5).clamp(0.0, 255.0) as u8;
        }
    }
    GrayImage::from_raw(dst_w, dst_h, data)
}

/// Bilinear resampling with pixel-centre alignment; same-size resize is an
/// exact copy.
pub fn resize_bilinear(img: &GrayImage, dst_w: u32, dst_h: u32) -> Result<GrayImage, VisionError> {
    check_dims(dst_w, dst_h)?;
    if dst_w == img.width && dst_h == img.height {
        return Ok(img.clone());
    }
    let taps = |src: u32, dst: u32| -> Vec<(usize, usize, f32)> {
        let ratio = src as f64 / dst as f64;
        (0..dst)
            .map(|i| {
                let p = ((i as f64 + 0.5) * ratio - 0.5).clamp(0.0, (src - 1) as f64);
                let i0 = p.floor() as usize;
                let i1 = (i0 + 1).min(src as usize - 1);
                (i0, i1, (p - i0 as f64) as f32)
            })
            .collect()
    };
    let xt = taps(img.width, dst_w);
    let yt = taps(img.height, dst_h);
    let mut data = Vec::with_capacity(dst_w as usize * dst_h as usize);
    for &(y0, y1, fy) in &yt {
        let r0 = img.row(y0 as u32);
        let r1 = img.row(y1 as u32);
        for &(x0, x1, fx) in &xt {
            let top = r0[x0] as f32 * (1.0 - fx) + r0[x1] as f32 * fx;
            let bot = r1[x0] as f32 * (1.0 - fx) + r1[x1] as f32 * fx;
            let v = top * (1.0 - fy) + bot * fy;
            data.push((v + 0.5).clamp(0.0, 255.0) as u8);
        }
    }
    GrayImage::from_raw(dst_w, dst_h, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_dimensions() {
        assert!(GrayImage::new(0, 4).is_err());
        assert!(GrayImage::from_raw(2, 2, vec![0; 3]).is_err());
    }

    #[test]
    fn luma_weights() {
        assert_eq!(luma_bt601(255, 255, 255), 255);
        assert_eq!(luma_bt601(0, 0, 0), 0);
        assert_eq!(luma_bt601(255, 0, 0), 76);
        assert_eq!(luma_bt601(0, 255, 0), 150);
        assert_eq!(luma_bt601(0, 0, 255), 29);
    }

    #[test]
    fn area_resize_of_constant_is_constant() {
        let img = GrayImage::filled(1900, 1000, 123).unwrap();
        let small = resize_area(&img, 633, 333).unwrap();
        assert!(small.data().iter().all(|&v| v == 123));
    }

    #[test]
    fn area_resize_halves_exactly() {
        let img = GrayImage::from_fn(4, 2, |x, _| if x % 2 == 0 { 10 } else { 20 }).unwrap();
        let half = resize_area(&img, 2, 1).unwrap();
        assert_eq!(half.data(), &[15, 15]);
    }

    #[test]
    fn bilinear_identity_and_uniform() {
        let img = GrayImage::from_fn(13, 7, |x, y| (x * 17 + y * 3) as u8).unwrap();
        assert_eq!(resize_bilinear(&img, 13, 7).unwrap(), img);
        let flat = GrayImage::filled(454, 454, 99).unwrap();
        let small = resize_bilinear(&flat, 227, 227).unwrap();
        assert!(small.data().iter().all(|&v| v == 99));
    }

    #[test]
    fn iou_basics() {
        let a = Rect::new(0, 0, 10, 10);
        assert_eq!(a.iou(&a), 1.0);
        assert_eq!(a.iou(&Rect::new(10, 0, 10, 10)), 0.0);
        let b = Rect::new(5, 0, 10, 10);
        assert!((a.iou(&b) - 50.0 / 150.0).abs() < 1e-12);
    }
}
