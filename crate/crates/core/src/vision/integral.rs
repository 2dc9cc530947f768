use super::{GrayImage, Rect, VisionError};

/// Summed-area table of `(width+1) × (height+1)` entries with a zero first
/// row and column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegralImage {
    width: u32,
    height: u32,
    table: Vec<u64>,
}

impl IntegralImage {
    /// Width of the source image.
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Sum of all source pixels with coordinates strictly below `(x, y)`.
    #[inline]
    pub fn at(&self, x: u32, y: u32) -> u64 {
        self.table[y as usize * (self.width as usize + 1) + x as usize]
    }

    /// Four-lookup rectangle sum without a bounds check on the rectangle.
    #[inline]
    pub(crate) fn sum_unchecked(&self, x: u32, y: u32, w: u32, h: u32) -> u64 {
        let stride = self.width as usize + 1;
        let (x0, y0) = (x as usize, y as usize);
        let (x1, y1) = (x0 + w as usize, y0 + h as usize);
        let t = &self.table;
        t[y1 * stride + x1] + t[y0 * stride + x0] - t[y0 * stride + x1] - t[y1 * stride + x0]
    }
}

pub fn integral_image(img: &GrayImage) -> IntegralImage {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let stride = w + 1;
    let mut table = vec![0u64; stride * (h + 1)];
    for y in 0..h {
        let row = img.row(y as u32);
        let mut run = 0u64;
        for x in 0..w {
            run += row[x] as u64;
            table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + run;
        }
    }
    IntegralImage {
        width: img.width(),
        height: img.height(),
        table,
    }
}

/// Exact pixel sum over `rect` in constant time.
pub fn rect_sum(ii: &IntegralImage, rect: Rect) -> Result<u64, VisionError> {
    if !rect.fits_in(ii.width, ii.height) {
        return Err(VisionError::OutOfBounds {
            rect,
            width: ii.width,
            height: ii.height,
        });
    }
    Ok(ii.sum_unchecked(rect.x, rect.y, rect.w, rect.h))
}
