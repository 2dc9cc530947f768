//! Histogram of oriented gradients.
//!
//! Unsigned orientations over [0°, 180°), bin centres at multiples of
//! `180 / bins`, linear vote splitting between the two nearest bins, no
//! spatial interpolation, L2-Hys block normalization.

use super::{GrayImage, VisionError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HogParams {
    /// Cell side in pixels.
    pub cell: u32,
    pub bins: u32,
    /// Block side in cells.
    pub block: u32,
    /// Block stride in cells.
    pub block_stride: u32,
    pub clip: f64,
    pub epsilon: f64,
    pub window_w: u32,
    pub window_h: u32,
}

impl Default for HogParams {
    fn default() -> Self {
        Self {
            cell: 8,
            bins: 9,
            block: 2,
            block_stride: 1,
            clip: 0.2,
            epsilon: 1e-5,
            window_w: 64,
            window_h: 128,
        }
    }
}

impl HogParams {
    pub fn validate(&self) -> Result<(), VisionError> {
        let bad = |m: &str| Err(VisionError::InvalidParameter(m.to_string()));
        if self.cell == 0 || self.bins == 0 || self.block == 0 || self.block_stride == 0 {
            return bad("HOG cell, bins, block and block stride must be non-zero");
        }
        if !self.window_w.is_multiple_of(self.cell) || !self.window_h.is_multiple_of(self.cell) {
            return bad("HOG window must be a whole number of cells");
        }
        let (cx, cy) = (self.window_w / self.cell, self.window_h / self.cell);
        if cx < self.block || cy < self.block {
            return bad("HOG window smaller than one block");
        }
        if !(cx - self.block).is_multiple_of(self.block_stride)
            || !(cy - self.block).is_multiple_of(self.block_stride)
        {
            return bad("HOG blocks do not tile the window");
        }
        if !(self.clip > 0.0) || !(self.epsilon > 0.0) {
            return bad("HOG clip and epsilon must be positive");
        }
        Ok(())
    }

    pub fn block_len(&self) -> usize {
        (self.block * self.block * self.bins) as usize
    }

    /// Blocks per window along x and y.
    pub fn window_blocks(&self) -> (u32, u32) {
        let (cx, cy) = (self.window_w / self.cell, self.window_h / self.cell);
        (
            (cx - self.block) / self.block_stride + 1,
            (cy - self.block) / self.block_stride + 1,
        )
    }

    pub fn descriptor_len(&self) -> usize {
        let (bx, by) = self.window_blocks();
        (bx * by) as usize * self.block_len()
    }
}

/// Normalized HOG blocks for a whole image, so that any cell-aligned
/// window can read its descriptor without recomputing gradients.
#[derive(Debug, Clone)]
pub struct HogGrid {
    params: HogParams,
    cells_x: u32,
    cells_y: u32,
    blocks_x: u32,
    blocks_y: u32,
    /// `blocks_y × blocks_x` blocks of `block_len` values each.
    blocks: Vec<f64>,
}

impl HogGrid {
    /// Gradients are centred differences with clamp-to-edge at the image
    /// border; pixels beyond the last whole cell are ignored.
    pub fn compute(img: &GrayImage, params: &HogParams) -> Result<Self, VisionError> {
        params.validate()?;
        let cell = params.cell as usize;
        let bins = params.bins as usize;
        let cells_x = img.width() / params.cell;
        let cells_y = img.height() / params.cell;
        if cells_x < params.block || cells_y < params.block {
            return Err(VisionError::InvalidInput(format!(
                "{}x{} image is smaller than one HOG block",
                img.width(),
                img.height()
            )));
        }

        let (w, h) = (img.width() as i64, img.height() as i64);
        let mut hist = vec![0f64; cells_x as usize * cells_y as usize * bins];
        let bin_width = 180.0 / bins as f64;
        for y in 0..cells_y as usize * cell {
            let row = img.row(y as u32);
            let up = img.row((y as i64 - 1).clamp(0, h - 1) as u32);
            let down = img.row((y as i64 + 1).clamp(0, h - 1) as u32);
            let hist_row = (y / cell) * cells_x as usize;
            for x in 0..cells_x as usize * cell {
                let xl = (x as i64 - 1).clamp(0, w - 1) as usize;
                let xr = (x as i64 + 1).clamp(0, w - 1) as usize;
                let gx = row[xr] as f64 - row[xl] as f64;
                let gy = down[x] as f64 - up[x] as f64;
                if gx == 0.0 && gy == 0.0 {
                    continue;
                }
                let mag = (gx * gx + gy * gy).sqrt();
                let mut theta = gy.atan2(gx).to_degrees();
                if theta < 0.0 {
                    theta += 180.0;
                }
                if theta >= 180.0 {
                    theta -= 180.0;
                }
                let pos = theta / bin_width;
                let b0 = pos.floor();
                let frac = pos - b0;
                let b0 = b0 as usize % bins;
                let b1 = (b0 + 1) % bins;
                let base = (hist_row + x / cell) * bins;
                hist[base + b0] += mag * (1.0 - frac);
                hist[base + b1] += mag * frac;
            }
        }

        let blocks_x = (cells_x - params.block) / params.block_stride + 1;
        let blocks_y = (cells_y - params.block) / params.block_stride + 1;
        let block_len = params.block_len();
        let mut blocks = vec![0f64; blocks_x as usize * blocks_y as usize * block_len];
        let eps2 = params.epsilon * params.epsilon;
        for by in 0..blocks_y as usize {
            for bx in 0..blocks_x as usize {
                let out_base = (by * blocks_x as usize + bx) * block_len;
                let out = &mut blocks[out_base..out_base + block_len];
                let mut k = 0;
                for cy in 0..params.block as usize {
                    for cx in 0..params.block as usize {
                        let gy = by * params.block_stride as usize + cy;
                        let gx = bx * params.block_stride as usize + cx;
                        let src = (gy * cells_x as usize + gx) * bins;
                        out[k..k + bins].copy_from_slice(&hist[src..src + bins]);
                        k += bins;
                    }
                }
                l2_hys(out, params.clip, eps2);
            }
        }

        Ok(Self {
            params: *params,
            cells_x,
            cells_y,
            blocks_x,
            blocks_y,
            blocks,
        })
    }

    pub fn params(&self) -> &HogParams {
        &self.params
    }

    pub fn cells(&self) -> (u32, u32) {
        (self.cells_x, self.cells_y)
    }

    fn window_blocks_at(&self, cell_x: u32, cell_y: u32) -> Result<(usize, usize), VisionError> {
        let p = &self.params;
        let (wcx, wcy) = (p.window_w / p.cell, p.window_h / p.cell);
        if !cell_x.is_multiple_of(p.block_stride) || !cell_y.is_multiple_of(p.block_stride) {
            return Err(VisionError::InvalidInput(
                "window origin is not aligned to the block stride".into(),
            ));
        }
        if cell_x + wcx > self.cells_x || cell_y + wcy > self.cells_y {
            return Err(VisionError::InvalidInput(format!(
                "window at cell ({cell_x}, {cell_y}) exceeds {}x{} cell grid",
                self.cells_x, self.cells_y
            )));
        }
        Ok((
            (cell_x / p.block_stride) as usize,
            (cell_y / p.block_stride) as usize,
        ))
    }

    /// Descriptor of the window whose top-left corner is at cell
    /// `(cell_x, cell_y)`.
    pub fn window_descriptor(&self, cell_x: u32, cell_y: u32) -> Result<Vec<f64>, VisionError> {
        let (ox, oy) = self.window_blocks_at(cell_x, cell_y)?;
        let (wbx, wby) = self.params.window_blocks();
        let block_len = self.params.block_len();
        let mut out = Vec::with_capacity(self.params.descriptor_len());
        for by in 0..wby as usize {
            for bx in 0..wbx as usize {
                let idx = ((oy + by) * self.blocks_x as usize + ox + bx) * block_len;
                out.extend_from_slice(&self.blocks[idx..idx + block_len]);
            }
        }
        Ok(out)
    }

    /// `dot(weights, descriptor)` for a window without materializing the
    /// descriptor.
    pub fn window_dot(
        &self,
        cell_x: u32,
        cell_y: u32,
        weights: &[f64],
    ) -> Result<f64, VisionError> {
        if weights.len() != self.params.descriptor_len() {
            return Err(VisionError::InvalidInput(format!(
                "weight length {} does not match descriptor length {}",
                weights.len(),
                self.params.descriptor_len()
            )));
        }
        let (ox, oy) = self.window_blocks_at(cell_x, cell_y)?;
        let (wbx, wby) = self.params.window_blocks();
        let block_len = self.params.block_len();
        let mut acc = 0.0;
        let mut wi = 0;
        for by in 0..wby as usize {
            for bx in 0..wbx as usize {
                let idx = ((oy + by) * self.blocks_x as usize + ox + bx) * block_len;
                let block = &self.blocks[idx..idx + block_len];
                acc += block
                    .iter()
                    .zip(&weights[wi..wi + block_len])
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
                wi += block_len;
            }
        }
        Ok(acc)
    }

    pub fn blocks_shape(&self) -> (u32, u32) {
        (self.blocks_x, self.blocks_y)
    }
}

fn l2_hys(v: &mut [f64], clip: f64, eps2: f64) {
    let norm = (v.iter().map(|a| a * a).sum::<f64>() + eps2).sqrt();
    for a in v.iter_mut() {
        *a = (*a / norm).min(clip);
    }
    let norm = (v.iter().map(|a| a * a).sum::<f64>() + eps2).sqrt();
    for a in v.iter_mut() {
        *a /= norm;
    }
}

/// HOG descriptor of a window-sized image.
pub fn hog_descriptor(window: &GrayImage, params: &HogParams) -> Result<Vec<f64>, VisionError> {
    params.validate()?;
    if window.width() != params.window_w || window.height() != params.window_h {
        return Err(VisionError::InvalidInput(format!(
            "window is {}x{}, HOG expects {}x{}",
            window.width(),
            window.height(),
            params.window_w,
            params.window_h
        )));
    }
    HogGrid::compute(window, params)?.window_descriptor(0, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_length_is_3780() {
        assert_eq!(HogParams::default().descriptor_len(), 3780);
    }

    #[test]
    fn uniform_window_gives_zero_descriptor() {
        let img = GrayImage::filled(64, 128, 200).unwrap();
        let d = hog_descriptor(&img, &HogParams::default()).unwrap();
        assert_eq!(d.len(), 3780);
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let img = GrayImage::filled(64, 120, 0).unwrap();
        assert!(matches!(
            hog_descriptor(&img, &HogParams::default()),
            Err(VisionError::InvalidInput(_))
        ));
    }

    #[test]
    fn bad_params_are_rejected() {
        let p = HogParams {
            window_w: 60,
            ..HogParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn vertical_edge_votes_bin_zero() {
        let img = GrayImage::from_fn(64, 128, |x, _| if x < 36 { 0 } else { 255 }).unwrap();
        let d = hog_descriptor(&img, &HogParams::default()).unwrap();
        // Every non-zero entry is a bin-0 entry.
        for (i, &v) in d.iter().enumerate() {
            if v != 0.0 {
                assert_eq!(i % 9, 0, "mass in bin {} at {i}", i % 9);
            }
        }
        assert!(d.iter().any(|&v| v > 0.0));
    }

    #[test]
    fn window_dot_matches_descriptor() {
        let img = GrayImage::from_fn(96, 160, |x, y| ((x * 7) ^ (y * 13)) as u8).unwrap();
        let p = HogParams::default();
        let grid = HogGrid::compute(&img, &p).unwrap();
        let weights: Vec<f64> = (0..p.descriptor_len()).map(|i| (i as f64).sin()).collect();
        let d = grid.window_descriptor(2, 3).unwrap();
        let direct: f64 = d.iter().zip(&weights).map(|(a, b)| a * b).sum();
        let fast = grid.window_dot(2, 3, &weights).unwrap();
        assert!((direct - fast).abs() < 1e-9);
        assert!(grid.window_descriptor(5, 0).is_err());
    }
}
