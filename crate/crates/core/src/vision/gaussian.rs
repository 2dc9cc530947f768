use super::{GrayImage, VisionError};

/// Parameters of a discrete, per-axis Gaussian kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKernelParams {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub mu_x: f64,
    pub mu_y: f64,
    pub radius: u32,
}

impl Default for GaussianKernelParams {
    fn default() -> Self {
        Self {
            sigma_x: 1.0,
            sigma_y: 1.0,
            mu_x: 0.0,
            mu_y: 0.0,
            radius: 2,
        }
    }
}

impl GaussianKernelParams {
    pub fn isotropic(sigma: f64, radius: u32) -> Self {
        Self {
            sigma_x: sigma,
            sigma_y: sigma,
            radius,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), VisionError> {
        if !(self.sigma_x > 0.0 && self.sigma_y > 0.0)
            || !self.sigma_x.is_finite()
            || !self.sigma_y.is_finite()
        {
            return Err(VisionError::InvalidParameter(format!(
                "gaussian sigma must be positive and finite, got ({}, {})",
                self.sigma_x, self.sigma_y
            )));
        }
        if !self.mu_x.is_finite() || !self.mu_y.is_finite() {
            return Err(VisionError::InvalidParameter(
                "gaussian mean must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Normalized 1-D factor along one axis. The 2-D exponent is a sum of
    /// per-axis terms, so the normalized 2-D kernel is the outer product of
    /// these two factors.
    fn axis_factor(&self, sigma: f64, mu: f64) -> Vec<f64> {
        let r = self.radius as i64;
        let raw: Vec<f64> = (-r..=r)
            .map(|i| {
                let d = i as f64 - mu;
                (-(d * d) / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / sum).collect()
    }
}

/// Square `(2r+1)²` kernel, row-major with offsets `-r..=r` on both axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    radius: u32,
    values: Vec<f64>,
}

impl Kernel2D {
    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius as usize + 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Weight at offset `(dx, dy)`, each in `-r..=r`.
    pub fn at(&self, dx: i32, dy: i32) -> f64 {
        let r = self.radius as i32;
        self.values[((dy + r) as usize) * self.side() + (dx + r) as usize]
    }
}

/// Builds the Gaussian kernel from the unnormalized 2-D exponent and
/// normalizes the discrete grid to unit sum. The analytic prefactor drops
/// out in the normalization.
pub fn gaussian_kernel(params: &GaussianKernelParams) -> Result<Kernel2D, VisionError> {
    params.validate()?;
    let r = params.radius as i64;
    let mut values = Vec::with_capacity(((2 * r + 1) * (2 * r + 1)) as usize);
    for y in -r..=r {
        for x in -r..=r {
            let dx = x as f64 - params.mu_x;
            let dy = y as f64 - params.mu_y;
            let e = -(dx * dx) / (2.0 * params.sigma_x * params.sigma_x)
                - (dy * dy) / (2.0 * params.sigma_y * params.sigma_y);
            values.push(e.exp());
        }
    }
    let sum: f64 = values.iter().sum();
    values.iter_mut().for_each(|v| *v /= sum);
    Ok(Kernel2D {
        radius: params.radius,
        values,
    })
}

/// Gaussian smoothing with clamp-to-edge borders.
///
/// Runs as a row pass followed by a column pass on `f32` intermediates and
/// rounds once at the end, so it agrees with direct 2-D convolution up to a
/// single rounding step.
pub fn gaussian_blur(
    img: &GrayImage,
    params: &GaussianKernelParams,
) -> Result<GrayImage, VisionError> {
    params.validate()?;
    let kx: Vec<f32> = params
        .axis_factor(params.sigma_x, params.mu_x)
        .into_iter()
        .map(|v| v as f32)
        .collect();
    let ky: Vec<f32> = params
        .axis_factor(params.sigma_y, params.mu_y)
        .into_iter()
        .map(|v| v as f32)
        .collect();
    let r = params.radius as i64;
    let (w, h) = (img.width() as usize, img.height() as usize);

    let mut horiz = vec![0f32; w * h];
    let mut padded = Vec::with_capacity(w + 2 * r as usize);
    for y in 0..h {
        let row = img.row(y as u32);
        padded.clear();
        padded.extend((-r..w as i64 + r).map(|x| row[x.clamp(0, w as i64 - 1) as usize] as f32));
        let out = &mut horiz[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            let mut acc = 0f32;
            for (k, wgt) in kx.iter().enumerate() {
                acc += padded[x + k] * wgt;
            }
            *o = acc;
        }
    }

    let mut data = vec![0u8; w * h];
    let mut acc = vec![0f32; w];
    for y in 0..h as i64 {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for (k, wgt) in ky.iter().enumerate() {
            let sy = (y + k as i64 - r).clamp(0, h as i64 - 1) as usize;
            let src = &horiz[sy * w..(sy + 1) * w];
            for (a, s) in acc.iter_mut().zip(src) {
                *a += s * wgt;
            }
        }
        let out = &mut data[y as usize * w..(y as usize + 1) * w];
        for (o, a) in out.iter_mut().zip(&acc) {
            *o = (a + 0.5).clamp(0.0, 255.0) as u8;
        }
    }
    GrayImage::from_raw(img.width(), img.height(), data)
}
