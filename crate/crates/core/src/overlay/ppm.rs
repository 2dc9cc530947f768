//! Binary netpbm rasters: P6 (RGB) and P5 (gray, expanded to RGB on read).

use std::io::{self, BufRead, Write};

use crate::vision::{GrayImage, RgbImage};

#[derive(Debug, thiserror::Error)]
pub enum PpmError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed netpbm header: {0}")]
    Header(String),
    #[error("only 8-bit rasters are supported (maxval {0})")]
    MaxVal(u32),
}

pub fn write_ppm(image: &RgbImage, mut w: impl Write) -> io::Result<()> {
    write!(w, "P6\n{} {}\n255\n", image.width(), image.height())?;
    w.write_all(image.data())
}

pub fn write_pgm(image: &GrayImage, mut w: impl Write) -> io::Result<()> {
    write!(w, "P5\n{} {}\n255\n", image.width(), image.height())?;
    w.write_all(image.data())
}

fn header_token(r: &mut impl BufRead) -> Result<String, PpmError> {
    let mut tok = String::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            return if tok.is_empty() {
                Err(PpmError::Header("unexpected end of header".into()))
            } else {
                Ok(tok)
            };
        }
        match byte[0] {
            b'#' if tok.is_empty() => {
                let mut skip = Vec::new();
                r.read_until(b'\n', &mut skip)?;
            }
            b if b.is_ascii_whitespace() => {
                if !tok.is_empty() {
                    return Ok(tok);
                }
            }
            b => {
                tok.push(b as char);
                if tok.len() > 16 {
                    return Err(PpmError::Header("token too long".into()));
                }
            }
        }
    }
}

fn header_u32(r: &mut impl BufRead, what: &str) -> Result<u32, PpmError> {
    let t = header_token(r)?;
    t.parse()
        .map_err(|_| PpmError::Header(format!("invalid {what} `{t}`")))
}

/// Reads a P6 or P5 raster. Exactly one whitespace byte separates the
/// maxval from the pixel data.
pub fn read_ppm(mut r: impl BufRead) -> Result<RgbImage, PpmError> {
    let magic = header_token(&mut r)?;
    let channels = match magic.as_str() {
        "P6" => 3,
        "P5" => 1,
        m => return Err(PpmError::Header(format!("unsupported magic `{m}`"))),
    };
    let w = header_u32(&mut r, "width")?;
    let h = header_u32(&mut r, "height")?;
    let max = header_u32(&mut r, "maxval")?;
    if max != 255 {
        return Err(PpmError::MaxVal(max));
    }
    let n = (w as usize)
        .checked_mul(h as usize)
        .and_then(|p| p.checked_mul(channels))
        .filter(|&n| n <= 1 << 28)
        .ok_or_else(|| PpmError::Header(format!("raster {w}x{h} too large")))?;
    let mut data = vec![0u8; n];
    r.read_exact(&mut data)?;
    let bad = |e: crate::vision::VisionError| PpmError::Header(e.to_string());
    if channels == 3 {
        RgbImage::from_raw(w, h, data).map_err(bad)
    } else {
        Ok(GrayImage::from_raw(w, h, data).map_err(bad)?.to_rgb())
    }
}
