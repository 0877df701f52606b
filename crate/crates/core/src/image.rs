//! RGB image container with normalized `f64` intensities.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};

pub const CHANNELS: usize = 3;

/// Smallest height/width accepted by the degradation pipeline.
pub const MIN_PIPELINE_DIM: usize = 8;

/// An `H x W x 3` image, row-major, channel-interleaved, every value finite
/// and inside `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImagePlane {
    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::check_dims(height, width)?;
        check_value(value)?;
        Ok(Self {
            height,
            width,
            data: vec![value; height * width * CHANNELS],
        })
    }

    /// Builds an image from a per-pixel, per-channel function `f(i, j, c)`.
    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        Self::check_dims(height, width)?;
        let mut data = Vec::with_capacity(height * width * CHANNELS);
        for i in 0..height {
            for j in 0..width {
                for c in 0..CHANNELS {
                    data.push(f(i, j, c));
                }
            }
        }
        Self::from_raw(height, width, data)
    }

    pub fn from_raw(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        Self::check_dims(height, width)?;
        if data.len() != height * width * CHANNELS {
            return Err(Error::param(format!(
                "buffer holds {} values, expected {}",
                data.len(),
                height * width * CHANNELS
            )));
        }
        for &v in &data {
            check_value(v)?;
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    /// Clamps every value into `[0, 1]`. Caller guarantees finiteness.
    pub(crate) fn from_raw_clamped(height: usize, width: usize, mut data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width * CHANNELS);
        for v in &mut data {
            debug_assert!(v.is_finite());
            *v = v.clamp(0.0, 1.0);
        }
        Self {
            height,
            width,
            data,
        }
    }

    /// Caller guarantees every value is finite and in range.
    pub(crate) fn from_raw_unchecked(height: usize, width: usize, data: Vec<f64>) -> Self {
        debug_assert!(data.iter().all(|v| (0.0..=1.0).contains(v)));
        Self {
            height,
            width,
            data,
        }
    }

    fn check_dims(height: usize, width: usize) -> Result<()> {
        if height == 0 || width == 0 {
            return Err(Error::param(format!(
                "image dimensions must be positive, got {height}x{width}"
            )));
        }
        Ok(())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(height, width)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, c: usize) -> f64 {
        self.data[(i * self.width + j) * CHANNELS + c]
    }

    #[inline]
    pub fn pixel(&self, i: usize, j: usize) -> [f64; 3] {
        let k = (i * self.width + j) * CHANNELS;
        [self.data[k], self.data[k + 1], self.data[k + 2]]
    }

    pub(crate) fn ensure_pipeline_dims(&self) -> Result<()> {
        if self.height < MIN_PIPELINE_DIM || self.width < MIN_PIPELINE_DIM {
            return Err(Error::param(format!(
                "image {}x{} is below the {MIN_PIPELINE_DIM}x{MIN_PIPELINE_DIM} pipeline minimum",
                self.height, self.width
            )));
        }
        Ok(())
    }

    pub(crate) fn ensure_same_dims(&self, other: &ImagePlane) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimMismatch {
                expected: self.dims(),
                actual: other.dims(),
            });
        }
        Ok(())
    }

    /// 8-bit conversion with round-half-away-from-zero.
    pub fn to_rgb8(&self) -> RgbImage {
        RgbImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            let p = self.pixel(y as usize, x as usize);
            Rgb(p.map(quantize))
        })
    }

    pub fn from_rgb8(img: &RgbImage) -> Self {
        let (w, h) = img.dimensions();
        let data = img.as_raw().iter().map(|&v| f64::from(v) / 255.0).collect();
        Self::from_raw_unchecked(h as usize, w as usize, data)
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let decoded = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
            .map_err(|source| Error::Image {
                path: path.to_path_buf(),
                source,
            })?;
        Ok(Self::from_rgb8(&decoded.to_rgb8()))
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.to_rgb8()
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|source| match source {
                image::ImageError::IoError(e) => Error::io(path, e),
                source => Error::Image {
                    path: path.to_path_buf(),
                    source,
                },
            })
    }

    /// Values after an 8-bit round trip.
    pub fn quantized(&self) -> Self {
        let data = self
            .data
            .iter()
            .map(|&v| f64::from(quantize(v)) / 255.0)
            .collect();
        Self::from_raw_unchecked(self.height, self.width, data)
    }

    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 || top + height > self.height || left + width > self.width {
            return Err(Error::param(format!(
                "crop ({top},{left}) {height}x{width} exceeds image {}x{}",
                self.height, self.width
            )));
        }
        let mut data = Vec::with_capacity(height * width * CHANNELS);
        for i in top..top + height {
            let start = (i * self.width + left) * CHANNELS;
            data.extend_from_slice(&self.data[start..start + width * CHANNELS]);
        }
        Ok(Self::from_raw_unchecked(height, width, data))
    }

    /// Integer translation with edge clamping: `out(i, j) = in(i + dy, j + dx)`.
    pub fn shifted(&self, dy: i64, dx: i64) -> Self {
        self.remap(self.height, self.width, |i, j| {
            (
                clamp_index(i as i64 + dy, self.height),
                clamp_index(j as i64 + dx, self.width),
            )
        })
    }

    /// Mirror left-right.
    pub fn flip_horizontal(&self) -> Self {
        self.remap(self.height, self.width, |i, j| (i, self.width - 1 - j))
    }

    /// Mirror top-bottom.
    pub fn flip_vertical(&self) -> Self {
        self.remap(self.height, self.width, |i, j| (self.height - 1 - i, j))
    }

    /// Rotates by `quarter_turns * 90` degrees counter-clockwise.
    pub fn rot90(&self, quarter_turns: u8) -> Self {
        let (h, w) = (self.height, self.width);
        match quarter_turns % 4 {
            0 => self.clone(),
            1 => self.remap(w, h, |i, j| (j, w - 1 - i)),
            2 => self.remap(h, w, |i, j| (h - 1 - i, w - 1 - j)),
            _ => self.remap(w, h, |i, j| (h - 1 - j, i)),
        }
    }

    /// Gathers `out(i, j) = self(src(i, j))` for an `h x w` output.
    fn remap(&self, h: usize, w: usize, src: impl Fn(usize, usize) -> (usize, usize)) -> Self {
        let mut data = Vec::with_capacity(h * w * CHANNELS);
        for i in 0..h {
            for j in 0..w {
                let (si, sj) = src(i, j);
                data.extend_from_slice(&self.pixel(si, sj));
            }
        }
        Self::from_raw_unchecked(h, w, data)
    }

    /// Places `other` to the right of `self`. Heights must match.
    pub fn hconcat(&self, other: &ImagePlane) -> Result<Self> {
        if self.height != other.height {
            return Err(Error::DimMismatch {
                expected: self.dims(),
                actual: other.dims(),
            });
        }
        let w = self.width + other.width;
        let mut data = Vec::with_capacity(self.height * w * CHANNELS);
        for i in 0..self.height {
            let a = i * self.width * CHANNELS;
            let b = i * other.width * CHANNELS;
            data.extend_from_slice(&self.data[a..a + self.width * CHANNELS]);
            data.extend_from_slice(&other.data[b..b + other.width * CHANNELS]);
        }
        Ok(Self::from_raw_unchecked(self.height, w, data))
    }
}

#[inline]
pub(crate) fn clamp_index(v: i64, len: usize) -> usize {
    v.clamp(0, len as i64 - 1) as usize
}

#[inline]
fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn check_value(v: f64) -> Result<()> {
    if !v.is_finite() || !(0.0..=1.0).contains(&v) {
        return Err(Error::param(format!("intensity {v} outside [0, 1]")));
    }
    Ok(())
}
