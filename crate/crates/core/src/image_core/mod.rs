//! 8-bit interleaved rasters and the pixel-level augmentations that act on
//! them.
//!
//! All operations are pure: they borrow an [`ImageBuffer`] and return a new
//! one. Randomized operations take an explicit [`Seed`].

mod pipeline;

pub use pipeline::{apply_pipeline, apply_pipeline_traced, AugmentKind, AugmentStep};

use crate::error::{Error, Result};
use crate::rng::{index_below, BoxMuller, Seed};

/// Row-major, channel-interleaved 8-bit raster with 1 or 3 channels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!(
                "unsupported channel count {channels} (expected 1 or 3)"
            )));
        }
        let expected = width * height * channels;
        if pixels.len() != expected {
            return Err(Error::InvalidImage(format!(
                "pixel buffer has {} values, expected {expected}",
                pixels.len()
            )));
        }
        Ok(ImageBuffer {
            width,
            height,
            channels,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds an image from `f(x, y, channel)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> u8,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    pixels.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.pixels[self.index(x, y, c)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: u8) {
        let i = self.index(x, y, c);
        self.pixels[i] = v;
    }

    /// One channel as a standalone single-channel image.
    pub fn channel(&self, c: usize) -> ImageBuffer {
        assert!(c < self.channels, "channel {c} out of range");
        let pixels = self.pixels.iter().skip(c).step_by(self.channels).copied().collect();
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: 1,
            pixels,
        }
    }

    fn map_values(&self, mut f: impl FnMut(u8) -> u8) -> ImageBuffer {
        self.with_pixels(self.pixels.iter().map(|&v| f(v)).collect())
    }

    /// Same shape, new values. `pixels` must have the same length.
    pub(crate) fn with_pixels(&self, pixels: Vec<u8>) -> ImageBuffer {
        debug_assert_eq!(pixels.len(), self.pixels.len());
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: self.channels,
            pixels,
        }
    }
}

/// Rounds half away from zero and clamps into the 8-bit range.
#[inline]
pub(crate) fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Symmetric reflection of a possibly out-of-range coordinate into
/// `[0, len)`: `-1 -> 0`, `len -> len - 1`. Works for offsets larger than
/// `len`.
#[inline]
pub(crate) fn reflect(i: isize, len: usize) -> usize {
    let period = 2 * len as isize;
    let m = i.rem_euclid(period);
    if m < len as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// BT.601 luminance replicated into three channels.
///
/// Single-channel input is replicated unchanged.
pub fn to_grayscale(img: &ImageBuffer) -> ImageBuffer {
    let n = img.width * img.height;
    let mut pixels = Vec::with_capacity(n * 3);
    match img.channels {
        1 => {
            for &v in &img.pixels {
                pixels.extend_from_slice(&[v, v, v]);
            }
        }
        _ => {
            for rgb in img.pixels.chunks_exact(3) {
                let y = 0.299 * rgb[0] as f64 + 0.587 * rgb[1] as f64 + 0.114 * rgb[2] as f64;
                let y = quantize(y);
                pixels.extend_from_slice(&[y, y, y]);
            }
        }
    }
    ImageBuffer {
        width: img.width,
        height: img.height,
        channels: 3,
        pixels,
    }
}

pub fn horizontal_flip(img: &ImageBuffer) -> ImageBuffer {
    let ch = img.channels;
    let row_len = img.width * ch;
    let mut pixels = Vec::with_capacity(img.pixels.len());
    for row in img.pixels.chunks_exact(row_len) {
        for px in row.chunks_exact(ch).rev() {
            pixels.extend_from_slice(px);
        }
    }
    img.with_pixels(pixels)
}

/// Copies the `out_w` x `out_h` window whose top-left corner is `(x0, y0)`.
pub fn crop(img: &ImageBuffer, x0: usize, y0: usize, out_w: usize, out_h: usize) -> Result<ImageBuffer> {
    if out_w == 0 || out_h == 0 || x0 + out_w > img.width || y0 + out_h > img.height {
        return Err(Error::Dimension(format!(
            "window {out_w}x{out_h} at ({x0},{y0}) does not fit in {}x{}",
            img.width, img.height
        )));
    }
    let ch = img.channels;
    let mut pixels = Vec::with_capacity(out_w * out_h * ch);
    for y in y0..y0 + out_h {
        let start = img.index(x0, y, 0);
        pixels.extend_from_slice(&img.pixels[start..start + out_w * ch]);
    }
    ImageBuffer::new(out_w, out_h, ch, pixels)
}

/// Crops a window of the requested size at a uniformly drawn position.
pub fn random_crop(img: &ImageBuffer, out_w: usize, out_h: usize, seed: Seed) -> Result<ImageBuffer> {
    if out_w == 0 || out_h == 0 || out_w > img.width || out_h > img.height {
        return Err(Error::Dimension(format!(
            "crop {out_w}x{out_h} exceeds image {}x{}",
            img.width, img.height
        )));
    }
    let mut rng = seed.rng();
    let x0 = index_below(&mut rng, img.width - out_w + 1);
    let y0 = index_below(&mut rng, img.height - out_h + 1);
    crop(img, x0, y0, out_w, out_h)
}

/// Rotates about the image center `((w-1)/2, (h-1)/2)` with nearest-neighbor
/// sampling. Positive angles turn the content counter-clockwise as displayed.
/// Pixels with no source are set to `fill` on every channel.
pub fn rotate(img: &ImageBuffer, degrees: f64, fill: u8) -> Result<ImageBuffer> {
    if !degrees.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "rotation angle must be finite, got {degrees}"
        )));
    }
    let turned = degrees.rem_euclid(360.0);
    let (cos, sin) = if turned % 90.0 == 0.0 {
        // exact quarter turns so they stay lossless permutations
        match (turned / 90.0) as u32 {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        }
    } else {
        let r = turned.to_radians();
        (r.cos(), r.sin())
    };

    let (w, h, ch) = (img.width, img.height, img.channels);
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let mut out = img.with_pixels(vec![fill; img.pixels.len()]);
    for y in 0..h {
        let dy = y as f64 - cy;
        for x in 0..w {
            let dx = x as f64 - cx;
            let sx = (cx + cos * dx - sin * dy).round();
            let sy = (cy + sin * dx + cos * dy).round();
            if sx < 0.0 || sy < 0.0 || sx >= w as f64 || sy >= h as f64 {
                continue;
            }
            let src = img.index(sx as usize, sy as usize, 0);
            let dst = out.index(x, y, 0);
            out.pixels[dst..dst + ch].copy_from_slice(&img.pixels[src..src + ch]);
        }
    }
    Ok(out)
}

pub fn adjust_brightness(img: &ImageBuffer, factor: f64) -> Result<ImageBuffer> {
    if !factor.is_finite() || factor < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "brightness factor must be finite and non-negative, got {factor}"
        )));
    }
    Ok(img.map_values(|v| quantize(v as f64 * factor)))
}

/// Normalized 1-D Gaussian kernel of radius `ceil(3 sigma)`; index `radius`
/// is the center tap.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let denom = 2.0 * sigma * sigma;
    let mut k: Vec<f64> = (-radius..=radius).map(|i| (-((i * i) as f64) / denom).exp()).collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= sum);
    k
}

/// Separable Gaussian blur with symmetric border reflection. Both passes run
/// in floating point; values are rounded once at the end.
pub fn gaussian_blur(img: &ImageBuffer, sigma: f64) -> Result<ImageBuffer> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "blur sigma must be finite and non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let (w, h, ch) = (img.width, img.height, img.channels);

    let mut horiz = vec![0.0f64; img.pixels.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0;
                for (t, wt) in kernel.iter().enumerate() {
                    let sx = reflect(x as isize + t as isize - radius, w);
                    acc += wt * img.get(sx, y, c) as f64;
                }
                horiz[img.index(x, y, c)] = acc;
            }
        }
    }

    let mut pixels = vec![0u8; img.pixels.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0;
                for (t, wt) in kernel.iter().enumerate() {
                    let sy = reflect(y as isize + t as isize - radius, h);
                    acc += wt * horiz[img.index(x, sy, c)];
                }
                pixels[img.index(x, y, c)] = quantize(acc);
            }
        }
    }
    Ok(img.with_pixels(pixels))
}

/// Adds independent N(0, sigma^2) noise to every value, drawing deviates in
/// row-major, channel-interleaved order.
pub fn add_gaussian_noise(img: &ImageBuffer, sigma: f64, seed: Seed) -> Result<ImageBuffer> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "noise sigma must be finite and non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let mut normal = BoxMuller::new(seed.rng());
    Ok(img.map_values(|v| quantize(v as f64 + sigma * normal.next_standard())))
}
