//! Contrast Limited Adaptive Histogram Equalization.
//!
//! The image is split into a `grid_w` x `grid_h` grid of tiles. Each tile's
//! histogram is clipped at a limit proportional to the mean bin height, the
//! clipped mass is spread back over all bins, and the cumulative histogram
//! becomes that tile's lookup table. Output pixels blend the lookup tables of
//! the four nearest tile centers bilinearly.
//!
//! A tile holding a single value maps through the identity, so flat regions
//! (and constant images) pass through unchanged.
//!
//! Sizes that do not divide the grid are reflect-padded on the right and
//! bottom before tiling; the padding is dropped from the output. Colour
//! images are equalized one channel at a time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_core::{reflect, ImageBuffer};

pub const DEFAULT_BINS: usize = 256;

/// Per-value counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    bins: Vec<u64>,
}

impl Histogram {
    pub fn new(bins: Vec<u64>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::InvalidParameter("histogram needs at least one bin".into()));
        }
        Ok(Histogram { bins })
    }

    pub fn bins(&self) -> &[u64] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }
}

/// Monotone value mapping produced from a histogram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lut {
    map: Vec<u32>,
}

impl Lut {
    pub fn map(&self) -> &[u32] {
        &self.map
    }

    #[inline]
    pub fn apply(&self, v: usize) -> u32 {
        self.map[v]
    }

    pub fn is_monotone(&self) -> bool {
        self.map.windows(2).all(|w| w[0] <= w[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClaheConfig {
    pub grid_w: usize,
    pub grid_h: usize,
    /// Clip limit as a multiple of the mean bin height.
    pub clip_factor: f64,
    pub bins: usize,
}

impl Default for ClaheConfig {
    fn default() -> Self {
        ClaheConfig {
            grid_w: 8,
            grid_h: 8,
            clip_factor: 4.0,
            bins: DEFAULT_BINS,
        }
    }
}

impl ClaheConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_w == 0 || self.grid_h == 0 {
            return Err(Error::InvalidParameter(format!(
                "CLAHE grid must be at least 1x1, got {}x{}",
                self.grid_w, self.grid_h
            )));
        }
        if !self.clip_factor.is_finite() || self.clip_factor < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "CLAHE clip_factor must be finite and >= 1, got {}",
                self.clip_factor
            )));
        }
        if self.bins != DEFAULT_BINS {
            return Err(Error::InvalidParameter(format!(
                "8-bit images are equalized over {DEFAULT_BINS} bins, got bins = {}",
                self.bins
            )));
        }
        Ok(())
    }

    /// Clip limit for a tile holding `tile_pixels` values.
    pub fn clip_limit(&self, tile_pixels: usize) -> u64 {
        let limit = (self.clip_factor * tile_pixels as f64 / self.bins as f64).round();
        (limit as u64).max(1)
    }
}

/// Counts values into `bins` bins. Every value must be below `bins`.
pub fn compute_histogram(values: &[u8], bins: usize) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("cannot histogram an empty region".into()));
    }
    if bins == 0 {
        return Err(Error::InvalidParameter("histogram needs at least one bin".into()));
    }
    let mut counts = vec![0u64; bins];
    for &v in values {
        let slot = counts
            .get_mut(v as usize)
            .ok_or_else(|| Error::InvalidParameter(format!("value {v} does not fit in {bins} bins")))?;
        *slot += 1;
    }
    Ok(Histogram { bins: counts })
}

/// Cuts every bin to `clip_limit` and returns the excess in one pass:
/// `excess / B` to every bin, then one more to each of the lowest
/// `excess % B` bins. Bins may end up above the limit by the redistributed
/// amount.
pub fn clip_and_redistribute(hist: &Histogram, clip_limit: u64) -> Result<Histogram> {
    if clip_limit == 0 {
        return Err(Error::InvalidParameter("clip limit must be at least 1".into()));
    }
    let b = hist.bins.len() as u64;
    let mut excess = 0u64;
    let mut bins: Vec<u64> = hist
        .bins
        .iter()
        .map(|&c| {
            if c > clip_limit {
                excess += c - clip_limit;
                clip_limit
            } else {
                c
            }
        })
        .collect();
    let each = excess / b;
    let rest = (excess % b) as usize;
    for (i, bin) in bins.iter_mut().enumerate() {
        *bin += each + u64::from(i < rest);
    }
    Ok(Histogram { bins })
}

/// Maps `v` to `round((B-1) * (cdf[v] - cdf_min) / (N - cdf_min))`, clamped
/// at zero below the first occupied bin. A histogram with a single occupied
/// bin maps to the identity.
pub fn histogram_to_lut(hist: &Histogram) -> Result<Lut> {
    let n = hist.total();
    if n == 0 {
        return Err(Error::InvalidParameter(
            "cannot build a LUT from an empty histogram".into(),
        ));
    }
    let top = (hist.bins.len() - 1) as u64;
    let cdf: Vec<u64> = hist
        .bins
        .iter()
        .scan(0u64, |acc, &c| {
            *acc += c;
            Some(*acc)
        })
        .collect();
    let cdf_min = cdf.iter().copied().find(|&c| c > 0).unwrap_or(0);
    if n == cdf_min {
        return Ok(Lut {
            map: (0..=top as u32).collect(),
        });
    }
    let span = (n - cdf_min) as u128;
    let map = cdf
        .iter()
        .map(|&c| {
            let above = c.saturating_sub(cdf_min) as u128;
            // integer round-half-up of top * above / span
            ((2 * top as u128 * above + span) / (2 * span)) as u32
        })
        .collect();
    Ok(Lut { map })
}

/// Whole-image equalization, one channel at a time.
pub fn equalize_global(img: &ImageBuffer) -> Result<ImageBuffer> {
    let mut out = img.clone();
    for c in 0..img.channels() {
        let plane = img.channel(c);
        let lut = histogram_to_lut(&compute_histogram(plane.pixels(), DEFAULT_BINS)?)?;
        for y in 0..img.height() {
            for x in 0..img.width() {
                out.set(x, y, c, lut.apply(img.get(x, y, c) as usize) as u8);
            }
        }
    }
    Ok(out)
}

pub fn apply_clahe(img: &ImageBuffer, cfg: &ClaheConfig) -> Result<ImageBuffer> {
    cfg.validate()?;
    let mut out = img.clone();
    for c in 0..img.channels() {
        let plane = img.channel(c);
        let equalized = clahe_plane(&plane, cfg)?;
        for y in 0..img.height() {
            for x in 0..img.width() {
                out.set(x, y, c, equalized[y * img.width() + x]);
            }
        }
    }
    Ok(out)
}

/// Interpolation anchors along one axis: the two tile indices whose centers
/// bracket pixel `p`, and the weight of the second.
#[inline]
/// Neighbouring tile indices and the weight of the second one, as a
/// numerator over `2 * tile`. The fractional tile coordinate of pixel `p` is
/// `(p + 0.5) / tile - 0.5`; working in integers keeps ties exact.
fn anchors(p: usize, tile: usize, tiles: usize) -> (usize, usize, u64) {
    let span = 2 * tile;
    let twice = 2 * p + 1;
    if twice <= tile {
        return (0, 0, 0);
    }
    let s = twice - tile;
    if s >= span * (tiles - 1) {
        (tiles - 1, tiles - 1, 0)
    } else {
        (s / span, s / span + 1, (s % span) as u64)
    }
}

fn clahe_plane(plane: &ImageBuffer, cfg: &ClaheConfig) -> Result<Vec<u8>> {
    let (w, h) = (plane.width(), plane.height());
    let tile_w = w.div_ceil(cfg.grid_w);
    let tile_h = h.div_ceil(cfg.grid_h);
    let tile_pixels = tile_w * tile_h;
    let limit = cfg.clip_limit(tile_pixels);

    let mut luts = Vec::with_capacity(cfg.grid_w * cfg.grid_h);
    let mut region = Vec::with_capacity(tile_pixels);
    for ty in 0..cfg.grid_h {
        for tx in 0..cfg.grid_w {
            region.clear();
            for y in ty * tile_h..(ty + 1) * tile_h {
                let sy = reflect(y as isize, h);
                for x in tx * tile_w..(tx + 1) * tile_w {
                    region.push(plane.get(reflect(x as isize, w), sy, 0));
                }
            }
            let hist = compute_histogram(&region, cfg.bins)?;
            // A single-valued tile keeps the identity mapping; clipping it
            // first would spread its excess into empty bins.
            let single_valued = hist.bins().iter().filter(|&&c| c > 0).count() == 1;
            let hist = if single_valued {
                hist
            } else {
                clip_and_redistribute(&hist, limit)?
            };
            luts.push(histogram_to_lut(&hist)?);
        }
    }
    let lut_at = |tx: usize, ty: usize| &luts[ty * cfg.grid_w + tx];

    let (span_x, span_y) = (2 * tile_w as u64, 2 * tile_h as u64);
    let denom = span_x * span_y;
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let (y0, y1, wy) = anchors(y, tile_h, cfg.grid_h);
        for x in 0..w {
            let (x0, x1, wx) = anchors(x, tile_w, cfg.grid_w);
            let v = plane.get(x, y, 0) as usize;
            let lut = |tx, ty| lut_at(tx, ty).apply(v) as u64;
            let top = (span_x - wx) * lut(x0, y0) + wx * lut(x1, y0);
            let bottom = (span_x - wx) * lut(x0, y1) + wx * lut(x1, y1);
            let sum = (span_y - wy) * top + wy * bottom;
            // round half up; LUT values are at most bins - 1
            out.push(((2 * sum + denom) / (2 * denom)).min(255) as u8);
        }
    }
    Ok(out)
}
