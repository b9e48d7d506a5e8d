//! Dense raster storage for images.
//!
//! An [`ImageGrid`] is an `H x W x C` row-major array of finite `f64`
//! intensities. Pixel centers sit at integer coordinates, the origin is the
//! top-left pixel, `x` grows rightward and `y` downward.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ImageGrid {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageGrid {
    /// Builds a grid from row-major data, validating shape and finiteness.
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::InvalidInput("image dimensions must be positive".into()));
        }
        if data.len() != height * width * channels {
            return Err(Error::DimensionMismatch(format!(
                "data length {} != {}x{}x{}",
                data.len(),
                height,
                width,
                channels
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("image contains non-finite values".into()));
        }
        Ok(Self { height, width, channels, data })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self::constant(height, width, channels, 0.0)
    }

    pub fn constant(height: usize, width: usize, channels: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0 && channels > 0, "dimensions must be positive");
        Self { height, width, channels, data: vec![value; height * width * channels] }
    }

    /// Single-channel grid filled from a function of (x, y).
    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { height, width, channels: 1, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, c: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, value: f64) {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        self.data[(y * self.width + x) * self.channels + c] = value;
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    /// Extracts one channel as a new single-channel grid.
    pub fn channel(&self, c: usize) -> Result<ImageGrid> {
        if c >= self.channels {
            return Err(Error::InvalidInput(format!("channel {c} out of range")));
        }
        let mut data = Vec::with_capacity(self.height * self.width);
        for px in 0..self.height * self.width {
            data.push(self.data[px * self.channels + c]);
        }
        Ok(ImageGrid { height: self.height, width: self.width, channels: 1, data })
    }

    pub fn single_channel(&self) -> Result<&[f64]> {
        if self.channels != 1 {
            return Err(Error::InvalidInput(format!(
                "expected single-channel image, got {} channels",
                self.channels
            )));
        }
        Ok(&self.data)
    }

    /// Clamps all intensities into `[0, 1]` in place.
    pub fn clamp01(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

/// Samples channel `ch` of a raster at integer coordinates, zero outside.
#[inline]
pub(crate) fn tap(data: &[f64], h: usize, w: usize, c: usize, ch: usize, x: i64, y: i64) -> f64 {
    if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
        0.0
    } else {
        data[(y as usize * w + x as usize) * c + ch]
    }
}

/// Bilinear sample of all channels at (x, y); out-of-bounds taps read zero.
///
/// Integer coordinates take a fast path that copies stored values bit-for-bit.
#[inline]
pub(crate) fn sample_bilinear_all(
    data: &[f64],
    h: usize,
    w: usize,
    c: usize,
    x: f64,
    y: f64,
    out: &mut [f64],
) {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let xi = x0 as i64;
    let yi = y0 as i64;
    if fx == 0.0 && fy == 0.0 {
        for ch in 0..c {
            out[ch] = tap(data, h, w, c, ch, xi, yi);
        }
        return;
    }
    let w00 = (1.0 - fx) * (1.0 - fy);
    let w10 = fx * (1.0 - fy);
    let w01 = (1.0 - fx) * fy;
    let w11 = fx * fy;
    for ch in 0..c {
        out[ch] = w00 * tap(data, h, w, c, ch, xi, yi)
            + w10 * tap(data, h, w, c, ch, xi + 1, yi)
            + w01 * tap(data, h, w, c, ch, xi, yi + 1)
            + w11 * tap(data, h, w, c, ch, xi + 1, yi + 1);
    }
}

/// Bilinear sample of one channel plus its gradient w.r.t. the sample position.
#[inline]
pub(crate) fn sample_bilinear_grad(
    data: &[f64],
    h: usize,
    w: usize,
    c: usize,
    ch: usize,
    x: f64,
    y: f64,
) -> (f64, f64, f64) {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let xi = x0 as i64;
    let yi = y0 as i64;
    let v00 = tap(data, h, w, c, ch, xi, yi);
    let v10 = tap(data, h, w, c, ch, xi + 1, yi);
    let v01 = tap(data, h, w, c, ch, xi, yi + 1);
    let v11 = tap(data, h, w, c, ch, xi + 1, yi + 1);
    let value = (1.0 - fx) * (1.0 - fy) * v00 + fx * (1.0 - fy) * v10 + (1.0 - fx) * fy * v01 + fx * fy * v11;
    let dx = (1.0 - fy) * (v10 - v00) + fy * (v11 - v01);
    let dy = (1.0 - fx) * (v01 - v00) + fx * (v11 - v10);
    (value, dx, dy)
}

/// One pyramid step: 2x2 box average, stride 2; ragged edges average the
/// available pixels. Output dims are `ceil(h/2) x ceil(w/2)`.
pub(crate) fn downsample_box2(h: usize, w: usize, c: usize, data: &[f64]) -> (usize, usize, Vec<f64>) {
    let nh = h.div_ceil(2);
    let nw = w.div_ceil(2);
    let mut out = vec![0.0; nh * nw * c];
    for oy in 0..nh {
        for ox in 0..nw {
            let y1 = (2 * oy + 2).min(h);
            let x1 = (2 * ox + 2).min(w);
            let count = ((y1 - 2 * oy) * (x1 - 2 * ox)) as f64;
            for ch in 0..c {
                let mut acc = 0.0;
                for y in 2 * oy..y1 {
                    for x in 2 * ox..x1 {
                        acc += data[(y * w + x) * c + ch];
                    }
                }
                out[(oy * nw + ox) * c + ch] = acc / count;
            }
        }
    }
    (nh, nw, out)
}
