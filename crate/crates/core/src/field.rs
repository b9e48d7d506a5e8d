//! Per-pixel displacement fields, the deformable intermediate of instance
//! optimization.

use crate::error::{Error, Result};

/// `H x W` grid of `(dx, dy)` displacement vectors in pixels, row-major with
/// the two components interleaved. The field lives on the fixed grid: pixel
/// `p` of the fixed image corresponds to position `p + d(p)` in the moving
/// image.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementField {
    height: usize,
    width: usize,
    vectors: Vec<f64>,
}

impl DisplacementField {
    pub fn zeros(height: usize, width: usize) -> Self {
        assert!(height > 0 && width > 0);
        Self { height, width, vectors: vec![0.0; height * width * 2] }
    }

    pub fn new(height: usize, width: usize, vectors: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidInput("field dimensions must be positive".into()));
        }
        if vectors.len() != height * width * 2 {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} != {}x{}x2",
                vectors.len(),
                height,
                width
            )));
        }
        if !vectors.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("field contains non-finite values".into()));
        }
        Ok(Self { height, width, vectors })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    pub(crate) fn vectors_mut(&mut self) -> &mut [f64] {
        &mut self.vectors
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (f64, f64) {
        let i = (y * self.width + x) * 2;
        (self.vectors[i], self.vectors[i + 1])
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, dx: f64, dy: f64) {
        let i = (y * self.width + x) * 2;
        self.vectors[i] = dx;
        self.vectors[i + 1] = dy;
    }

    /// Largest vector magnitude in the field.
    pub fn max_norm(&self) -> f64 {
        self.vectors
            .chunks_exact(2)
            .map(|v| (v[0] * v[0] + v[1] * v[1]).sqrt())
            .fold(0.0, f64::max)
    }

    /// Bilinear sample of the field at a fractional position, clamped to the
    /// border (fields are extended by replication, not zeros).
    pub fn sample_clamped(&self, x: f64, y: f64) -> (f64, f64) {
        let xc = x.clamp(0.0, (self.width - 1) as f64);
        let yc = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = xc.floor() as usize;
        let y0 = yc.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = xc - x0 as f64;
        let fy = yc - y0 as f64;
        let lerp = |c: usize| -> f64 {
            let v00 = self.vectors[(y0 * self.width + x0) * 2 + c];
            let v10 = self.vectors[(y0 * self.width + x1) * 2 + c];
            let v01 = self.vectors[(y1 * self.width + x0) * 2 + c];
            let v11 = self.vectors[(y1 * self.width + x1) * 2 + c];
            (1.0 - fx) * (1.0 - fy) * v00 + fx * (1.0 - fy) * v10 + (1.0 - fx) * fy * v01 + fx * fy * v11
        };
        (lerp(0), lerp(1))
    }

    /// Upsamples the field to `new_h x new_w`, scaling the vectors by the
    /// resolution ratio (used when moving one pyramid level finer).
    pub fn upsample_to(&self, new_h: usize, new_w: usize) -> Self {
        let sx = self.width as f64 / new_w as f64;
        let sy = self.height as f64 / new_h as f64;
        let gain_x = new_w as f64 / self.width as f64;
        let gain_y = new_h as f64 / self.height as f64;
        let mut out = DisplacementField::zeros(new_h, new_w);
        for y in 0..new_h {
            for x in 0..new_w {
                let (dx, dy) = self.sample_clamped(
                    (x as f64 + 0.5) * sx - 0.5,
                    (y as f64 + 0.5) * sy - 0.5,
                );
                out.set(x, y, dx * gain_x, dy * gain_y);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upsample_doubles_constant_field() {
        let mut f = DisplacementField::zeros(4, 4);
        for y in 0..4 {
            for x in 0..4 {
                f.set(x, y, 1.5, -0.5);
            }
        }
        let up = f.upsample_to(8, 8);
        for y in 0..8 {
            for x in 0..8 {
                let (dx, dy) = up.at(x, y);
                assert!((dx - 3.0).abs() < 1e-12);
                assert!((dy + 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_length() {
        assert!(DisplacementField::new(2, 2, vec![0.0; 7]).is_err());
    }
}
