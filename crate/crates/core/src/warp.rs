//! Backward warping of rasters and forward mapping of point sets.

use crate::error::{Error, Result};
use crate::field::DisplacementField;
use crate::grid::{sample_bilinear_all, tap, ImageGrid};
use crate::landmarks::LandmarkSet;
use crate::transform::{AffineTransform2D, SINGULARITY_EPS};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interp {
    Nearest,
    Bilinear,
}

/// Backward-warps `img`: each output pixel `p` samples `img` at `t(p)`.
/// Samples falling outside the image read zero.
///
/// Note `t` here maps output (fixed-grid) coordinates into the source image;
/// to resample a moving image with a moving-to-fixed transform, pass its
/// inverse.
pub fn warp_affine(img: &ImageGrid, t: &AffineTransform2D, interp: Interp) -> Result<ImageGrid> {
    if t.det().abs() < SINGULARITY_EPS {
        return Err(Error::NonInvertibleAffine);
    }
    let (h, w, c) = (img.height(), img.width(), img.channels());
    let mut out = vec![0.0; h * w * c];
    let data = img.data();
    match interp {
        Interp::Nearest => {
            for y in 0..h {
                for x in 0..w {
                    let (sx, sy) = t.apply(x as f64, y as f64);
                    let xi = sx.round() as i64;
                    let yi = sy.round() as i64;
                    for ch in 0..c {
                        out[(y * w + x) * c + ch] = tap(data, h, w, c, ch, xi, yi);
                    }
                }
            }
        }
        Interp::Bilinear => {
            for y in 0..h {
                let row = &mut out[y * w * c..(y + 1) * w * c];
                for x in 0..w {
                    let (sx, sy) = t.apply(x as f64, y as f64);
                    sample_bilinear_all(data, h, w, c, sx, sy, &mut row[x * c..(x + 1) * c]);
                }
            }
        }
    }
    ImageGrid::new(h, w, c, out)
}

/// Resamples a raster through a displacement field: output pixel `p` samples
/// the input at `p + d(p)` with bilinear interpolation and zero padding.
pub fn warp_by_field(img: &ImageGrid, field: &DisplacementField) -> Result<ImageGrid> {
    if img.height() != field.height() || img.width() != field.width() {
        return Err(Error::DimensionMismatch(format!(
            "field {}x{} vs image {}x{}",
            field.height(),
            field.width(),
            img.height(),
            img.width()
        )));
    }
    let (h, w, c) = (img.height(), img.width(), img.channels());
    let data = img.data();
    let mut out = vec![0.0; h * w * c];
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = field.at(x, y);
            sample_bilinear_all(
                data,
                h,
                w,
                c,
                x as f64 + dx,
                y as f64 + dy,
                &mut out[(y * w + x) * c..(y * w + x + 1) * c],
            );
        }
    }
    ImageGrid::new(h, w, c, out)
}

/// Forward-maps every landmark through `t` exactly (no interpolation).
pub fn warp_landmarks(lms: &LandmarkSet, t: &AffineTransform2D) -> LandmarkSet {
    LandmarkSet::from_points(lms.points().iter().map(|&(x, y)| t.apply(x, y)).collect())
}
