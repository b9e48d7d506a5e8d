//! Multi-resolution pyramids over scales 1, 1/2, 1/4, 1/8, 1/16.

use crate::contrastive::FeatureMap;
use crate::error::{Error, Result};
use crate::grid::{downsample_box2, ImageGrid};

/// Ordered list of rasters, finest first. Level `k` has dimensions
/// `ceil(H / 2^k) x ceil(W / 2^k)`.
#[derive(Clone, Debug)]
pub struct Pyramid<T> {
    levels: Vec<T>,
}

impl<T> Pyramid<T> {
    pub fn levels(&self) -> &[T] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> &T {
        &self.levels[k]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

/// Number of levels (capped at `max_levels`) that keep the coarsest dimension
/// of an `h x w` grid at or above `min_dim` pixels.
pub fn levels_for(h: usize, w: usize, max_levels: usize, min_dim: usize) -> usize {
    let mut n = 1;
    let (mut ch, mut cw) = (h, w);
    while n < max_levels {
        let nh = ch.div_ceil(2);
        let nw = cw.div_ceil(2);
        if nh.min(nw) < min_dim {
            break;
        }
        ch = nh;
        cw = nw;
        n += 1;
    }
    n
}

/// Builds exactly `levels` pyramid levels: level 0 is the input, each
/// following level is a 2x2 box-filter average with stride-2 subsampling.
pub fn build_pyramid(img: &ImageGrid, levels: usize) -> Result<Pyramid<ImageGrid>> {
    if levels == 0 {
        return Err(Error::InvalidInput("pyramid needs at least one level".into()));
    }
    let mut out = Vec::with_capacity(levels);
    out.push(img.clone());
    for _ in 1..levels {
        let prev: &ImageGrid = out.last().unwrap();
        let (nh, nw, data) = downsample_box2(prev.height(), prev.width(), prev.channels(), prev.data());
        out.push(ImageGrid::new(nh, nw, prev.channels(), data)?);
    }
    Ok(Pyramid { levels: out })
}

/// Same construction for feature maps.
pub fn build_feature_pyramid(fm: &FeatureMap, levels: usize) -> Result<Pyramid<FeatureMap>> {
    if levels == 0 {
        return Err(Error::InvalidInput("pyramid needs at least one level".into()));
    }
    let mut out = Vec::with_capacity(levels);
    out.push(fm.clone());
    for _ in 1..levels {
        let prev: &FeatureMap = out.last().unwrap();
        let (nh, nw, data) = downsample_box2(prev.height(), prev.width(), prev.channels(), prev.data());
        out.push(FeatureMap::new(nh, nw, prev.channels(), data)?);
    }
    Ok(Pyramid { levels: out })
}
