//! Combined fidelity score: LNCC dissimilarity plus negated mutual
//! information. Lower is better.

use serde::{Deserialize, Serialize};

use crate::contrastive::FeatureMap;
use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::similarity::lncc::lncc_mean;
use crate::similarity::mi::cmif;

/// Seed for the K-means clustering inside fidelity scoring, fixed for
/// reproducible reports.
pub const FIDELITY_KMEANS_SEED: u64 = 42;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FidelityConfig {
    /// LNCC window side, odd.
    pub lncc_window: usize,
    pub lncc_weight: f64,
    pub cmif_weight: f64,
    /// K-means cluster count for the mutual-information term.
    pub k_levels: usize,
    /// Variance guard for flat LNCC windows.
    pub epsilon: f64,
}

impl Default for FidelityConfig {
    fn default() -> Self {
        Self { lncc_window: 9, lncc_weight: 1.0, cmif_weight: 0.1, k_levels: 8, epsilon: 1e-5 }
    }
}

impl FidelityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lncc_window == 0 || self.lncc_window % 2 == 0 {
            return Err(Error::InvalidInput("lncc_window must be odd and positive".into()));
        }
        if self.lncc_weight < 0.0 || self.cmif_weight < 0.0 {
            return Err(Error::InvalidInput("fidelity weights must be nonnegative".into()));
        }
        if self.lncc_weight + self.cmif_weight <= 0.0 {
            return Err(Error::InvalidInput("both fidelity weights are zero".into()));
        }
        if self.k_levels < 2 {
            return Err(Error::InvalidInput("k_levels must be at least 2".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidInput("epsilon must be positive".into()));
        }
        Ok(())
    }

    /// Largest odd window not exceeding the image extent.
    pub(crate) fn window_for(&self, h: usize, w: usize) -> usize {
        let cap = h.min(w);
        let win = self.lncc_window.min(cap);
        if win % 2 == 0 {
            win - 1
        } else {
            win
        }
    }
}

fn fidelity_channels(
    channels: impl Iterator<Item = (Vec<f64>, Vec<f64>)>,
    h: usize,
    w: usize,
    cfg: &FidelityConfig,
) -> Result<f64> {
    let window = cfg.window_for(h, w);
    let mut total = 0.0;
    let mut count = 0usize;
    for (ca, cb) in channels {
        let mut score = 0.0;
        if cfg.lncc_weight > 0.0 {
            let corr = lncc_mean(&ca, &cb, h, w, window, cfg.epsilon)?.clamp(-1.0, 1.0);
            score += cfg.lncc_weight * (1.0 - corr);
        }
        if cfg.cmif_weight > 0.0 {
            let ga = ImageGrid::new(h, w, 1, ca)?;
            let gb = ImageGrid::new(h, w, 1, cb)?;
            let mi = cmif(&ga, &gb, cfg.k_levels, FIDELITY_KMEANS_SEED)?;
            score += cfg.cmif_weight * (-mi);
        }
        total += score;
        count += 1;
    }
    Ok(total / count as f64)
}

/// Fidelity between two images; multi-channel inputs score channel-wise and
/// average. Returns `lncc_weight * (1 - lncc) + cmif_weight * (-cmif)`.
pub fn fidelity(a: &ImageGrid, b: &ImageGrid, cfg: &FidelityConfig) -> Result<f64> {
    cfg.validate()?;
    if !a.same_shape(b) {
        return Err(Error::DimensionMismatch("fidelity inputs differ in shape".into()));
    }
    let (h, w, c) = (a.height(), a.width(), a.channels());
    fidelity_channels(
        (0..c).map(|ch| (a.channel(ch).unwrap().into_data(), b.channel(ch).unwrap().into_data())),
        h,
        w,
        cfg,
    )
}

/// Fidelity between two feature maps, channel-wise averaged.
pub fn fidelity_features(a: &FeatureMap, b: &FeatureMap, cfg: &FidelityConfig) -> Result<f64> {
    cfg.validate()?;
    if !a.same_shape(b) {
        return Err(Error::DimensionMismatch("fidelity inputs differ in shape".into()));
    }
    let (h, w, c) = (a.height(), a.width(), a.channels());
    fidelity_channels((0..c).map(|ch| (a.channel(ch), b.channel(ch))), h, w, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(h: usize, w: usize, seed: u64) -> ImageGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageGrid::new(h, w, 1, (0..h * w).map(|_| rng.random()).collect()).unwrap()
    }

    #[test]
    fn self_fidelity_lncc_only_is_zero() {
        let img = noise(16, 16, 1);
        let cfg = FidelityConfig { cmif_weight: 0.0, ..FidelityConfig::default() };
        let f = fidelity(&img, &img, &cfg).unwrap();
        assert!(f.abs() < 1e-9, "{f}");
    }

    #[test]
    fn cmif_weight_lowers_self_fidelity() {
        let img = noise(16, 16, 2);
        let base = FidelityConfig { cmif_weight: 0.0, ..FidelityConfig::default() };
        let mixed = FidelityConfig { cmif_weight: 0.5, ..FidelityConfig::default() };
        let f0 = fidelity(&img, &img, &base).unwrap();
        let f1 = fidelity(&img, &img, &mixed).unwrap();
        assert!(f1 < f0, "{f1} !< {f0}");
    }

    #[test]
    fn zero_weights_rejected() {
        let img = noise(8, 8, 3);
        let cfg = FidelityConfig { lncc_weight: 0.0, cmif_weight: 0.0, ..FidelityConfig::default() };
        assert!(fidelity(&img, &img, &cfg).is_err());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = noise(8, 8, 4);
        let b = noise(8, 9, 5);
        assert!(fidelity(&a, &b, &FidelityConfig::default()).is_err());
    }
}
