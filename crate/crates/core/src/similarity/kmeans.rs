//! 1-D K-means over pixel intensities: the level sets feeding the mutual
//! information histograms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::ImageGrid;

const MAX_LLOYD_ITERS: usize = 100;

/// A complete pixel labeling into `k` intensity clusters. Centroids are
/// sorted ascending and labels refer to the sorted order.
#[derive(Clone, Debug)]
pub struct LevelSetLabeling {
    height: usize,
    width: usize,
    k: usize,
    labels: Vec<u32>,
    centroids: Vec<f64>,
}

impl LevelSetLabeling {
    /// Builds a labeling directly, validating shape and label range.
    /// Centroids must already be sorted ascending.
    pub fn from_parts(
        height: usize,
        width: usize,
        k: usize,
        labels: Vec<u32>,
        centroids: Vec<f64>,
    ) -> Result<Self> {
        if k == 0 || centroids.len() != k {
            return Err(Error::InvalidInput("centroid count must equal k".into()));
        }
        if labels.len() != height * width {
            return Err(Error::DimensionMismatch("label count != H*W".into()));
        }
        if labels.iter().any(|&l| l as usize >= k) {
            return Err(Error::InvalidInput("label out of range".into()));
        }
        if centroids.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput("centroids must be sorted ascending".into()));
        }
        Ok(Self { height, width, k, labels, centroids })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn centroids(&self) -> &[f64] {
        &self.centroids
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

fn nearest(centroids: &[f64], v: f64) -> u32 {
    let mut best = 0u32;
    let mut best_d = f64::INFINITY;
    for (i, &c) in centroids.iter().enumerate() {
        let d = (v - c).abs();
        if d < best_d {
            best_d = d;
            best = i as u32;
        }
    }
    best
}

/// Lloyd's algorithm with seeded k-means++ initialization on the intensity
/// values of a single-channel image. Errors when the image has fewer
/// distinct intensities than clusters.
pub fn kmeans_levels(img: &ImageGrid, k: usize, seed: u64) -> Result<LevelSetLabeling> {
    let values = img.single_channel()?;
    if k < 2 {
        return Err(Error::InvalidInput("k must be at least 2".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let distinct = 1 + sorted.windows(2).filter(|w| w[0] != w[1]).count();
    if distinct < k {
        return Err(Error::DegenerateClustering);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = values.len();
    // k-means++ seeding: first center uniform, then proportional to squared
    // distance from the nearest chosen center.
    let mut centroids = Vec::with_capacity(k);
    centroids.push(values[rng.random_range(0..n)]);
    let mut d2: Vec<f64> = values.iter().map(|&v| (v - centroids[0]).powi(2)).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, &d) in d2.iter().enumerate() {
            u -= d;
            if u <= 0.0 && d > 0.0 {
                pick = i;
                break;
            }
        }
        let c = values[pick];
        centroids.push(c);
        for (i, &v) in values.iter().enumerate() {
            d2[i] = d2[i].min((v - c).powi(2));
        }
    }

    let mut labels: Vec<u32> = values.iter().map(|&v| nearest(&centroids, v)).collect();
    for _ in 0..MAX_LLOYD_ITERS {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (&v, &lab) in values.iter().zip(labels.iter()) {
            sums[lab as usize] += v;
            counts[lab as usize] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c] / counts[c] as f64;
            }
        }
        let mut changed = false;
        for (i, &v) in values.iter().enumerate() {
            let lab = nearest(&centroids, v);
            if lab != labels[i] {
                labels[i] = lab;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // Canonical order: centroids ascending, labels remapped accordingly.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| centroids[i].partial_cmp(&centroids[j]).unwrap().then(i.cmp(&j)));
    let mut remap = vec![0u32; k];
    for (new_idx, &old_idx) in order.iter().enumerate() {
        remap[old_idx] = new_idx as u32;
    }
    let centroids: Vec<f64> = order.iter().map(|&i| centroids[i]).collect();
    for lab in &mut labels {
        *lab = remap[*lab as usize];
    }
    Ok(LevelSetLabeling { height: img.height(), width: img.width(), k, labels, centroids })
}
