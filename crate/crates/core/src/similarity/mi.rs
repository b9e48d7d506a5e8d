//! Shannon entropies over level-set histograms and the cross mutual
//! information function (CMIF). Entropies are in nats.

use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::similarity::kmeans::{kmeans_levels, LevelSetLabeling};

/// Normalized joint and marginal histograms over two labelings of the same
/// pixel domain.
#[derive(Clone, Debug)]
pub struct HistogramTable {
    k_a: usize,
    k_b: usize,
    joint: Vec<f64>,
    marginal_a: Vec<f64>,
    marginal_b: Vec<f64>,
    n_ab: usize,
}

impl HistogramTable {
    pub fn k_a(&self) -> usize {
        self.k_a
    }

    pub fn k_b(&self) -> usize {
        self.k_b
    }

    /// Joint probability of labels `(a, b)`.
    pub fn joint(&self, a: usize, b: usize) -> f64 {
        self.joint[a * self.k_b + b]
    }

    pub fn marginal_a(&self) -> &[f64] {
        &self.marginal_a
    }

    pub fn marginal_b(&self) -> &[f64] {
        &self.marginal_b
    }

    pub fn n_ab(&self) -> usize {
        self.n_ab
    }
}

/// Builds the normalized joint histogram of two labelings.
pub fn joint_histogram(la: &LevelSetLabeling, lb: &LevelSetLabeling) -> Result<HistogramTable> {
    if la.height() != lb.height() || la.width() != lb.width() {
        return Err(Error::DimensionMismatch(format!(
            "labelings differ: {}x{} vs {}x{}",
            la.height(),
            la.width(),
            lb.height(),
            lb.width()
        )));
    }
    let (k_a, k_b) = (la.k(), lb.k());
    let n = la.len();
    let mut joint = vec![0.0; k_a * k_b];
    let mut marginal_a = vec![0.0; k_a];
    let mut marginal_b = vec![0.0; k_b];
    let inv = 1.0 / n as f64;
    for (&a, &b) in la.labels().iter().zip(lb.labels().iter()) {
        joint[a as usize * k_b + b as usize] += inv;
        marginal_a[a as usize] += inv;
        marginal_b[b as usize] += inv;
    }
    Ok(HistogramTable { k_a, k_b, joint, marginal_a, marginal_b, n_ab: n })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entropies {
    pub h_a: f64,
    pub h_b: f64,
    pub h_ab: f64,
}

fn shannon(probs: impl Iterator<Item = f64>) -> f64 {
    let mut h = 0.0;
    for p in probs {
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    h
}

/// Marginal and joint entropies of two labelings, natural log.
pub fn entropies(la: &LevelSetLabeling, lb: &LevelSetLabeling) -> Result<Entropies> {
    let table = joint_histogram(la, lb)?;
    Ok(Entropies {
        h_a: shannon(table.marginal_a.iter().copied()),
        h_b: shannon(table.marginal_b.iter().copied()),
        h_ab: shannon(table.joint.iter().copied()),
    })
}

/// Cross mutual information: both images are clustered into `k` level sets
/// (same seed for each) and `MI = H_A + H_B - H_AB`. Nonnegative, in nats.
pub fn cmif(a: &ImageGrid, b: &ImageGrid, k: usize, seed: u64) -> Result<f64> {
    let la = kmeans_levels(a, k, seed)?;
    let lb = kmeans_levels(b, k, seed)?;
    let e = entropies(&la, &lb)?;
    Ok((e.h_a + e.h_b - e.h_ab).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn labeling(h: usize, w: usize, k: usize, labels: Vec<u32>) -> LevelSetLabeling {
        // Tests build labelings through kmeans on a crafted image whose
        // intensities equal the desired labels.
        let img = ImageGrid::new(h, w, 1, labels.iter().map(|&l| l as f64).collect()).unwrap();
        let ls = kmeans_levels(&img, k, 1).unwrap();
        assert_eq!(ls.labels(), labels.as_slice());
        ls
    }

    #[test]
    fn identical_two_level_labelings() {
        let la = labeling(2, 2, 2, vec![0, 1, 0, 1]);
        let e = entropies(&la, &la).unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!((e.h_a - ln2).abs() < 1e-12);
        assert!((e.h_b - ln2).abs() < 1e-12);
        assert!((e.h_ab - ln2).abs() < 1e-12);
    }

    #[test]
    fn hand_built_joint_counts() {
        // 16 pixels with joint counts {(0,0): 8, (0,1): 4, (1,1): 4}
        let mut a = Vec::new();
        let mut b = Vec::new();
        for _ in 0..8 {
            a.push(0);
            b.push(0);
        }
        for _ in 0..4 {
            a.push(0);
            b.push(1);
        }
        for _ in 0..4 {
            a.push(1);
            b.push(1);
        }
        let la = labeling(4, 4, 2, a);
        let lb = labeling(4, 4, 2, b);
        let e = entropies(&la, &lb).unwrap();
        let h2 = |p: f64| -> f64 { -(p * p.ln() + (1.0 - p) * (1.0 - p).ln()) };
        assert!((e.h_a - h2(0.75)).abs() < 1e-12);
        assert!((e.h_b - h2(0.5)).abs() < 1e-12);
        let expected_joint = -(0.5 * 0.5f64.ln() + 2.0 * 0.25 * 0.25f64.ln());
        assert!((e.h_ab - expected_joint).abs() < 1e-12);
        // marginal consistency with the joint
        let t = joint_histogram(&la, &lb).unwrap();
        for i in 0..2 {
            let row: f64 = (0..2).map(|j| t.joint(i, j)).sum();
            assert!((row - t.marginal_a()[i]).abs() < 1e-9);
        }
        assert_eq!(t.n_ab(), 16);
    }

    #[test]
    fn self_information_equals_marginal_entropy() {
        let img = ImageGrid::from_fn(16, 16, |x, y| ((x * 31 + y * 17) % 13) as f64 / 13.0);
        let mi = cmif(&img, &img, 4, 42).unwrap();
        let ls = kmeans_levels(&img, 4, 42).unwrap();
        let e = entropies(&ls, &ls).unwrap();
        assert!((mi - e.h_a).abs() < 1e-9);
    }

    #[test]
    fn symmetric_in_arguments() {
        let a = ImageGrid::from_fn(12, 12, |x, y| ((x * 7 + y * 3) % 11) as f64 / 11.0);
        let b = ImageGrid::from_fn(12, 12, |x, y| ((x * 5 + y * 13) % 9) as f64 / 9.0);
        let ab = cmif(&a, &b, 3, 42).unwrap();
        let ba = cmif(&b, &a, 3, 42).unwrap();
        assert!((ab - ba).abs() < 1e-9);
    }

    #[test]
    fn invariant_under_intensity_flip() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a = ImageGrid::new(32, 32, 1, (0..1024).map(|_| rng.random()).collect()).unwrap();
        let flipped = ImageGrid::new(32, 32, 1, a.data().iter().map(|v| 1.0 - v).collect()).unwrap();
        let self_mi = cmif(&a, &a, 4, 42).unwrap();
        let flip_mi = cmif(&a, &flipped, 4, 42).unwrap();
        assert!((self_mi - flip_mi).abs() < 1e-9, "{self_mi} vs {flip_mi}");
    }

    #[test]
    fn shuffled_pair_has_near_zero_information() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let n = 128 * 128;
        let data: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let mut shuffled = data.clone();
        // Fisher-Yates with the same rng
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            shuffled.swap(i, j);
        }
        let a = ImageGrid::new(128, 128, 1, data).unwrap();
        let b = ImageGrid::new(128, 128, 1, shuffled).unwrap();
        let mi = cmif(&a, &b, 4, 42).unwrap();
        assert!(mi <= 0.05, "shuffled MI {mi}");
        assert!(mi >= 0.0);
    }

    #[test]
    fn entropy_bounds_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        for _ in 0..20 {
            let a = ImageGrid::new(16, 16, 1, (0..256).map(|_| rng.random()).collect()).unwrap();
            let b = ImageGrid::new(16, 16, 1, (0..256).map(|_| rng.random()).collect()).unwrap();
            let la = kmeans_levels(&a, 4, 1).unwrap();
            let lb = kmeans_levels(&b, 3, 1).unwrap();
            let e = entropies(&la, &lb).unwrap();
            assert!(e.h_a >= 0.0 && e.h_a <= (4.0f64).ln() + 1e-9);
            assert!(e.h_b >= 0.0 && e.h_b <= (3.0f64).ln() + 1e-9);
            assert!(e.h_ab <= e.h_a + e.h_b + 1e-9);
            assert!(e.h_ab >= e.h_a.max(e.h_b) - 1e-9);
        }
    }

    #[test]
    fn degenerate_marginal_collapses_joint() {
        let la = labeling(2, 2, 2, vec![0, 1, 0, 1]);
        let lb = LevelSetLabeling::from_parts(2, 2, 1, vec![0; 4], vec![0.5]).unwrap();
        let e = entropies(&la, &lb).unwrap();
        assert_eq!(e.h_b, 0.0);
        assert!((e.h_ab - e.h_a).abs() < 1e-12);
    }
}
