//! Differentiable mutual-information surrogate: intensities are soft-assigned
//! to K-means centroid bins with a triangular (linear-interpolation) kernel,
//! so MI admits a gradient w.r.t. the pixel values. At zero kernel width this
//! reduces to the hard-label histogram MI.

use crate::similarity::kmeans::LevelSetLabeling;

/// Bin centers for soft assignment, taken from a clustering's centroids.
#[derive(Clone, Debug)]
pub struct SoftBins {
    centers: Vec<f64>,
}

/// Soft assignment of one value: up to two adjacent bins with weights that
/// sum to 1, plus the weight derivatives w.r.t. the value.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Assignment {
    pub bin_lo: usize,
    pub w_lo: f64,
    pub dw_lo: f64,
    /// Equal to `bin_lo` when the value clamps to an extreme bin.
    pub bin_hi: usize,
    pub w_hi: f64,
    pub dw_hi: f64,
}

impl SoftBins {
    pub fn from_labeling(labeling: &LevelSetLabeling) -> Self {
        Self { centers: labeling.centroids().to_vec() }
    }

    pub fn from_centers(centers: Vec<f64>) -> Self {
        debug_assert!(centers.windows(2).all(|w| w[0] <= w[1]));
        Self { centers }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub(crate) fn assign(&self, v: f64) -> Assignment {
        let c = &self.centers;
        let k = c.len();
        if v <= c[0] || k == 1 {
            return Assignment { bin_lo: 0, w_lo: 1.0, dw_lo: 0.0, bin_hi: 0, w_hi: 0.0, dw_hi: 0.0 };
        }
        if v >= c[k - 1] {
            return Assignment {
                bin_lo: k - 1,
                w_lo: 1.0,
                dw_lo: 0.0,
                bin_hi: k - 1,
                w_hi: 0.0,
                dw_hi: 0.0,
            };
        }
        // c[i] < v <= c[i+1]
        let mut i = 0;
        while v > c[i + 1] {
            i += 1;
        }
        let span = c[i + 1] - c[i];
        if span <= 0.0 {
            return Assignment { bin_lo: i, w_lo: 1.0, dw_lo: 0.0, bin_hi: i, w_hi: 0.0, dw_hi: 0.0 };
        }
        let t = (v - c[i]) / span;
        Assignment {
            bin_lo: i,
            w_lo: 1.0 - t,
            dw_lo: -1.0 / span,
            bin_hi: i + 1,
            w_hi: t,
            dw_hi: 1.0 / span,
        }
    }
}

/// Soft-binned mutual information of two equally sized value buffers, nats.
pub fn soft_mutual_information(a: &[f64], bins_a: &SoftBins, b: &[f64], bins_b: &SoftBins) -> f64 {
    soft_mi_impl(a, bins_a, b, bins_b, None)
}

/// Soft MI together with its gradient w.r.t. the `b` values.
pub fn soft_mi_with_grad_b(
    a: &[f64],
    bins_a: &SoftBins,
    b: &[f64],
    bins_b: &SoftBins,
) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; b.len()];
    let mi = soft_mi_impl(a, bins_a, b, bins_b, Some(&mut grad));
    (mi, grad)
}

fn soft_mi_impl(
    a: &[f64],
    bins_a: &SoftBins,
    b: &[f64],
    bins_b: &SoftBins,
    grad_b: Option<&mut Vec<f64>>,
) -> f64 {
    assert_eq!(a.len(), b.len());
    let (ka, kb) = (bins_a.len(), bins_b.len());
    let n = a.len() as f64;
    let inv_n = 1.0 / n;
    let assigns_a: Vec<Assignment> = a.iter().map(|&v| bins_a.assign(v)).collect();
    let assigns_b: Vec<Assignment> = b.iter().map(|&v| bins_b.assign(v)).collect();

    let mut joint = vec![0.0; ka * kb];
    let mut pa = vec![0.0; ka];
    let mut pb = vec![0.0; kb];
    for (aa, ab) in assigns_a.iter().zip(assigns_b.iter()) {
        for (ia, wa) in [(aa.bin_lo, aa.w_lo), (aa.bin_hi, aa.w_hi)] {
            if wa == 0.0 {
                continue;
            }
            pa[ia] += wa * inv_n;
            for (ib, wb) in [(ab.bin_lo, ab.w_lo), (ab.bin_hi, ab.w_hi)] {
                if wb == 0.0 {
                    continue;
                }
                joint[ia * kb + ib] += wa * wb * inv_n;
            }
        }
        for (ib, wb) in [(ab.bin_lo, ab.w_lo), (ab.bin_hi, ab.w_hi)] {
            if wb != 0.0 {
                pb[ib] += wb * inv_n;
            }
        }
    }

    let mut mi = 0.0;
    for ia in 0..ka {
        for ib in 0..kb {
            let p = joint[ia * kb + ib];
            if p > 0.0 {
                mi += p * (p / (pa[ia] * pb[ib])).ln();
            }
        }
    }

    if let Some(grad) = grad_b {
        // dMI/dP(i,j) = ln(P/(PA PB)) - 1; the -1 cancels because soft
        // weights sum to one per pixel, so their derivatives sum to zero.
        const FLOOR: f64 = 1e-12;
        let log_term = |ia: usize, ib: usize| -> f64 {
            let p = joint[ia * kb + ib].max(FLOOR);
            (p / (pa[ia].max(FLOOR) * pb[ib].max(FLOOR))).ln()
        };
        for (px, (aa, ab)) in assigns_a.iter().zip(assigns_b.iter()).enumerate() {
            let mut g = 0.0;
            for (ia, wa) in [(aa.bin_lo, aa.w_lo), (aa.bin_hi, aa.w_hi)] {
                if wa == 0.0 {
                    continue;
                }
                for (ib, dwb) in [(ab.bin_lo, ab.dw_lo), (ab.bin_hi, ab.dw_hi)] {
                    if dwb == 0.0 {
                        continue;
                    }
                    g += wa * dwb * log_term(ia, ib);
                }
            }
            grad[px] = g * inv_n;
        }
    }
    mi
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bins4() -> SoftBins {
        SoftBins::from_centers(vec![0.1, 0.35, 0.6, 0.9])
    }

    #[test]
    fn weights_sum_to_one() {
        let bins = bins4();
        for v in [-0.5, 0.0, 0.1, 0.2, 0.35, 0.5, 0.89, 0.9, 2.0] {
            let a = bins.assign(v);
            assert!((a.w_lo + a.w_hi - 1.0).abs() < 1e-12, "v={v}");
        }
    }

    #[test]
    fn self_information_is_positive_and_symmetricish() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a: Vec<f64> = (0..512).map(|_| rng.random()).collect();
        let bins = bins4();
        let mi_self = soft_mutual_information(&a, &bins, &a, &bins);
        let b: Vec<f64> = (0..512).map(|_| rng.random()).collect();
        let mi_cross = soft_mutual_information(&a, &bins, &b, &bins);
        assert!(mi_self > mi_cross);
        assert!(mi_cross >= -1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a: Vec<f64> = (0..256).map(|_| rng.random()).collect();
        let mut b: Vec<f64> = (0..256).map(|_| rng.random()).collect();
        let bins_a = bins4();
        let bins_b = SoftBins::from_centers(vec![0.2, 0.5, 0.8]);
        let (_, grad) = soft_mi_with_grad_b(&a, &bins_a, &b, &bins_b);
        let h = 1e-6;
        for idx in [3usize, 50, 128, 255] {
            b[idx] += h;
            let up = soft_mutual_information(&a, &bins_a, &b, &bins_b);
            b[idx] -= 2.0 * h;
            let dn = soft_mutual_information(&a, &bins_a, &b, &bins_b);
            b[idx] += h;
            let fd = (up - dn) / (2.0 * h);
            assert!(
                (fd - grad[idx]).abs() < 1e-6 * fd.abs().max(1.0),
                "idx {idx}: fd {fd} vs {}",
                grad[idx]
            );
        }
    }
}
