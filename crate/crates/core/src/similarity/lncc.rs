//! Local normalized cross-correlation: windowed Pearson correlation averaged
//! over all positions where the window fits inside the image.

use crate::error::{Error, Result};
use crate::grid::ImageGrid;

/// Separable sliding box sum of radius `r` with zero padding: output `j` is
/// the sum of `src` over the `(2r+1)^2` neighborhood clipped to the grid.
pub(crate) fn box_sum(src: &[f64], h: usize, w: usize, r: usize) -> Vec<f64> {
    let mut tmp = vec![0.0; h * w];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        let out = &mut tmp[y * w..(y + 1) * w];
        let mut acc = 0.0;
        for x in 0..r.min(w) {
            acc += row[x];
        }
        for x in 0..w {
            if x + r < w {
                acc += row[x + r];
            }
            out[x] = acc;
            if x >= r {
                acc -= row[x - r];
            }
        }
    }
    let mut out = vec![0.0; h * w];
    for x in 0..w {
        let mut acc = 0.0;
        for y in 0..r.min(h) {
            acc += tmp[y * w + x];
        }
        for y in 0..h {
            if y + r < h {
                acc += tmp[(y + r) * w + x];
            }
            out[y * w + x] = acc;
            if y >= r {
                acc -= tmp[(y - r) * w + x];
            }
        }
    }
    out
}

fn validate_window(h: usize, w: usize, window: usize) -> Result<usize> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::InvalidInput(format!("window {window} must be odd and positive")));
    }
    if window > h.min(w) {
        return Err(Error::InvalidInput(format!(
            "window {window} exceeds image extent {}x{}",
            h, w
        )));
    }
    Ok(window / 2)
}

/// Mean windowed correlation over flat single-channel buffers.
pub(crate) fn lncc_mean(a: &[f64], b: &[f64], h: usize, w: usize, window: usize, eps: f64) -> Result<f64> {
    let r = validate_window(h, w, window)?;
    let n = (window * window) as f64;
    let sa = box_sum(a, h, w, r);
    let sb = box_sum(b, h, w, r);
    let saa = box_sum(&mul(a, a), h, w, r);
    let sbb = box_sum(&mul(b, b), h, w, r);
    let sab = box_sum(&mul(a, b), h, w, r);
    let mut acc = 0.0;
    let mut count = 0usize;
    for y in r..h - r {
        for x in r..w - r {
            let i = y * w + x;
            let ma = sa[i] / n;
            let mb = sb[i] / n;
            let va = (saa[i] / n - ma * ma).max(0.0);
            let vb = (sbb[i] / n - mb * mb).max(0.0);
            let cov = sab[i] / n - ma * mb;
            let denom = (va.sqrt() * vb.sqrt()).max(eps);
            acc += cov / denom;
            count += 1;
        }
    }
    Ok(acc / count as f64)
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// Mean windowed correlation plus its gradient with respect to `b`.
///
/// For a window with statistics (mu_a, mu_b, sigma_a, sigma_b) and denominator
/// `D = max(sigma_a sigma_b, eps)`, the per-pixel contribution is
/// `(a_j - mu_a)/(n D) - corr (b_j - mu_b)/(n sigma_b^2)` (second term absent
/// when the guard is active). Summing over the windows containing each pixel
/// is itself a box filter over window-center fields.
pub(crate) fn lncc_mean_and_grad_b(
    a: &[f64],
    b: &[f64],
    h: usize,
    w: usize,
    window: usize,
    eps: f64,
) -> Result<(f64, Vec<f64>)> {
    let r = validate_window(h, w, window)?;
    let n = (window * window) as f64;
    let sa = box_sum(a, h, w, r);
    let sb = box_sum(b, h, w, r);
    let saa = box_sum(&mul(a, a), h, w, r);
    let sbb = box_sum(&mul(b, b), h, w, r);
    let sab = box_sum(&mul(a, b), h, w, r);

    let mut alpha = vec![0.0; h * w];
    let mut alpha_mu = vec![0.0; h * w];
    let mut beta = vec![0.0; h * w];
    let mut beta_mu = vec![0.0; h * w];
    let mut acc = 0.0;
    let mut count = 0usize;
    for y in r..h - r {
        for x in r..w - r {
            let i = y * w + x;
            let ma = sa[i] / n;
            let mb = sb[i] / n;
            let va = (saa[i] / n - ma * ma).max(0.0);
            let vb = (sbb[i] / n - mb * mb).max(0.0);
            let cov = sab[i] / n - ma * mb;
            let sig = va.sqrt() * vb.sqrt();
            let denom = sig.max(eps);
            let corr = cov / denom;
            acc += corr;
            count += 1;
            let al = 1.0 / (n * denom);
            alpha[i] = al;
            alpha_mu[i] = al * ma;
            if sig >= eps {
                let be = corr / (n * vb.max(1e-300));
                beta[i] = be;
                beta_mu[i] = be * mb;
            }
        }
    }
    let inv_count = 1.0 / count as f64;
    let box_alpha = box_sum(&alpha, h, w, r);
    let box_alpha_mu = box_sum(&alpha_mu, h, w, r);
    let box_beta = box_sum(&beta, h, w, r);
    let box_beta_mu = box_sum(&beta_mu, h, w, r);
    let mut grad = vec![0.0; h * w];
    for i in 0..h * w {
        grad[i] = (a[i] * box_alpha[i] - box_alpha_mu[i] - b[i] * box_beta[i] + box_beta_mu[i]) * inv_count;
    }
    Ok((acc * inv_count, grad))
}

/// LNCC between two single-channel images; the returned mean correlation is
/// clamped to `[-1, 1]`.
pub fn lncc(a: &ImageGrid, b: &ImageGrid, window: usize, epsilon: f64) -> Result<f64> {
    if a.channels() != 1 || b.channels() != 1 {
        return Err(Error::InvalidInput("lncc expects single-channel images".into()));
    }
    if a.height() != b.height() || a.width() != b.width() {
        return Err(Error::DimensionMismatch(format!(
            "lncc images differ: {}x{} vs {}x{}",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        )));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    let v = lncc_mean(a.data(), b.data(), a.height(), a.width(), window, epsilon)?;
    Ok(v.clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_img(h: usize, w: usize, seed: u64) -> ImageGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageGrid::new(h, w, 1, (0..h * w).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    /// Naive per-window reference: means, variances, covariance from scratch.
    fn lncc_naive(a: &ImageGrid, b: &ImageGrid, window: usize, eps: f64) -> f64 {
        let (h, w) = (a.height(), a.width());
        let r = window / 2;
        let n = (window * window) as f64;
        let mut acc = 0.0;
        let mut count = 0;
        for cy in r..h - r {
            for cx in r..w - r {
                let mut ma = 0.0;
                let mut mb = 0.0;
                for y in cy - r..=cy + r {
                    for x in cx - r..=cx + r {
                        ma += a.at(x, y, 0);
                        mb += b.at(x, y, 0);
                    }
                }
                ma /= n;
                mb /= n;
                let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
                for y in cy - r..=cy + r {
                    for x in cx - r..=cx + r {
                        let da = a.at(x, y, 0) - ma;
                        let db = b.at(x, y, 0) - mb;
                        va += da * da;
                        vb += db * db;
                        cov += da * db;
                    }
                }
                va /= n;
                vb /= n;
                cov /= n;
                acc += cov / (va.sqrt() * vb.sqrt()).max(eps);
                count += 1;
            }
        }
        acc / count as f64
    }

    #[test]
    fn self_correlation_is_one() {
        let img = random_img(12, 15, 3);
        assert!((lncc(&img, &img, 5, 1e-5).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn negated_image_gives_minus_one() {
        let img = random_img(10, 10, 4);
        let neg = ImageGrid::new(10, 10, 1, img.data().iter().map(|v| 1.0 - v).collect()).unwrap();
        assert!((lncc(&img, &neg, 5, 1e-5).unwrap() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn matches_naive_oracle() {
        for seed in 0..6u64 {
            let h = 9 + (seed as usize % 3) * 4;
            let w = 9 + (seed as usize % 4) * 3;
            let a = random_img(h, w, seed * 2 + 1);
            let b = random_img(h, w, seed * 2 + 2);
            let fast = lncc(&a, &b, 3, 1e-5).unwrap();
            let slow = lncc_naive(&a, &b, 3, 1e-5);
            assert!((fast - slow).abs() < 1e-10, "seed {seed}: {fast} vs {slow}");
        }
    }

    #[test]
    fn symmetry_and_affine_intensity_invariance() {
        let a = random_img(11, 11, 8);
        let b = random_img(11, 11, 9);
        let ab = lncc(&a, &b, 5, 1e-5).unwrap();
        let ba = lncc(&b, &a, 5, 1e-5).unwrap();
        assert!((ab - ba).abs() < 1e-12);
        let rescaled =
            ImageGrid::new(11, 11, 1, b.data().iter().map(|v| 3.5 * v + 0.25).collect()).unwrap();
        let ar = lncc(&a, &rescaled, 5, 1e-5).unwrap();
        assert!((ab - ar).abs() < 1e-9, "{ab} vs {ar}");
    }

    #[test]
    fn window_larger_than_image_errors() {
        let img = random_img(6, 6, 1);
        assert!(lncc(&img, &img, 7, 1e-5).is_err());
        assert!(lncc(&img, &img, 4, 1e-5).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let a = random_img(9, 8, 21);
        let b = random_img(9, 8, 22);
        let (_, grad) = lncc_mean_and_grad_b(a.data(), b.data(), 9, 8, 3, 1e-5).unwrap();
        let h = 1e-6;
        let mut bd = b.data().to_vec();
        for idx in [0usize, 10, 35, 50, 71] {
            bd[idx] += h;
            let up = lncc_mean(a.data(), &bd, 9, 8, 3, 1e-5).unwrap();
            bd[idx] -= 2.0 * h;
            let dn = lncc_mean(a.data(), &bd, 9, 8, 3, 1e-5).unwrap();
            bd[idx] += h;
            let fd = (up - dn) / (2.0 * h);
            assert!(
                (fd - grad[idx]).abs() < 1e-6 * fd.abs().max(1.0),
                "idx {idx}: {fd} vs {}",
                grad[idx]
            );
        }
    }
}
