//! Batch-wise contrastive loss over feature patches.
//!
//! Given N registered patch pairs, the features at one spatial position are
//! collected across the batch; each anchor's positive is its cross-modal
//! counterpart at the same position and the negatives are the other batch
//! entries' cross-modal features there. The loss is a temperature-scaled
//! softmax cross-entropy on cosine similarities, symmetrized over the two
//! modalities and averaged over positions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Additive guard under the square root of the feature norm, so similarity
/// stays defined at exactly-zero vectors (e.g. a zero-initialized encoder).
pub const NORM_GUARD: f64 = 1e-8;

/// N aligned patch pairs of `p x p x C` features. `patches_a[k]` and
/// `patches_b[k]` cover identical spatial windows of the two feature maps.
#[derive(Clone, Debug)]
pub struct PatchBatch {
    count: usize,
    patch_size: usize,
    channels: usize,
    patches_a: Vec<f64>,
    patches_b: Vec<f64>,
}

impl PatchBatch {
    pub fn new(
        count: usize,
        patch_size: usize,
        channels: usize,
        patches_a: Vec<f64>,
        patches_b: Vec<f64>,
    ) -> Result<Self> {
        let expect = count * patch_size * patch_size * channels;
        if count == 0 || patch_size == 0 || channels == 0 {
            return Err(Error::InvalidInput("patch batch dimensions must be positive".into()));
        }
        if patches_a.len() != expect || patches_b.len() != expect {
            return Err(Error::DimensionMismatch(format!(
                "patch buffers must have length {expect}"
            )));
        }
        Ok(Self { count, patch_size, channels, patches_a, patches_b })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn patches_a(&self) -> &[f64] {
        &self.patches_a
    }

    pub fn patches_b(&self) -> &[f64] {
        &self.patches_b
    }

    pub(crate) fn patches_a_mut(&mut self) -> &mut [f64] {
        &mut self.patches_a
    }

    #[inline]
    fn base(&self, k: usize, i: usize, j: usize) -> usize {
        ((k * self.patch_size + i) * self.patch_size + j) * self.channels
    }

    /// Feature vector of patch `k` at position `(i, j)` (row, column).
    pub fn feature_a(&self, k: usize, i: usize, j: usize) -> &[f64] {
        let b = self.base(k, i, j);
        &self.patches_a[b..b + self.channels]
    }

    pub fn feature_b(&self, k: usize, i: usize, j: usize) -> &[f64] {
        let b = self.base(k, i, j);
        &self.patches_b[b..b + self.channels]
    }
}

/// Training hyperparameters for the contrastive stage.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct BnceConfig {
    /// Softmax temperature.
    pub tau: f64,
    /// Side length of sampled patches.
    pub patch_size: usize,
    /// Patches per step (batch dimension N).
    pub batch_size: usize,
    pub learning_rate: f64,
    pub steps: usize,
    pub seed: u64,
    /// Channel progression of the encoder, input first, e.g. `[1, 16, 16, 8]`.
    pub encoder_channels: Vec<usize>,
    /// Train one encoder per modality instead of shared weights.
    pub per_modality: bool,
}

impl Default for BnceConfig {
    fn default() -> Self {
        Self {
            tau: 0.5,
            patch_size: 16,
            batch_size: 32,
            learning_rate: 2e-3,
            steps: 200,
            seed: 7,
            encoder_channels: vec![1, 16, 16, 8],
            per_modality: false,
        }
    }
}

impl BnceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::InvalidInput("tau must be positive".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::NeedNegatives);
        }
        if self.patch_size == 0 {
            return Err(Error::InvalidInput("patch_size must be positive".into()));
        }
        if self.encoder_channels.len() < 2 {
            return Err(Error::InvalidInput("encoder_channels needs at least two entries".into()));
        }
        Ok(())
    }
}

/// Collects, for a position `(i, j)`, the per-patch feature vectors of both
/// modalities across the batch.
pub fn gather_position_vectors(
    batch: &PatchBatch,
    i: usize,
    j: usize,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    if i >= batch.patch_size() || j >= batch.patch_size() {
        return Err(Error::InvalidInput(format!(
            "position ({i},{j}) outside {0}x{0} patch",
            batch.patch_size()
        )));
    }
    let xs = (0..batch.count()).map(|k| batch.feature_a(k, i, j).to_vec()).collect();
    let ys = (0..batch.count()).map(|k| batch.feature_b(k, i, j).to_vec()).collect();
    Ok((xs, ys))
}

/// Plain cosine similarity; errors on an exactly-zero vector.
pub fn cosine_sim(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch("cosine_sim vector lengths differ".into()));
    }
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::ZeroFeatureVector);
    }
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok(dot / (nx * ny))
}

#[derive(Clone, Debug)]
pub struct BnceOutput {
    pub loss: f64,
    /// Gradient w.r.t. every entry of `patches_a`, same layout.
    pub grad_a: Vec<f64>,
    pub grad_b: Vec<f64>,
}

/// Loss and analytic gradients for a patch batch.
pub fn bnce_loss(batch: &PatchBatch, cfg: &BnceConfig) -> Result<BnceOutput> {
    if batch.count() < 2 {
        return Err(Error::NeedNegatives);
    }
    if !(cfg.tau > 0.0) {
        return Err(Error::InvalidInput("tau must be positive".into()));
    }
    let n = batch.count();
    let p = batch.patch_size();
    let c = batch.channels();
    let inv_tau = 1.0 / cfg.tau;
    let mut grad_a = vec![0.0; batch.patches_a.len()];
    let mut grad_b = vec![0.0; batch.patches_b.len()];
    let mut total = 0.0;

    // Per-position scratch.
    let mut norm_a = vec![0.0; n];
    let mut norm_b = vec![0.0; n];
    let mut unit_a = vec![0.0; n * c];
    let mut unit_b = vec![0.0; n * c];
    let mut sims = vec![0.0; n * n];
    let mut grad_s = vec![0.0; n * n];
    let mut probs = vec![0.0; n];

    for i in 0..p {
        for j in 0..p {
            for k in 0..n {
                let xa = batch.feature_a(k, i, j);
                let xb = batch.feature_b(k, i, j);
                let na = (xa.iter().map(|v| v * v).sum::<f64>() + NORM_GUARD).sqrt();
                let nb = (xb.iter().map(|v| v * v).sum::<f64>() + NORM_GUARD).sqrt();
                norm_a[k] = na;
                norm_b[k] = nb;
                for ch in 0..c {
                    unit_a[k * c + ch] = xa[ch] / na;
                    unit_b[k * c + ch] = xb[ch] / nb;
                }
            }
            for k in 0..n {
                for l in 0..n {
                    let mut dot = 0.0;
                    for ch in 0..c {
                        dot += unit_a[k * c + ch] * unit_b[l * c + ch];
                    }
                    sims[k * n + l] = dot;
                }
            }
            grad_s.iter_mut().for_each(|g| *g = 0.0);
            // Each anchor contributes -ln softmax(positive) weighted so the
            // total is the mean over both directions, anchors, and positions.
            let scale = 1.0 / (2.0 * n as f64 * (p * p) as f64);
            // Anchor on A: softmax over the row sims[k][:].
            for k in 0..n {
                let row = &sims[k * n..(k + 1) * n];
                let m = row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                let mut z = 0.0;
                for l in 0..n {
                    probs[l] = ((row[l] - m) * inv_tau).exp();
                    z += probs[l];
                }
                total += -(probs[k] / z).ln() * scale;
                for l in 0..n {
                    let soft = probs[l] / z;
                    let delta = if l == k { 1.0 } else { 0.0 };
                    grad_s[k * n + l] += (soft - delta) * inv_tau * scale;
                }
            }
            // Anchor on B: softmax over the column sims[:][k].
            for k in 0..n {
                let m = (0..n).map(|l| sims[l * n + k]).fold(f64::NEG_INFINITY, f64::max);
                let mut z = 0.0;
                for l in 0..n {
                    probs[l] = ((sims[l * n + k] - m) * inv_tau).exp();
                    z += probs[l];
                }
                total += -(probs[k] / z).ln() * scale;
                for l in 0..n {
                    let soft = probs[l] / z;
                    let delta = if l == k { 1.0 } else { 0.0 };
                    grad_s[l * n + k] += (soft - delta) * inv_tau * scale;
                }
            }
            // Chain rule through the guarded cosine: for s = u_k . v_l,
            // ds/dx_k = (v_l - s u_k) / ||x_k||_g and symmetrically for y_l.
            for k in 0..n {
                let ga = &mut grad_a[batch.base(k, i, j)..batch.base(k, i, j) + c];
                for l in 0..n {
                    let g = grad_s[k * n + l];
                    if g == 0.0 {
                        continue;
                    }
                    let s = sims[k * n + l];
                    for ch in 0..c {
                        ga[ch] += g * (unit_b[l * c + ch] - s * unit_a[k * c + ch]) / norm_a[k];
                    }
                }
            }
            for l in 0..n {
                let gb = &mut grad_b[batch.base(l, i, j)..batch.base(l, i, j) + c];
                for k in 0..n {
                    let g = grad_s[k * n + l];
                    if g == 0.0 {
                        continue;
                    }
                    let s = sims[k * n + l];
                    for ch in 0..c {
                        gb[ch] += g * (unit_a[k * c + ch] - s * unit_b[l * c + ch]) / norm_b[l];
                    }
                }
            }
        }
    }
    Ok(BnceOutput { loss: total, grad_a, grad_b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_batch(n: usize, p: usize, c: usize, seed: u64) -> PatchBatch {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = n * p * p * c;
        let a: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0) * 2.0).collect();
        let b: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0) * 2.0).collect();
        PatchBatch::new(n, p, c, a, b).unwrap()
    }

    fn cfg(tau: f64) -> BnceConfig {
        BnceConfig { tau, ..BnceConfig::default() }
    }

    #[test]
    fn cosine_examples() {
        let v = [0.3, -0.7, 1.1];
        assert!((cosine_sim(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine_sim(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let s = cosine_sim(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(matches!(cosine_sim(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroFeatureVector)));
    }

    #[test]
    fn gather_reads_by_index() {
        // patch k filled with the constant k
        let n = 3;
        let p = 2;
        let c = 2;
        let fill = |k: usize| vec![k as f64; p * p * c];
        let a: Vec<f64> = (0..n).flat_map(fill).collect();
        let batch = PatchBatch::new(n, p, c, a.clone(), a).unwrap();
        let (xs, ys) = gather_position_vectors(&batch, 1, 0).unwrap();
        for k in 0..n {
            assert!(xs[k].iter().all(|&v| v == k as f64));
            assert!(ys[k].iter().all(|&v| v == k as f64));
        }
        assert!(gather_position_vectors(&batch, 2, 0).is_err());
        let singleton = PatchBatch::new(1, 1, 1, vec![5.0], vec![6.0]).unwrap();
        let (xs, ys) = gather_position_vectors(&singleton, 0, 0).unwrap();
        assert_eq!((xs.len(), ys.len()), (1, 1));
    }

    #[test]
    fn orthonormal_batch_has_closed_form_loss() {
        // x_k = y_k = 2 e_k: positives at similarity 1, negatives at 0.
        let n = 4;
        let c = 4;
        let mut a = vec![0.0; n * c];
        for k in 0..n {
            a[k * c + k] = 2.0;
        }
        let batch = PatchBatch::new(n, 1, c, a.clone(), a).unwrap();
        let out = bnce_loss(&batch, &cfg(0.5)).unwrap();
        let e2 = (1.0f64 / 0.5).exp();
        let expected = -(e2 / (e2 + 3.0)).ln();
        assert!((out.loss - expected).abs() < 1e-6, "{} vs {expected}", out.loss);
    }

    #[test]
    fn uniform_batch_gives_ln2() {
        let v = vec![0.4, -0.2, 0.9];
        let a: Vec<f64> = v.iter().cloned().cycle().take(2 * 3).collect();
        let batch = PatchBatch::new(2, 1, 3, a.clone(), a).unwrap();
        let out = bnce_loss(&batch, &cfg(0.5)).unwrap();
        assert!((out.loss - std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn needs_two_samples() {
        let batch = PatchBatch::new(1, 1, 2, vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        assert!(matches!(bnce_loss(&batch, &cfg(0.5)), Err(Error::NeedNegatives)));
    }

    #[test]
    fn loss_is_nonnegative() {
        for seed in 0..5 {
            let batch = random_batch(4, 2, 3, seed);
            assert!(bnce_loss(&batch, &cfg(0.5)).unwrap().loss >= 0.0);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let c = cfg(0.5);
        for seed in [1u64, 2, 3] {
            let batch = random_batch(4, 2, 3, seed);
            let out = bnce_loss(&batch, &c).unwrap();
            let h = 1e-5;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
            for _ in 0..8 {
                let idx = rng.random_range(0..batch.patches_a().len());
                let mut pa = batch.patches_a().to_vec();
                pa[idx] += h;
                let up = bnce_loss(
                    &PatchBatch::new(4, 2, 3, pa.clone(), batch.patches_b().to_vec()).unwrap(),
                    &c,
                )
                .unwrap()
                .loss;
                pa[idx] -= 2.0 * h;
                let dn = bnce_loss(
                    &PatchBatch::new(4, 2, 3, pa, batch.patches_b().to_vec()).unwrap(),
                    &c,
                )
                .unwrap()
                .loss;
                let fd = (up - dn) / (2.0 * h);
                let an = out.grad_a[idx];
                let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-8);
                assert!(rel < 1e-4, "seed {seed} idx {idx}: fd {fd} vs {an}");
            }
        }
    }

    #[test]
    fn scale_invariance_of_single_vector() {
        let c = cfg(0.5);
        let batch = random_batch(4, 2, 3, 9);
        let base = bnce_loss(&batch, &c).unwrap().loss;
        for alpha in [0.5, 2.0, 7.0] {
            let mut scaled = batch.clone();
            let b = scaled.base(2, 1, 1);
            for ch in 0..3 {
                scaled.patches_a_mut()[b + ch] *= alpha;
            }
            let loss = bnce_loss(&scaled, &c).unwrap().loss;
            assert!((loss - base).abs() < 1e-9, "alpha {alpha}: {loss} vs {base}");
        }
    }

    #[test]
    fn permutation_equivariance() {
        let c = cfg(0.5);
        let batch = random_batch(5, 2, 3, 4);
        let base = bnce_loss(&batch, &c).unwrap().loss;
        let perm = [3usize, 0, 4, 1, 2];
        let stride = 2 * 2 * 3;
        let mut pa = vec![0.0; 5 * stride];
        let mut pb = vec![0.0; 5 * stride];
        for (dst, &src) in perm.iter().enumerate() {
            pa[dst * stride..(dst + 1) * stride]
                .copy_from_slice(&batch.patches_a()[src * stride..(src + 1) * stride]);
            pb[dst * stride..(dst + 1) * stride]
                .copy_from_slice(&batch.patches_b()[src * stride..(src + 1) * stride]);
        }
        let permuted = PatchBatch::new(5, 2, 3, pa, pb).unwrap();
        let loss = bnce_loss(&permuted, &c).unwrap().loss;
        assert!((loss - base).abs() < 1e-12);
    }
}
