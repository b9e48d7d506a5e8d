//! Encoder training on registered image pairs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::contrastive::checkpoint::EncoderBundle;
use crate::contrastive::encoder::TinyEncoder;
use crate::contrastive::loss::{bnce_loss, BnceConfig, PatchBatch};
use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::optim::Adam;

const VALIDATION_SALT: u64 = 0x76616c69;

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub bundle: EncoderBundle,
    /// `(step, training loss)` per optimization step.
    pub loss_curve: Vec<(usize, f64)>,
    pub val_initial: f64,
    pub val_final: f64,
}

struct Sampler<'a> {
    pairs: &'a [(ImageGrid, ImageGrid)],
    window: usize,
}

impl<'a> Sampler<'a> {
    /// Draws `n` aligned crop pairs of `window x window` pixels.
    fn draw(&self, rng: &mut impl Rng, n: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let pair = &self.pairs[rng.random_range(0..self.pairs.len())];
            let (h, w) = (pair.0.height(), pair.0.width());
            let x0 = rng.random_range(0..=w - self.window);
            let y0 = rng.random_range(0..=h - self.window);
            out.push((crop(&pair.0, x0, y0, self.window), crop(&pair.1, x0, y0, self.window)));
        }
        out
    }
}

fn crop(img: &ImageGrid, x0: usize, y0: usize, side: usize) -> Vec<f64> {
    let c = img.channels();
    let mut out = Vec::with_capacity(side * side * c);
    for y in y0..y0 + side {
        for x in x0..x0 + side {
            for ch in 0..c {
                out.push(img.at(x, y, ch));
            }
        }
    }
    out
}

/// Extracts the center `p x p` features from a `window x window x c` buffer.
fn center_patch(buf: &[f64], window: usize, c: usize, p: usize) -> Vec<f64> {
    let m = (window - p) / 2;
    let mut out = Vec::with_capacity(p * p * c);
    for y in m..m + p {
        for x in m..m + p {
            let base = (y * window + x) * c;
            out.extend_from_slice(&buf[base..base + c]);
        }
    }
    out
}

/// Scatters a `p x p x c` gradient back into the center of a zeroed
/// `window x window x c` buffer.
fn scatter_center(grad_patch: &[f64], window: usize, c: usize, p: usize) -> Vec<f64> {
    let m = (window - p) / 2;
    let mut out = vec![0.0; window * window * c];
    for y in 0..p {
        for x in 0..p {
            let src = (y * p + x) * c;
            let dst = ((y + m) * window + (x + m)) * c;
            out[dst..dst + c].copy_from_slice(&grad_patch[src..src + c]);
        }
    }
    out
}

fn batch_from_crops(
    crops: &[(Vec<f64>, Vec<f64>)],
    enc_a: &TinyEncoder,
    enc_b: &TinyEncoder,
    window: usize,
    p: usize,
) -> Result<PatchBatch> {
    let c = enc_a.out_channels();
    let mut pa = Vec::with_capacity(crops.len() * p * p * c);
    let mut pb = Vec::with_capacity(crops.len() * p * p * c);
    for (ca, cb) in crops {
        let fa = enc_a.forward(ca, window, window);
        let fb = enc_b.forward(cb, window, window);
        pa.extend_from_slice(&center_patch(&fa, window, c, p));
        pb.extend_from_slice(&center_patch(&fb, window, c, p));
    }
    PatchBatch::new(crops.len(), p, c, pa, pb)
}

/// Trains the encoder(s) with Adam on the batch-wise contrastive loss.
///
/// Patches are taken from windows padded by the encoder's receptive-field
/// margin, so the center features equal what a full-image encode produces.
pub fn train_encoder(pairs: &[(ImageGrid, ImageGrid)], cfg: &BnceConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no training pairs".into()));
    }
    let in_ch = cfg.encoder_channels[0];
    for (i, (a, b)) in pairs.iter().enumerate() {
        if !a.same_shape(b) {
            return Err(Error::DimensionMismatch(format!("pair {i} images differ in shape")));
        }
        if a.channels() != in_ch {
            return Err(Error::InvalidInput(format!(
                "pair {i} has {} channels, encoder expects {in_ch}",
                a.channels()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut enc_a = TinyEncoder::random(&cfg.encoder_channels, &mut rng)?;
    let mut enc_b = if cfg.per_modality {
        TinyEncoder::random(&cfg.encoder_channels, &mut rng)?
    } else {
        enc_a.clone()
    };
    let margin = enc_a.margin();
    let window = cfg.patch_size + 2 * margin;
    for (i, (a, _)) in pairs.iter().enumerate() {
        if a.height() < window || a.width() < window {
            return Err(Error::InvalidInput(format!(
                "pair {i} is smaller than the {window}px sampling window"
            )));
        }
    }
    let sampler = Sampler { pairs, window };

    let mut val_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ VALIDATION_SALT);
    let val_crops = sampler.draw(&mut val_rng, cfg.batch_size);
    let val_loss = |ea: &TinyEncoder, eb: &TinyEncoder| -> Result<f64> {
        Ok(bnce_loss(&batch_from_crops(&val_crops, ea, eb, window, cfg.patch_size)?, cfg)?.loss)
    };
    let val_initial = val_loss(&enc_a, &enc_b)?;

    let mut adam_a = Adam::new(cfg.learning_rate, enc_a.param_count());
    let mut adam_b = if cfg.per_modality {
        Some(Adam::new(cfg.learning_rate, enc_b.param_count()))
    } else {
        None
    };
    let mut loss_curve = Vec::with_capacity(cfg.steps);
    let p = cfg.patch_size;
    let c = enc_a.out_channels();
    let patch_len = p * p * c;

    for step in 0..cfg.steps {
        let crops = sampler.draw(&mut rng, cfg.batch_size);
        // Forward with traces kept for backprop.
        let traces_a: Vec<_> = crops.iter().map(|(ca, _)| enc_a.forward_trace(ca, window, window)).collect();
        let traces_b: Vec<_> = crops.iter().map(|(_, cb)| enc_b.forward_trace(cb, window, window)).collect();
        let mut pa = Vec::with_capacity(crops.len() * patch_len);
        let mut pb = Vec::with_capacity(crops.len() * patch_len);
        for t in &traces_a {
            pa.extend_from_slice(&center_patch(t.output(), window, c, p));
        }
        for t in &traces_b {
            pb.extend_from_slice(&center_patch(t.output(), window, c, p));
        }
        let batch = PatchBatch::new(crops.len(), p, c, pa, pb)?;
        let out = bnce_loss(&batch, cfg)?;
        loss_curve.push((step, out.loss));

        let mut grads_a = enc_a.zero_grads();
        let mut grads_b = enc_b.zero_grads();
        for (k, trace) in traces_a.iter().enumerate() {
            let g = scatter_center(&out.grad_a[k * patch_len..(k + 1) * patch_len], window, c, p);
            enc_a.backward(trace, &g, &mut grads_a);
        }
        for (k, trace) in traces_b.iter().enumerate() {
            let g = scatter_center(&out.grad_b[k * patch_len..(k + 1) * patch_len], window, c, p);
            if cfg.per_modality {
                enc_b.backward(trace, &g, &mut grads_b);
            } else {
                // Shared weights: gradients from both modalities accumulate.
                enc_a.backward(trace, &g, &mut grads_a);
            }
        }
        let mut params = enc_a.gather_params();
        adam_a.step(&mut params, &enc_a.flatten_grads(&grads_a));
        enc_a.set_params(&params);
        if let Some(adam_b) = adam_b.as_mut() {
            let mut params_b = enc_b.gather_params();
            adam_b.step(&mut params_b, &enc_b.flatten_grads(&grads_b));
            enc_b.set_params(&params_b);
        } else {
            enc_b = enc_a.clone();
        }
    }

    let val_final = val_loss(&enc_a, &enc_b)?;
    let bundle = if cfg.per_modality {
        EncoderBundle::PerModality { fixed: enc_a, moving: enc_b }
    } else {
        EncoderBundle::Shared(enc_a)
    };
    Ok(TrainOutcome { bundle, loss_curve, val_initial, val_final })
}
