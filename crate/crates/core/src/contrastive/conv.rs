//! 3x3 stride-1 zero-padded convolution layers with manual backprop.

use rand::Rng;

use crate::rand_util::randn;

/// Weights are stored as `[out][ky][kx][in]` so the innermost loop runs over
/// input channels contiguously.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ConvGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    pub fn zeros(in_channels: usize, out_channels: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            weights: vec![0.0; out_channels * 9 * in_channels],
            bias: vec![0.0; out_channels],
        }
    }

    /// He-normal initialization (fan-in = 9 * in_channels), zero bias.
    pub fn random(in_channels: usize, out_channels: usize, rng: &mut impl Rng) -> Self {
        let std = (2.0 / (9 * in_channels) as f64).sqrt();
        let weights = (0..out_channels * 9 * in_channels).map(|_| std * randn(rng)).collect();
        Self { in_channels, out_channels, weights, bias: vec![0.0; out_channels] }
    }

    #[inline]
    fn w_base(&self, co: usize, ky: usize, kx: usize) -> usize {
        ((co * 3 + ky) * 3 + kx) * self.in_channels
    }

    /// Forward pass over an `h x w x in_channels` buffer; output keeps the
    /// spatial dimensions (zero padding 1).
    pub fn forward(&self, input: &[f64], h: usize, w: usize) -> Vec<f64> {
        let ic = self.in_channels;
        let oc = self.out_channels;
        debug_assert_eq!(input.len(), h * w * ic);
        let mut out = vec![0.0; h * w * oc];
        for y in 0..h {
            for x in 0..w {
                let out_base = (y * w + x) * oc;
                out[out_base..out_base + oc].copy_from_slice(&self.bias);
                for ky in 0..3usize {
                    let sy = y as i64 + ky as i64 - 1;
                    if sy < 0 || sy >= h as i64 {
                        continue;
                    }
                    for kx in 0..3usize {
                        let sx = x as i64 + kx as i64 - 1;
                        if sx < 0 || sx >= w as i64 {
                            continue;
                        }
                        let in_base = (sy as usize * w + sx as usize) * ic;
                        for co in 0..oc {
                            let wb = self.w_base(co, ky, kx);
                            let mut acc = 0.0;
                            for ci in 0..ic {
                                acc += input[in_base + ci] * self.weights[wb + ci];
                            }
                            out[out_base + co] += acc;
                        }
                    }
                }
            }
        }
        out
    }

    /// Backprop: given the loss gradient w.r.t. this layer's output, returns
    /// the gradient w.r.t. its input and accumulates weight/bias gradients.
    pub fn backward(
        &self,
        input: &[f64],
        grad_out: &[f64],
        h: usize,
        w: usize,
        grads: &mut ConvGrads,
    ) -> Vec<f64> {
        let ic = self.in_channels;
        let oc = self.out_channels;
        debug_assert_eq!(input.len(), h * w * ic);
        debug_assert_eq!(grad_out.len(), h * w * oc);
        let mut grad_in = vec![0.0; h * w * ic];
        for y in 0..h {
            for x in 0..w {
                let out_base = (y * w + x) * oc;
                for co in 0..oc {
                    grads.bias[co] += grad_out[out_base + co];
                }
                for ky in 0..3usize {
                    let sy = y as i64 + ky as i64 - 1;
                    if sy < 0 || sy >= h as i64 {
                        continue;
                    }
                    for kx in 0..3usize {
                        let sx = x as i64 + kx as i64 - 1;
                        if sx < 0 || sx >= w as i64 {
                            continue;
                        }
                        let in_base = (sy as usize * w + sx as usize) * ic;
                        for co in 0..oc {
                            let g = grad_out[out_base + co];
                            if g == 0.0 {
                                continue;
                            }
                            let wb = self.w_base(co, ky, kx);
                            for ci in 0..ic {
                                grad_in[in_base + ci] += g * self.weights[wb + ci];
                                grads.weights[wb + ci] += g * input[in_base + ci];
                            }
                        }
                    }
                }
            }
        }
        grad_in
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}
